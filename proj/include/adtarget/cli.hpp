#pragma once

// Command-line front end. run() is the whole program minus main(), so tests
// can drive it in-process with string streams.
//
// Exit codes: 0 ok, 1 usage error, 2 validation failure, 3 runtime/domain error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adtarget/errors.hpp"
#include "adtarget/report.hpp"
#include "adtarget/stats_model.hpp"
#include "adtarget/strategy_engine.hpp"

namespace adtarget::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kJobsEnv = "ADTARGET_JOBS";

struct RunConfig {
  std::string data_path;
  std::string input_format;  // "", "json", "csv"
  std::string unit;          // "", "fraction", "percent"
  double eps = kDefaultEpsNorm;
  std::optional<double> coverage_floor;
  std::vector<std::string> exclusions;
  std::size_t grid_points = 50;
  std::string grid_file;
  std::string groups_file;
  std::string out_path;
  std::string format;
  std::string matrix_out;
  std::string freq_out;
  std::string schema = "catalog";
  std::uint64_t seed = 7;
  double concentration = 1.0;
  std::string sweep_path;
  unsigned jobs = 1;
  std::optional<double> buy_rate;
  std::optional<std::uint64_t> audience;
  std::optional<double> price;
  std::optional<double> cost;
  std::optional<double> budget;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

inline StatsDataset load(const RunConfig& cfg) {
  LoadOptions opts;
  if (!cfg.unit.empty()) opts.unit = parse_unit(cfg.unit);
  std::optional<DataFormat> fmt;
  if (cfg.input_format == "json") fmt = DataFormat::json;
  if (cfg.input_format == "csv") fmt = DataFormat::csv;
  auto ds = load_dataset_file(cfg.data_path, fmt, opts);
  if (cfg.buy_rate) {
    if (!(*cfg.buy_rate >= 0.0 && *cfg.buy_rate <= 1.0)) throw DomainError("--buy-rate must lie in [0,1]");
    ds.buy_rate = cfg.buy_rate;
  }
  if (cfg.audience) {
    if (*cfg.audience == 0) throw DomainError("--audience must be positive");
    ds.audience_count = cfg.audience;
  }
  if (cfg.price) ds.price = cfg.price;
  if (cfg.cost) ds.unit_cost = cfg.cost;
  if (cfg.budget) ds.budget = cfg.budget;
  return ds;
}

inline void print_violations(const ValidationReport& report, std::ostream& os) {
  for (const auto& v : report.violations) {
    os << (v.feature.empty() ? std::string("dataset") : "feature '" + v.feature + "'") << ": " << v.message << "\n";
  }
}

// Loads and validates; on violations prints them and returns nullopt.
inline std::optional<StatsDataset> load_valid(const RunConfig& cfg, std::ostream& err) {
  auto ds = load(cfg);
  auto report = validate(ds, cfg.eps);
  if (!report.valid()) {
    print_violations(report, err);
    return std::nullopt;
  }
  return std::move(*report.renormalized);
}

inline std::vector<double> read_grid(const std::string& path) {
  std::vector<double> grid;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto fields = adtarget::detail::csv_split(line);
    if (!fields) throw ParseError("line " + std::to_string(lineno), "bad grid line");
    for (const auto& f : *fields) {
      if (f.empty()) continue;
      auto v = adtarget::detail::parse_double(f);
      if (!v) throw ParseError("line " + std::to_string(lineno), "not a number: '" + f + "'");
      grid.push_back(*v);
    }
  }
  return grid;
}

inline std::vector<std::vector<std::string>> read_groups(const std::string& path) {
  auto text = read_file(path);
  try {
    return nlohmann::json::parse(text).get<std::vector<std::vector<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("groups file must be a JSON array of arrays of feature names");
  }
}

inline unsigned default_jobs() {
  if (const char* env = std::getenv(kJobsEnv)) {
    try {
      int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return 1;
}

inline std::set<std::string> exclusion_set(const RunConfig& cfg) {
  return std::set<std::string>(cfg.exclusions.begin(), cfg.exclusions.end());
}

inline int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto ds = load(cfg);
  auto report = validate(ds, cfg.eps);
  if (!report.valid()) {
    print_violations(report, out);
    err << report.violations.size() << " violation(s)\n";
    return kExitInvalid;
  }
  std::size_t types = 0;
  for (const auto& f : ds.features) types += f.size();
  out << "valid: " << ds.features.size() << " features, " << types << " types\n";
  return kExitOk;
}

inline int cmd_optimize(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto ds = load_valid(cfg, err);
  if (!ds) return kExitInvalid;
  auto s = optimize(*ds, *cfg.coverage_floor, exclusion_set(cfg));
  for (const auto& w : s.warnings) err << "warning: " << w << "\n";
  std::string text;
  if (cfg.format == "csv") {
    text = strategy_to_csv(s);
  } else if (cfg.format == "text") {
    text = strategy_to_text(s);
  } else {
    text = strategy_to_json(s).dump(2) + "\n";
  }
  emit(cfg.out_path, text, out);
  return kExitOk;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto ds = load_valid(cfg, err);
  if (!ds) return kExitInvalid;
  auto grid = cfg.grid_file.empty() ? default_grid(cfg.grid_points) : read_grid(cfg.grid_file);
  auto result = sweep(*ds, grid, exclusion_set(cfg), cfg.jobs);

  std::optional<std::vector<GroupReport>> groups;
  if (!cfg.groups_file.empty()) {
    groups = correlation_report(result, read_groups(cfg.groups_file));
    for (const auto& g : *groups) {
      if (!g.violation) continue;
      err << "correlated features active together: " << adtarget::detail::join(g.co_active_members, ", ")
          << "; keep '" << *g.keep << "', exclude " << adtarget::detail::join(g.exclude, ", ") << "\n";
    }
  }
  std::size_t warned = 0;
  for (const auto& s : result.points) warned += s.warnings.empty() ? 0 : 1;
  if (warned) err << "warning: lift * B exceeds 1 at " << warned << " sweep point(s)\n";

  std::string text = cfg.format == "csv" ? sweep_to_csv(result)
                                         : sweep_to_json(result, groups ? &*groups : nullptr).dump(2) + "\n";
  emit(cfg.out_path, text, out);
  if (!cfg.matrix_out.empty()) emit(cfg.matrix_out, active_matrix_csv(result), out);
  if (!cfg.freq_out.empty()) {
    emit(cfg.freq_out, frequency_csv(frequency_table(result.feature_names, result.frequency)), out);
  }
  return kExitOk;
}

inline int cmd_gen_demo(const RunConfig& cfg, std::ostream& out) {
  std::vector<SchemaEntry> schema;
  if (cfg.schema == "catalog") {
    schema = feature_catalog();
  } else {
    std::ifstream in(cfg.schema, std::ios::binary);
    if (!in) throw Error("cannot open " + cfg.schema);
    schema = load_schema(in);
  }
  auto ds = generate_synthetic(schema, cfg.seed, cfg.concentration);
  DataFormat fmt = DataFormat::json;
  if (cfg.format == "csv" || (cfg.format.empty() && !cfg.out_path.empty() && infer_format(cfg.out_path) == DataFormat::csv)) {
    fmt = DataFormat::csv;
  }
  emit(cfg.out_path, serialize_dataset(ds, fmt), out);
  return kExitOk;
}

inline int cmd_freq(const RunConfig& cfg, std::ostream& out) {
  auto saved = parse_saved_sweep(read_file(cfg.sweep_path));
  emit(cfg.out_path, frequency_csv(frequency_table(saved.feature_names, saved.frequency())), out);
  return kExitOk;
}

template <class T>
void capture_optional(CLI::App* cmd, const std::string& name, std::optional<T>& target, const std::string& help) {
  cmd->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Profit-maximizing audience targeting: coverage-constrained lift optimization", "adtarget"};
  app.require_subcommand(1, 1);
  RunConfig cfg;
  cfg.jobs = detail::default_jobs();
  std::string coverage_text;

  auto add_data = [&](CLI::App* cmd) {
    cmd->add_option("--data", cfg.data_path, "Dataset file (.json or .csv)")->required();
    cmd->add_option("--input-format", cfg.input_format, "Override format detection")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--unit", cfg.unit, "Interpret probabilities as fractions or percents")
        ->check(CLI::IsMember({"fraction", "percent"}));
    cmd->add_option("--eps", cfg.eps, "Tolerance on per-feature probability sums")->capture_default_str();
  };
  auto add_economics = [&](CLI::App* cmd) {
    detail::capture_optional(cmd, "--buy-rate", cfg.buy_rate, "Base purchase probability B");
    detail::capture_optional(cmd, "--audience", cfg.audience, "Audience size N");
    detail::capture_optional(cmd, "--price", cfg.price, "Unit price");
    detail::capture_optional(cmd, "--cost", cfg.cost, "Unit cost");
    detail::capture_optional(cmd, "--budget", cfg.budget, "Campaign expenditure");
  };

  auto* validate_cmd = app.add_subcommand("validate", "Check a dataset");
  add_data(validate_cmd);
  add_economics(validate_cmd);

  auto* optimize_cmd = app.add_subcommand("optimize", "Optimal strategy for one coverage floor");
  add_data(optimize_cmd);
  add_economics(optimize_cmd);
  optimize_cmd->add_option("--L", coverage_text, "Coverage floor in [0,1]")->required();
  optimize_cmd->add_option("--exclude", cfg.exclusions, "Features forced inactive")->delimiter(',');
  optimize_cmd->add_option("--out", cfg.out_path, "Output file (default: stdout)");
  optimize_cmd->add_option("--format", cfg.format, "json, csv or text")->check(CLI::IsMember({"json", "csv", "text"}));

  auto* sweep_cmd = app.add_subcommand("sweep", "Optimal strategies over a grid of coverage floors");
  add_data(sweep_cmd);
  add_economics(sweep_cmd);
  auto* points_opt = sweep_cmd->add_option("--grid-points", cfg.grid_points, "Evenly spaced points on [0,1]")
                         ->capture_default_str()
                         ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--grid-file", cfg.grid_file, "File with one L per line")->excludes(points_opt);
  sweep_cmd->add_option("--exclude", cfg.exclusions, "Features forced inactive")->delimiter(',');
  sweep_cmd->add_option("--groups", cfg.groups_file, "JSON array of correlated feature groups");
  sweep_cmd->add_option("--out", cfg.out_path, "Output file (default: stdout)");
  sweep_cmd->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sweep_cmd->add_option("--matrix-out", cfg.matrix_out, "Active-feature matrix CSV");
  sweep_cmd->add_option("--freq-out", cfg.freq_out, "Feature frequency CSV");
  sweep_cmd->add_option("--jobs", cfg.jobs, std::string("Worker threads (default: $") + kJobsEnv + " or 1)")
      ->check(CLI::PositiveNumber);

  auto* gen_cmd = app.add_subcommand("gen-demo", "Synthetic dataset from a feature catalog");
  gen_cmd->add_option("--schema", cfg.schema, "'catalog' or a JSON schema file")->capture_default_str();
  gen_cmd->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--concentration", cfg.concentration, "Dirichlet concentration")->capture_default_str();
  gen_cmd->add_option("--out", cfg.out_path, "Output file (default: stdout)");
  gen_cmd->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* freq_cmd = app.add_subcommand("freq", "Feature frequency report from a saved sweep");
  freq_cmd->add_option("--sweep", cfg.sweep_path, "Sweep JSON written by 'sweep'")->required();
  freq_cmd->add_option("--out", cfg.out_path, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (optimize_cmd->parsed()) {
    auto v = adtarget::detail::parse_double(coverage_text);
    if (!v || !(*v >= 0.0 && *v <= 1.0)) {
      err << "error: L must lie in [0,1]\n";
      return kExitUsage;
    }
    cfg.coverage_floor = *v;
  }

  try {
    if (validate_cmd->parsed()) return detail::cmd_validate(cfg, out, err);
    if (optimize_cmd->parsed()) return detail::cmd_optimize(cfg, out, err);
    if (sweep_cmd->parsed()) return detail::cmd_sweep(cfg, out, err);
    if (gen_cmd->parsed()) return detail::cmd_gen_demo(cfg, out);
    if (freq_cmd->parsed()) return detail::cmd_freq(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace adtarget::cli

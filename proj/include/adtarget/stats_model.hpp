#pragma once

// Per-feature audience/buyer statistics: the input to every optimization.
//
// A feature (age band, city level, ...) partitions the audience into types.
// For type k, `q` is the share of all audiences of that type and `p` the
// share of buyers of that type. Both vectors sum to one per feature.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adtarget/detail/text.hpp"
#include "adtarget/errors.hpp"

namespace adtarget {

struct TypeStat {
  std::string label;
  double q = 0.0;
  double p = 0.0;

  friend bool operator==(const TypeStat&, const TypeStat&) = default;
};

struct FeatureStats {
  std::string name;
  std::vector<TypeStat> types;

  std::size_t size() const noexcept { return types.size(); }

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

struct StatsDataset {
  std::vector<FeatureStats> features;
  std::optional<std::uint64_t> audience_count;  // N
  std::optional<double> buy_rate;               // B = P(Buy)
  std::optional<double> price;
  std::optional<double> unit_cost;
  std::optional<double> budget;

  // Index of the feature called `name`, if any.
  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (features[i].name == name) return i;
    }
    return std::nullopt;
  }

  friend bool operator==(const StatsDataset&, const StatsDataset&) = default;
};

enum class DataFormat { json, csv };
enum class Unit { fraction, percent };

inline constexpr double kDefaultEpsNorm = 1e-3;
inline constexpr double kStrictEpsNorm = 1e-9;

struct LoadOptions {
  // Overrides the "unit" key of a JSON file. CSV files default to fractions.
  std::optional<Unit> unit;
};

inline std::optional<Unit> parse_unit(std::string_view s) {
  if (s == "fraction") return Unit::fraction;
  if (s == "percent") return Unit::percent;
  return std::nullopt;
}

inline DataFormat infer_format(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv" ? DataFormat::csv : DataFormat::json;
}

namespace detail {

inline double checked_probability(double raw, Unit unit, const std::string& where) {
  if (!std::isfinite(raw)) throw ParseError(where, "not a finite number");
  double v = unit == Unit::percent ? raw / 100.0 : raw;
  if (v < 0.0) throw DomainError(where + ": negative probability " + format_double(raw));
  if (v > 1.0) throw DomainError(where + ": probability above 1 (" + format_double(raw) + ")");
  return v;
}

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline std::optional<double> optional_number(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw ParseError(std::string("field ") + key, "expected a number or null");
  return it->get<double>();
}

inline void check_money(const std::optional<double>& v, const char* key) {
  if (v && !(*v >= 0.0 && std::isfinite(*v))) {
    throw DomainError(std::string(key) + " must be a finite non-negative amount");
  }
}

inline StatsDataset parse_json_dataset(const std::string& text, const LoadOptions& opts) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_col(text, e.byte > 0 ? e.byte - 1 : 0), "malformed JSON");
  }
  if (!doc.is_object()) throw SchemaError("dataset must be a JSON object");

  Unit unit = Unit::fraction;
  if (auto it = doc.find("unit"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError("field unit", "expected \"fraction\" or \"percent\"");
    auto u = parse_unit(it->get<std::string>());
    if (!u) throw ParseError("field unit", "expected \"fraction\" or \"percent\"");
    unit = *u;
  }
  if (opts.unit) unit = *opts.unit;

  StatsDataset ds;
  ds.buy_rate = optional_number(doc, "buy_rate");
  if (ds.buy_rate && !(*ds.buy_rate >= 0.0 && *ds.buy_rate <= 1.0)) {
    throw DomainError("buy_rate must lie in [0,1]");
  }
  if (auto it = doc.find("audience_count"); it != doc.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ParseError("field audience_count", "expected an integer");
    if (it->is_number_unsigned() ? it->get<std::uint64_t>() == 0 : it->get<std::int64_t>() <= 0) {
      throw DomainError("audience_count must be positive");
    }
    ds.audience_count = it->get<std::uint64_t>();
  }
  ds.price = optional_number(doc, "price");
  ds.unit_cost = optional_number(doc, "unit_cost");
  ds.budget = optional_number(doc, "budget");
  check_money(ds.price, "price");
  check_money(ds.unit_cost, "unit_cost");
  check_money(ds.budget, "budget");

  auto feats = doc.find("features");
  if (feats == doc.end()) throw SchemaError("missing key 'features'");
  if (!feats->is_array()) throw ParseError("field features", "expected an array");
  for (std::size_t i = 0; i < feats->size(); ++i) {
    const auto& f = (*feats)[i];
    const std::string fwhere = "features[" + std::to_string(i) + "]";
    if (!f.is_object()) throw ParseError(fwhere, "expected an object");
    auto name = f.find("name");
    if (name == f.end()) throw SchemaError(fwhere + ": missing key 'name'");
    if (!name->is_string()) throw ParseError(fwhere + ".name", "expected a string");
    auto types = f.find("types");
    if (types == f.end()) throw SchemaError(fwhere + ": missing key 'types'");
    if (!types->is_array()) throw ParseError(fwhere + ".types", "expected an array");

    FeatureStats feature{name->get<std::string>(), {}};
    for (std::size_t k = 0; k < types->size(); ++k) {
      const auto& t = (*types)[k];
      const std::string twhere = fwhere + ".types[" + std::to_string(k) + "]";
      if (!t.is_object()) throw ParseError(twhere, "expected an object");
      TypeStat ts;
      if (auto l = t.find("label"); l != t.end()) {
        if (!l->is_string()) throw ParseError(twhere + ".label", "expected a string");
        ts.label = l->get<std::string>();
      } else {
        ts.label = "t" + std::to_string(k + 1);
      }
      for (const char* key : {"q", "p"}) {
        auto v = t.find(key);
        if (v == t.end()) throw SchemaError(twhere + ": missing key '" + key + "'");
        if (!v->is_number()) throw ParseError(twhere + "." + key, "expected a number");
        double x = checked_probability(v->get<double>(), unit, twhere + "." + key);
        (key[0] == 'q' ? ts.q : ts.p) = x;
      }
      feature.types.push_back(std::move(ts));
    }
    ds.features.push_back(std::move(feature));
  }
  return ds;
}

inline StatsDataset parse_csv_dataset(const std::string& text, const LoadOptions& opts) {
  const Unit unit = opts.unit.value_or(Unit::fraction);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::vector<std::string>> header;
  std::size_t col_feature = 0, col_label = 0, col_q = 0, col_p = 0;
  StatsDataset ds;

  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = csv_split(line);
    const std::string where = "line " + std::to_string(lineno);
    if (!fields) throw ParseError(where, "unterminated quoted field");
    if (!header) {
      header = *fields;
      auto find_col = [&](const char* name) {
        for (std::size_t c = 0; c < header->size(); ++c) {
          if ((*header)[c] == name) return c;
        }
        throw SchemaError(std::string("missing column '") + name + "'");
      };
      col_feature = find_col("feature");
      col_label = find_col("label");
      col_q = find_col("q");
      col_p = find_col("p");
      continue;
    }
    if (fields->size() != header->size()) {
      throw ParseError(where, "expected " + std::to_string(header->size()) + " fields, got " +
                                  std::to_string(fields->size()));
    }
    auto number = [&](std::size_t col, const char* name) {
      auto v = parse_double((*fields)[col]);
      if (!v) throw ParseError(where + ", field " + name, "not a number: '" + (*fields)[col] + "'");
      return checked_probability(*v, unit, where + ", field " + name);
    };
    TypeStat ts{(*fields)[col_label], number(col_q, "q"), number(col_p, "p")};
    const std::string& fname = (*fields)[col_feature];
    auto idx = ds.find(fname);
    if (!idx) {
      ds.features.push_back(FeatureStats{fname, {}});
      idx = ds.features.size() - 1;
    }
    ds.features[*idx].types.push_back(std::move(ts));
  }
  if (!header) throw SchemaError("empty CSV: missing header feature,label,q,p");
  return ds;
}

}  // namespace detail

// Reads a dataset. Values are stored as fractions exactly as read; no
// renormalization happens here (see validate()).
inline StatsDataset load_dataset(std::istream& source, DataFormat format, const LoadOptions& opts = {}) {
  std::string text((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  return format == DataFormat::json ? detail::parse_json_dataset(text, opts)
                                    : detail::parse_csv_dataset(text, opts);
}

inline StatsDataset load_dataset_file(const std::filesystem::path& path, std::optional<DataFormat> format = {},
                                      const LoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load_dataset(in, format.value_or(infer_format(path)), opts);
}

// Canonical serialization (fractions, fixed key order, shortest round-trip
// numbers). CSV carries only the feature table.
inline std::string serialize_dataset(const StatsDataset& ds, DataFormat format) {
  if (format == DataFormat::csv) {
    std::string out = "feature,label,q,p\n";
    for (const auto& f : ds.features) {
      for (const auto& t : f.types) {
        out += detail::csv_quote(f.name) + ',' + detail::csv_quote(t.label) + ',' + detail::format_double(t.q) +
               ',' + detail::format_double(t.p) + '\n';
      }
    }
    return out;
  }
  using ojson = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); };
  ojson doc;
  doc["unit"] = "fraction";
  doc["buy_rate"] = opt(ds.buy_rate);
  doc["audience_count"] = ds.audience_count ? ojson(*ds.audience_count) : ojson(nullptr);
  doc["price"] = opt(ds.price);
  doc["unit_cost"] = opt(ds.unit_cost);
  doc["budget"] = opt(ds.budget);
  doc["features"] = ojson::array();
  for (const auto& f : ds.features) {
    ojson jf;
    jf["name"] = f.name;
    jf["types"] = ojson::array();
    for (const auto& t : f.types) {
      ojson jt;
      jt["label"] = t.label;
      jt["q"] = t.q;
      jt["p"] = t.p;
      jf["types"].push_back(std::move(jt));
    }
    doc["features"].push_back(std::move(jf));
  }
  return doc.dump(2) + "\n";
}

// --- validation -------------------------------------------------------------

struct Violation {
  std::string feature;  // empty for dataset-level violations
  std::string kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  // Present only when there are no violations: every p and q vector divided
  // by its observed sum.
  std::optional<StatsDataset> renormalized;

  bool valid() const noexcept { return violations.empty(); }
};

inline StatsDataset renormalize(const StatsDataset& ds) {
  StatsDataset out = ds;
  for (auto& f : out.features) {
    double sq = 0.0;
    double sp = 0.0;
    for (const auto& t : f.types) {
      sq += t.q;
      sp += t.p;
    }
    for (auto& t : f.types) {
      if (sq > 0.0) t.q /= sq;
      if (sp > 0.0) t.p /= sp;
    }
  }
  return out;
}

inline ValidationReport validate(const StatsDataset& ds, double eps_norm = kDefaultEpsNorm) {
  ValidationReport report;
  auto add = [&](std::string feature, std::string kind, std::string message) {
    report.violations.push_back({std::move(feature), std::move(kind), std::move(message)});
  };

  if (ds.features.empty()) add("", "no_features", "dataset has no features");
  if (ds.price && ds.unit_cost && !(*ds.price > *ds.unit_cost)) {
    add("", "price_not_above_cost", "price must exceed unit_cost");
  }

  std::set<std::string> names;
  for (const auto& f : ds.features) {
    if (!names.insert(f.name).second) add(f.name, "duplicate_feature", "duplicate feature name");
    if (f.types.empty()) {
      add(f.name, "empty_feature", "feature has no types");
      continue;
    }
    double sq = 0.0;
    double sp = 0.0;
    std::set<std::string> labels;
    for (const auto& t : f.types) {
      sq += t.q;
      sp += t.p;
      if (!labels.insert(t.label).second) add(f.name, "duplicate_label", "duplicate type label '" + t.label + "'");
      if (t.p > 0.0 && t.q == 0.0) {
        add(f.name, "zero_audience_buyer", "buyer type with zero audience share ('" + t.label + "')");
      }
    }
    if (std::abs(sq - 1.0) > eps_norm) add(f.name, "q_sum", "q-sum = " + detail::format_double(sq));
    if (std::abs(sp - 1.0) > eps_norm) add(f.name, "p_sum", "p-sum = " + detail::format_double(sp));
  }

  if (report.valid()) report.renormalized = renormalize(ds);
  return report;
}

// --- synthetic data ---------------------------------------------------------

struct SchemaEntry {
  std::string name;
  std::size_t type_count = 0;
};

// The 24-feature targeting catalog of a large e-commerce ads platform
// (consumption behavior, interests, demographics, behavioral preference).
inline std::vector<SchemaEntry> feature_catalog() {
  return {
      {"Activity level", 8},
      {"Consumption frequency", 6},
      {"Credit level", 11},
      {"Monthly expenditure", 6},
      {"Purchasing power in sinking market", 6},
      {"Purchasing power level", 7},
      {"Sinking market", 6},
      {"Strategic category", 9},
      {"Characteristic interests", 7},
      {"Content interests", 6},
      {"Feature interests", 42},
      {"Life interests", 28},
      {"Ages", 7},
      {"City", 19},
      {"City level", 7},
      {"Education", 8},
      {"Generation", 6},
      {"Life stage", 8},
      {"Occupation", 9},
      {"Phone type", 10},
      {"Browsing preference", 8},
      {"Frequently used device", 4},
      {"Nutritional product preference", 29},
      {"Shopping preference", 9},
  };
}

// Schema file: JSON array of {"name": <text>, "types": <count>}.
inline std::vector<SchemaEntry> load_schema(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0), "malformed JSON");
  }
  if (!doc.is_array()) throw SchemaError("schema must be a JSON array");
  std::vector<SchemaEntry> schema;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    const std::string where = "schema[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("name") || !e.contains("types")) {
      throw SchemaError(where + ": expected {\"name\", \"types\"}");
    }
    if (!e["name"].is_string()) throw ParseError(where + ".name", "expected a string");
    if (!e["types"].is_number_integer() || e["types"].get<std::int64_t>() < 0) {
      throw ParseError(where + ".types", "expected a non-negative integer");
    }
    schema.push_back({e["name"].get<std::string>(), e["types"].get<std::size_t>()});
  }
  return schema;
}

// Draws q and p for every feature independently from a symmetric Dirichlet
// with the given concentration (normalized gamma variates). Deterministic for
// a fixed seed.
inline StatsDataset generate_synthetic(const std::vector<SchemaEntry>& schema, std::uint64_t seed,
                                       double concentration = 1.0) {
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw DomainError("concentration must be a positive real");
  }
  for (const auto& e : schema) {
    if (e.type_count == 0) throw DomainError("feature '" + e.name + "' has type count 0");
  }

  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  // Floor keeps every q strictly positive so p/q stays finite.
  auto draw_simplex = [&](std::size_t m) {
    std::vector<double> x(m);
    double sum = 0.0;
    for (auto& v : x) {
      v = std::max(gamma(rng), std::numeric_limits<double>::min());
      sum += v;
    }
    for (auto& v : x) v /= sum;
    return x;
  };

  StatsDataset ds;
  for (const auto& e : schema) {
    auto q = draw_simplex(e.type_count);
    auto p = draw_simplex(e.type_count);
    FeatureStats f{e.name, {}};
    for (std::size_t k = 0; k < e.type_count; ++k) {
      f.types.push_back({"t" + std::to_string(k + 1), q[k], p[k]});
    }
    ds.features.push_back(std::move(f));
  }
  return ds;
}

}  // namespace adtarget

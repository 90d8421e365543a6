#pragma once

// JSON/CSV encodings of strategies and sweeps. Key order, row order and
// number formatting (shortest round-trip decimal) are fixed so identical runs
// produce identical bytes.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adtarget/detail/text.hpp"
#include "adtarget/errors.hpp"
#include "adtarget/strategy_engine.hpp"

namespace adtarget {

using ojson = nlohmann::ordered_json;

namespace detail {

inline ojson opt_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

inline std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace detail

inline ojson strategy_to_json(const Strategy& s) {
  ojson doc;
  doc["L"] = s.coverage_floor;
  doc["lift"] = s.lift;
  doc["log_lift"] = s.log_lift;
  doc["coverage"] = s.coverage;
  doc["active_count"] = s.active_count();
  doc["fast_path"] = s.fast_path;
  doc["lp_bound"] = s.lp_bound;
  doc["features"] = ojson::array();
  for (const auto& f : s.features) {
    ojson jf;
    jf["name"] = f.name;
    jf["active"] = f.active;
    jf["excluded"] = f.excluded;
    jf["prefix_length"] = f.prefix.length;
    jf["type_count"] = f.type_count;
    jf["types"] = f.labels;
    jf["cum_p"] = f.prefix.cum_p;
    jf["cum_q"] = f.prefix.cum_q;
    jf["lift"] = f.prefix.lift;
    doc["features"].push_back(std::move(jf));
  }
  ojson m;
  m["buy_rate"] = detail::opt_number(s.buy_rate);
  m["conditional_buy_prob"] = detail::opt_number(s.conditional_buy_prob);
  m["conditional_buy_prob_in_B"] = lift_in_units_of_b(s.lift);
  m["expected_sales"] = detail::opt_number(s.expected_sales);
  m["profit"] = detail::opt_number(s.profit);
  doc["metrics"] = std::move(m);
  doc["warnings"] = s.warnings;
  return doc;
}

inline std::string active_mask(const Strategy& s) {
  std::string mask;
  for (const auto& f : s.features) mask += f.active ? '1' : '0';
  return mask;
}

inline std::string prefix_lengths(const Strategy& s) {
  std::vector<std::string> parts;
  for (const auto& f : s.features) parts.push_back(std::to_string(f.prefix.length));
  return detail::join(parts, ";");
}

inline const std::string kStrategyCsvHeader =
    "L,lift,coverage,log_lift,active_count,active_mask,prefix_lengths,conditional_buy_prob,expected_sales,profit\n";

inline std::string strategy_csv_row(const Strategy& s) {
  using detail::format_double;
  return format_double(s.coverage_floor) + ',' + format_double(s.lift) + ',' + format_double(s.coverage) + ',' +
         format_double(s.log_lift) + ',' + std::to_string(s.active_count()) + ',' + active_mask(s) + ',' +
         prefix_lengths(s) + ',' + detail::opt_field(s.conditional_buy_prob) + ',' +
         detail::opt_field(s.expected_sales) + ',' + detail::opt_field(s.profit) + '\n';
}

inline std::string strategy_to_csv(const Strategy& s) { return kStrategyCsvHeader + strategy_csv_row(s); }

inline std::string strategy_to_text(const Strategy& s) {
  using detail::format_double;
  std::string out;
  out += "L                 " + format_double(s.coverage_floor) + "\n";
  out += "coverage          " + format_double(s.coverage) + "\n";
  out += "lift              " + format_double(s.lift) + "\n";
  out += "P(Buy | targeted) " +
         (s.conditional_buy_prob ? format_double(*s.conditional_buy_prob) : lift_in_units_of_b(s.lift)) + "\n";
  if (s.expected_sales) out += "expected sales    " + format_double(*s.expected_sales) + "\n";
  if (s.profit) out += "profit            " + format_double(*s.profit) + "\n";
  out += "active features   " + std::to_string(s.active_count()) + " of " + std::to_string(s.features.size()) + "\n";
  for (const auto& f : s.features) {
    if (!f.active) continue;
    out += "  " + f.name + ": " + detail::join(f.labels, ",") + "  (lift " + format_double(f.prefix.lift) +
           ", share " + format_double(f.prefix.cum_q) + ")\n";
  }
  return out;
}

inline ojson correlation_to_json(const std::vector<GroupReport>& groups) {
  ojson arr = ojson::array();
  for (const auto& g : groups) {
    ojson jg;
    jg["members"] = g.members;
    jg["frequency"] = g.frequency;
    jg["co_active_points"] = g.co_active_points;
    jg["co_active_members"] = g.co_active_members;
    jg["violation"] = g.violation;
    jg["keep"] = g.keep ? ojson(*g.keep) : ojson(nullptr);
    jg["exclude"] = g.exclude;
    arr.push_back(std::move(jg));
  }
  return arr;
}

inline ojson sweep_to_json(const SweepResult& r, const std::vector<GroupReport>* groups = nullptr) {
  ojson doc;
  doc["grid"] = r.grid;
  doc["features"] = r.feature_names;
  ojson freq = ojson::array();
  for (std::size_t i = 0; i < r.feature_names.size(); ++i) {
    freq.push_back(ojson{{"feature", r.feature_names[i]}, {"count", r.frequency[i]}});
  }
  doc["frequency"] = std::move(freq);
  doc["points"] = ojson::array();
  for (const auto& s : r.points) doc["points"].push_back(strategy_to_json(s));
  if (groups) doc["correlation"] = correlation_to_json(*groups);
  return doc;
}

inline std::string sweep_to_csv(const SweepResult& r) {
  std::string out = kStrategyCsvHeader;
  for (const auto& s : r.points) out += strategy_csv_row(s);
  return out;
}

// Rows = features, columns = grid points, cells 0/1.
inline std::string active_matrix_csv(const SweepResult& r) {
  std::string out = "feature";
  for (double L : r.grid) out += ',' + detail::format_double(L);
  out += '\n';
  for (std::size_t i = 0; i < r.feature_names.size(); ++i) {
    out += detail::csv_quote(r.feature_names[i]);
    for (const auto& s : r.points) out += s.features[i].active ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

struct FrequencyRow {
  std::string feature;
  std::size_t count = 0;
};

// Sorted by count, descending; ties keep dataset order.
inline std::vector<FrequencyRow> frequency_table(const std::vector<std::string>& names,
                                                 const std::vector<std::size_t>& counts) {
  std::vector<FrequencyRow> rows;
  for (std::size_t i = 0; i < names.size(); ++i) rows.push_back({names[i], counts.at(i)});
  std::stable_sort(rows.begin(), rows.end(), [](const FrequencyRow& a, const FrequencyRow& b) { return a.count > b.count; });
  return rows;
}

inline std::string frequency_csv(const std::vector<FrequencyRow>& rows) {
  std::string out = "feature,count\n";
  for (const auto& r : rows) out += detail::csv_quote(r.feature) + ',' + std::to_string(r.count) + '\n';
  return out;
}

// The parts of a saved sweep needed to redo the frequency analysis.
struct SavedSweep {
  std::vector<double> grid;
  std::vector<std::string> feature_names;
  std::vector<std::vector<bool>> active;  // [point][feature]

  std::vector<std::size_t> frequency() const {
    std::vector<std::size_t> counts(feature_names.size(), 0);
    for (const auto& row : active) {
      for (std::size_t i = 0; i < row.size(); ++i) counts[i] += row[i] ? 1 : 0;
    }
    return counts;
  }
};

inline SavedSweep parse_saved_sweep(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed sweep JSON");
  }
  if (!doc.is_object() || !doc.contains("features") || !doc.contains("points") || !doc.contains("grid")) {
    throw SchemaError("sweep JSON needs 'grid', 'features' and 'points'");
  }
  SavedSweep s;
  try {
    s.grid = doc["grid"].get<std::vector<double>>();
    s.feature_names = doc["features"].get<std::vector<std::string>>();
    for (const auto& p : doc["points"]) {
      std::vector<bool> row;
      for (const auto& f : p.at("features")) row.push_back(f.at("active").get<bool>());
      if (row.size() != s.feature_names.size()) throw SchemaError("point feature count mismatch");
      s.active.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("sweep JSON: ") + e.what());
  }
  return s;
}

}  // namespace adtarget

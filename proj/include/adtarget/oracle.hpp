#pragma once

// Brute-force verifiers. They work in linear probability space and never call
// into the ranking or knapsack code, so they cannot share a bug with it.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adtarget/errors.hpp"
#include "adtarget/prefix_gen.hpp"
#include "adtarget/stats_model.hpp"

namespace adtarget {

inline constexpr std::size_t kSubsetOracleMaxTypes = 20;
inline constexpr std::uint64_t kComboOracleMaxCombinations = 10'000'000;

namespace detail {

// A subset that leaves out only p = q = 0 types covers the whole feature;
// MECE makes both of its shares exactly 1.
inline bool covers_feature(const FeatureStats& feature, const std::vector<bool>& in) {
  for (std::size_t k = 0; k < feature.types.size(); ++k) {
    if (!in[k] && (feature.types[k].p != 0.0 || feature.types[k].q != 0.0)) return false;
  }
  return true;
}

}  // namespace detail

struct OracleDiscrepancy {
  double oracle_objective = 0.0;
  double algorithm_objective = 0.0;
  std::string detail;
};

struct OracleResult {
  bool feasible = false;
  double best_objective = 0.0;  // lift, linear scale
  double best_coverage = 0.0;
  // subset_oracle: sorted member type indices.
  // combo_oracle: one prefix length per family.
  std::vector<std::size_t> best_selection;
  std::size_t evaluated = 0;
  std::optional<OracleDiscrepancy> discrepancy;

  std::string describe() const {
    std::string s = "{";
    for (std::size_t i = 0; i < best_selection.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(best_selection[i]);
    }
    return s + "}";
  }
};

// Every non-empty subset of the feature's types with coverage >= floor;
// returns the maximum lift. Ties: fewer members, then lexicographically
// smaller member list.
inline OracleResult subset_oracle(const FeatureStats& feature, double coverage_floor) {
  const std::size_t m = feature.types.size();
  if (m > kSubsetOracleMaxTypes) {
    throw RefusalError("subset_oracle: " + std::to_string(m) + " types exceeds the limit of " +
                       std::to_string(kSubsetOracleMaxTypes));
  }
  OracleResult r;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<std::size_t> members;
    std::vector<bool> in(m, false);
    double sp = 0.0;
    double sq = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (mask >> k & 1U) {
        members.push_back(k);
        in[k] = true;
        sp += feature.types[k].p;
        sq += feature.types[k].q;
      }
    }
    if (detail::covers_feature(feature, in)) sp = sq = 1.0;
    ++r.evaluated;
    if (sq <= 0.0 || sq < coverage_floor) continue;
    double lift = sp / sq;
    bool better = !r.feasible || lift > r.best_objective;
    if (!better && lift == r.best_objective) {
      better = members.size() < r.best_selection.size() ||
               (members.size() == r.best_selection.size() && members < r.best_selection);
    }
    if (better) {
      r.feasible = true;
      r.best_objective = lift;
      r.best_coverage = sq;
      r.best_selection = std::move(members);
    }
  }
  return r;
}

// Same search restricted to prefixes of the ratio ordering. The ordering is
// recomputed here with cross-multiplication rather than taken from
// rank_types().
inline OracleResult prefix_oracle(const FeatureStats& feature, double coverage_floor) {
  const auto& t = feature.types;
  std::vector<std::size_t> order(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) order[k] = k;
  auto null_type = [&](std::size_t k) { return t[k].p == 0.0 && t[k].q == 0.0; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (null_type(a) != null_type(b)) return null_type(b);
    if (null_type(a)) return false;
    return t[a].p * t[b].q > t[b].p * t[a].q;
  });

  OracleResult r;
  double sp = 0.0;
  double sq = 0.0;
  std::vector<std::size_t> members;
  std::vector<bool> in(t.size(), false);
  for (std::size_t k : order) {
    sp += t[k].p;
    sq += t[k].q;
    members.push_back(k);
    in[k] = true;
    ++r.evaluated;
    const bool whole = detail::covers_feature(feature, in);
    const double cov = whole ? 1.0 : sq;
    if (cov <= 0.0 || cov < coverage_floor) continue;
    double lift = whole ? 1.0 : sp / sq;
    // Longer prefixes must win by more than rounding to displace a shorter one.
    if (!r.feasible || lift > r.best_objective * (1.0 + kLiftRoundingTolerance)) {
      r.feasible = true;
      r.best_objective = lift;
      r.best_coverage = cov;
      r.best_selection = members;
    }
  }
  std::sort(r.best_selection.begin(), r.best_selection.end());
  return r;
}

// Every combination of one prefix per family with prod(cum_q) >= L; returns
// the maximum prod(lift). The all-full combination (coverage 1) is always
// feasible, so the result is at least 1. Ties keep the first combination in
// mixed-radix order (family 0 varies slowest).
inline OracleResult combo_oracle(const std::vector<CandidateFamily>& families, double coverage_floor) {
  std::uint64_t total = 1;
  for (const auto& f : families) {
    if (f.size() == 0) throw DomainError("combo_oracle: empty family");
    if (total > kComboOracleMaxCombinations / f.size()) {
      throw RefusalError("combo_oracle: more than " + std::to_string(kComboOracleMaxCombinations) +
                         " combinations");
    }
    total *= f.size();
  }

  OracleResult r;
  const std::size_t n = families.size();
  std::vector<std::size_t> digit(n, 0);
  for (std::uint64_t c = 0; c < total; ++c) {
    double coverage = 1.0;
    double lift = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cand = families[i].prefixes[digit[i]];
      coverage *= cand.cum_q;
      lift *= cand.cum_p / cand.cum_q;
    }
    ++r.evaluated;
    if (coverage >= coverage_floor && (!r.feasible || lift > r.best_objective)) {
      r.feasible = true;
      r.best_objective = lift;
      r.best_coverage = coverage;
      r.best_selection.resize(n);
      for (std::size_t i = 0; i < n; ++i) r.best_selection[i] = digit[i] + 1;
    }
    for (std::size_t i = n; i-- > 0;) {
      if (++digit[i] < families[i].size()) break;
      digit[i] = 0;
    }
  }
  return r;
}

// Compares the greedy prefix against the all-subsets optimum and records a
// discrepancy when a non-prefix subset has strictly higher lift.
inline OracleResult audit_greedy(const FeatureStats& feature, double coverage_floor,
                                 double rel_tol = kLiftRoundingTolerance) {
  OracleResult r = subset_oracle(feature, coverage_floor);
  const PrefixCandidate greedy = greedy_subproblem(feature, coverage_floor);
  const double g = greedy.cum_p / greedy.cum_q;
  if (r.best_objective > g * (1.0 + rel_tol)) {
    auto members = greedy.members;
    std::sort(members.begin(), members.end());
    OracleResult shown;
    shown.best_selection = members;
    r.discrepancy = OracleDiscrepancy{r.best_objective, g,
                                      "feature '" + feature.name + "', L_i=" + detail::format_double(coverage_floor) +
                                          ": subset " + r.describe() + " beats greedy prefix " + shown.describe()};
  }
  return r;
}

inline nlohmann::ordered_json oracle_to_json(const OracleResult& r) {
  using ojson = nlohmann::ordered_json;
  ojson doc;
  doc["feasible"] = r.feasible;
  doc["best_objective"] = r.best_objective;
  doc["best_coverage"] = r.best_coverage;
  doc["best_selection"] = r.best_selection;
  doc["evaluated"] = r.evaluated;
  if (r.discrepancy) {
    doc["discrepancy"] = ojson{{"oracle_objective", r.discrepancy->oracle_objective},
                               {"algorithm_objective", r.discrepancy->algorithm_objective},
                               {"detail", r.discrepancy->detail}};
  } else {
    doc["discrepancy"] = nullptr;
  }
  return doc;
}

}  // namespace adtarget

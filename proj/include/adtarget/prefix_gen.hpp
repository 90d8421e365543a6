#pragma once

// Ratio-greedy candidate generation for one feature.
//
// Types are ranked by the buy-lift ratio p/q (non-increasing). The candidate
// family is the nested sequence of prefixes of that ranking; by the mediant
// inequality the prefix lift cum_p/cum_q never increases with the length.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "adtarget/errors.hpp"
#include "adtarget/stats_model.hpp"

namespace adtarget {

struct PrefixCandidate {
  std::size_t feature_index = 0;
  std::size_t length = 0;            // k in [1, m]
  std::vector<std::size_t> members;  // original type indices, in ranking order
  double cum_p = 0.0;
  double cum_q = 0.0;
  double lift = 1.0;  // cum_p / cum_q

  bool is_full(std::size_t type_count) const noexcept { return length == type_count; }
};

struct CandidateFamily {
  std::size_t feature_index = 0;
  std::vector<std::size_t> ranking;
  std::vector<PrefixCandidate> prefixes;  // prefixes[k-1] has length k

  std::size_t size() const noexcept { return prefixes.size(); }
  const PrefixCandidate& prefix(std::size_t length) const { return prefixes.at(length - 1); }
  const PrefixCandidate& full() const { return prefixes.back(); }
};

// Relative slack used to absorb last-bit rounding in lift monotonicity.
inline constexpr double kLiftRoundingTolerance = 1e-12;

inline void require_ratio_defined(const FeatureStats& feature) {
  for (const auto& t : feature.types) {
    if (t.p > 0.0 && t.q == 0.0) {
      throw DomainError("feature '" + feature.name + "': type '" + t.label +
                        "' has buyers but zero audience share");
    }
  }
}

// Type indices ordered by p/q non-increasing. Ties keep the original order;
// types with p = q = 0 carry ratio 0 and go after every other ratio-0 type.
inline std::vector<std::size_t> rank_types(const FeatureStats& feature) {
  require_ratio_defined(feature);
  const auto& types = feature.types;
  auto is_null = [&](std::size_t k) { return types[k].p == 0.0 && types[k].q == 0.0; };
  auto ratio = [&](std::size_t k) { return is_null(k) ? 0.0 : types[k].p / types[k].q; };

  std::vector<std::size_t> order(types.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double ra = ratio(a);
    double rb = ratio(b);
    if (ra != rb) return ra > rb;
    return !is_null(a) && is_null(b);
  });
  return order;
}

inline CandidateFamily build_family(const FeatureStats& feature, std::size_t feature_index = 0) {
  if (feature.types.empty()) throw DomainError("feature '" + feature.name + "' has no types");
  CandidateFamily family;
  family.feature_index = feature_index;
  family.ranking = rank_types(feature);

  const auto& types = feature.types;
  const std::size_t m = types.size();

  // tail_empty[k]: every type ranked after position k has p = q = 0, so the
  // prefix of length k+1 already covers the whole feature.
  std::vector<bool> tail_empty(m, true);
  for (std::size_t pos = m - 1; pos > 0; --pos) {
    const auto& t = types[family.ranking[pos]];
    tail_empty[pos - 1] = tail_empty[pos] && t.p == 0.0 && t.q == 0.0;
  }

  double cum_p = 0.0;
  double cum_q = 0.0;
  double prev_lift = 0.0;
  for (std::size_t pos = 0; pos < m; ++pos) {
    const auto& t = types[family.ranking[pos]];
    cum_p += t.p;
    cum_q += t.q;

    PrefixCandidate c;
    c.feature_index = feature_index;
    c.length = pos + 1;
    c.members.assign(family.ranking.begin(), family.ranking.begin() + static_cast<std::ptrdiff_t>(pos + 1));
    if (tail_empty[pos]) {
      c.cum_p = 1.0;
      c.cum_q = 1.0;
    } else {
      c.cum_p = cum_p;
      c.cum_q = cum_q;
    }
    if (c.cum_q <= 0.0) throw DomainError("feature '" + feature.name + "' has no audience share");

    double lift = c.cum_p / c.cum_q;
    if (pos > 0 && lift > prev_lift && lift <= prev_lift * (1.0 + kLiftRoundingTolerance)) lift = prev_lift;
    if (lift < 1.0 && lift >= 1.0 - kLiftRoundingTolerance) lift = 1.0;
    c.lift = lift;
    prev_lift = lift;
    family.prefixes.push_back(std::move(c));
  }
  return family;
}

// Shortest prefix whose audience share reaches `coverage_floor`. The full
// prefix always qualifies, so this never fails for a floor in [0,1].
inline const PrefixCandidate& greedy_subproblem(const CandidateFamily& family, double coverage_floor) {
  if (!(coverage_floor >= 0.0 && coverage_floor <= 1.0)) {
    throw DomainError("L_i must lie in [0,1]");
  }
  for (const auto& c : family.prefixes) {
    if (c.cum_q >= coverage_floor) return c;
  }
  return family.full();
}

inline PrefixCandidate greedy_subproblem(const FeatureStats& feature, double coverage_floor) {
  auto family = build_family(feature);
  return greedy_subproblem(family, coverage_floor);
}

}  // namespace adtarget

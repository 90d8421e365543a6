#pragma once

// Log-space multiple-choice knapsack over prefix candidates.
//
// Class i holds one item per prefix of feature i:
//   value  = log(lift)    >= 0
//   weight = -log(cum_q)  >= 0
// and the capacity is -log(L). Choosing exactly one item per class with total
// weight <= capacity is the same as choosing one prefix per feature with
// coverage prod(cum_q) >= L; the objective is log of the combined lift.
// Every class contains the full prefix as its zero item (0, 0).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adtarget/errors.hpp"
#include "adtarget/prefix_gen.hpp"

namespace adtarget {

inline constexpr double kInfiniteCapacity = std::numeric_limits<double>::infinity();
// A node is pruned only when its bound does not beat the incumbent by more
// than this.
inline constexpr double kBoundTolerance = 1e-9;

struct MckpItem {
  std::size_t class_index = 0;
  std::size_t prefix_length = 0;  // back-map into the class's CandidateFamily
  double value = 0.0;
  double weight = 0.0;
  // Below the upper convex hull of its class: skipped by the LP, kept for
  // the exact search.
  bool lp_dominated = false;

  bool is_zero() const noexcept { return value == 0.0 && weight == 0.0; }
};

struct MckpInstance {
  std::vector<std::vector<MckpItem>> classes;
  double capacity = 0.0;      // -log L, +inf when L = 0
  std::optional<double> beta;  // log B, reporting offset only

  std::size_t item_count() const {
    std::size_t n = 0;
    for (const auto& c : classes) n += c.size();
    return n;
  }
};

struct MckpSolution {
  std::vector<std::size_t> chosen;  // item index within each class
  double objective = 0.0;           // sum of chosen values, beta excluded
  double total_weight = 0.0;
  bool optimal = false;
  double lp_bound = 0.0;
  bool fast_path = false;
  std::size_t nodes = 0;
};

// Fractional optimum of the continuous relaxation.
struct LpSolution {
  double bound = 0.0;
  std::vector<std::size_t> base;  // integral item per class (lower point for the split class)
  std::optional<std::size_t> fractional_class;
  std::size_t upper_item = 0;  // item the split class is moving towards
  double fraction = 0.0;       // share of the upper item in the split class
};

inline const PrefixCandidate& candidate_of(const std::vector<CandidateFamily>& families, const MckpItem& item) {
  return families.at(item.class_index).prefix(item.prefix_length);
}

inline MckpInstance build_instance(const std::vector<CandidateFamily>& families, double coverage_floor,
                                   std::optional<double> buy_rate = std::nullopt) {
  if (!(coverage_floor >= 0.0 && coverage_floor <= 1.0)) throw DomainError("L must lie in [0,1]");
  MckpInstance inst;
  inst.capacity = coverage_floor == 0.0 ? kInfiniteCapacity : -std::log(coverage_floor);
  if (inst.capacity == 0.0) inst.capacity = 0.0;  // normalize -0
  if (buy_rate) {
    if (!(*buy_rate > 0.0 && *buy_rate <= 1.0)) throw DomainError("B must lie in (0,1]");
    inst.beta = std::log(*buy_rate);
  }
  inst.classes.resize(families.size());
  for (std::size_t i = 0; i < families.size(); ++i) {
    for (const auto& c : families[i].prefixes) {
      MckpItem item;
      item.class_index = i;
      item.prefix_length = c.length;
      item.value = c.lift == 1.0 ? 0.0 : std::log(c.lift);
      item.weight = c.cum_q >= 1.0 ? 0.0 : -std::log(c.cum_q);
      inst.classes[i].push_back(item);
    }
  }
  return inst;
}

namespace detail {

inline void require_zero_items(const MckpInstance& inst) {
  if (std::isnan(inst.capacity) || inst.capacity < 0.0) throw DomainError("capacity must be non-negative");
  for (std::size_t i = 0; i < inst.classes.size(); ++i) {
    const auto& cls = inst.classes[i];
    if (std::none_of(cls.begin(), cls.end(), [](const MckpItem& it) { return it.is_zero(); })) {
      throw DomainError("class " + std::to_string(i) + " has no zero item");
    }
  }
}

// Indices of the class's items on the upper convex hull of (weight, value),
// ordered by weight; collinear points stay on the hull. Starts at the
// best-valued minimum-weight item; values and weights strictly increase.
inline std::vector<std::size_t> class_hull(const std::vector<MckpItem>& cls) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < cls.size(); ++k) {
    if (!cls[k].lp_dominated) idx.push_back(k);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (cls[a].weight != cls[b].weight) return cls[a].weight < cls[b].weight;
    return cls[a].value > cls[b].value;
  });
  std::vector<std::size_t> frontier;
  for (std::size_t k : idx) {
    if (frontier.empty() || cls[k].value > cls[frontier.back()].value) frontier.push_back(k);
  }
  std::vector<std::size_t> hull;
  for (std::size_t k : frontier) {
    while (hull.size() >= 2) {
      const auto& a = cls[hull[hull.size() - 2]];
      const auto& b = cls[hull.back()];
      const auto& c = cls[k];
      // b strictly below segment a-c
      if ((b.value - a.value) * (c.weight - a.weight) < (c.value - a.value) * (b.weight - a.weight)) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(k);
  }
  return hull;
}

// Incremental hull moves of every class, sorted once so each LP solve is a
// single filtered pass.
class LpModel {
 public:
  struct Move {
    std::size_t cls;
    std::size_t from;  // item index
    std::size_t to;
    double dvalue;
    double dweight;
    double efficiency;
  };

  explicit LpModel(const MckpInstance& inst) : inst_(&inst) {
    const std::size_t n = inst.classes.size();
    start_.resize(n);
    std::vector<double> top_eff(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto hull = class_hull(inst.classes[i]);
      start_[i] = hull.front();
      for (std::size_t h = 1; h < hull.size(); ++h) {
        const auto& a = inst.classes[i][hull[h - 1]];
        const auto& b = inst.classes[i][hull[h]];
        double dv = b.value - a.value;
        double dw = b.weight - a.weight;
        moves_.push_back({i, hull[h - 1], hull[h], dv, dw, dv / dw});
      }
      if (hull.size() > 1) top_eff[i] = moves_[moves_.size() - hull.size() + 1].efficiency;
    }
    // Equal efficiencies: classes with the steeper first move go first.
    std::vector<std::size_t> class_rank(n);
    {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return top_eff[a] > top_eff[b]; });
      for (std::size_t r = 0; r < n; ++r) class_rank[order[r]] = r;
    }
    std::stable_sort(moves_.begin(), moves_.end(), [&](const Move& a, const Move& b) {
      if (a.efficiency != b.efficiency) return a.efficiency > b.efficiency;
      return class_rank[a.cls] < class_rank[b.cls];
    });
  }

  // LP over the classes with fixed[i] unset, with the given capacity.
  LpSolution solve(const std::vector<std::optional<std::size_t>>& fixed, double capacity) const {
    const auto& classes = inst_->classes;
    LpSolution lp;
    lp.base.assign(classes.size(), 0);
    double used = 0.0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (fixed[i]) {
        lp.base[i] = *fixed[i];
        continue;
      }
      lp.base[i] = start_[i];
      lp.bound += classes[i][start_[i]].value;
      used += classes[i][start_[i]].weight;
    }
    double remaining = capacity - used;
    for (const auto& mv : moves_) {
      if (fixed[mv.cls]) continue;
      if (mv.dweight <= remaining) {
        remaining -= mv.dweight;
        lp.bound += mv.dvalue;
        lp.base[mv.cls] = mv.to;
      } else {
        if (remaining > 0.0) {
          lp.fractional_class = mv.cls;
          lp.upper_item = mv.to;
          lp.fraction = remaining / mv.dweight;
          lp.bound += lp.fraction * mv.dvalue;
        }
        break;
      }
    }
    return lp;
  }

 private:
  const MckpInstance* inst_;
  std::vector<std::size_t> start_;
  std::vector<Move> moves_;
};

inline void finish_solution(const MckpInstance& inst, MckpSolution& sol) {
  sol.objective = 0.0;
  sol.total_weight = 0.0;
  for (std::size_t i = 0; i < inst.classes.size(); ++i) {
    sol.objective += inst.classes[i][sol.chosen[i]].value;
    sol.total_weight += inst.classes[i][sol.chosen[i]].weight;
  }
}

class BranchAndBound {
 public:
  explicit BranchAndBound(const MckpInstance& inst) : inst_(inst), lp_(inst) {
    const std::size_t n = inst.classes.size();
    fixed_.assign(n, std::nullopt);
    branch_order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& order = branch_order_[i];
      order.resize(inst.classes[i].size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return inst.classes[i][a].value > inst.classes[i][b].value;
      });
    }
  }

  MckpSolution run() {
    const std::size_t n = inst_.classes.size();
    // The all-zero selection is always feasible.
    best_.chosen.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cls = inst_.classes[i];
      best_.chosen[i] = static_cast<std::size_t>(
          std::find_if(cls.begin(), cls.end(), [](const MckpItem& it) { return it.is_zero(); }) - cls.begin());
    }
    finish_solution(inst_, best_);

    root_bound_ = lp_.solve(fixed_, inst_.capacity).bound;
    search(0.0, 0.0);

    best_.optimal = true;
    best_.lp_bound = root_bound_;
    best_.nodes = nodes_;
    return best_;
  }

 private:
  void offer(const std::vector<std::size_t>& chosen) {
    MckpSolution cand;
    cand.chosen = chosen;
    finish_solution(inst_, cand);
    if (cand.total_weight <= inst_.capacity && cand.objective > best_.objective) best_ = std::move(cand);
  }

  void search(double fixed_value, double fixed_weight) {
    ++nodes_;
    const double residual = inst_.capacity - fixed_weight;
    LpSolution lp = lp_.solve(fixed_, residual);
    if (fixed_value + lp.bound <= best_.objective + kBoundTolerance && nodes_ > 1) return;

    // Rounded-down LP point: feasible by construction.
    offer(lp.base);
    if (!lp.fractional_class) return;

    const std::size_t f = *lp.fractional_class;
    for (std::size_t k : branch_order_[f]) {
      const auto& item = inst_.classes[f][k];
      if (item.weight > residual) continue;
      fixed_[f] = k;
      search(fixed_value + item.value, fixed_weight + item.weight);
      fixed_[f].reset();
    }
  }

  const MckpInstance& inst_;
  LpModel lp_;
  std::vector<std::optional<std::size_t>> fixed_;
  std::vector<std::vector<std::size_t>> branch_order_;
  MckpSolution best_;
  double root_bound_ = 0.0;
  std::size_t nodes_ = 0;
};

}  // namespace detail

// Sorts each class by weight, drops simply dominated items (another item is
// no heavier and at least as valuable) and flags items below the upper
// convex hull. The zero item always survives.
inline MckpInstance prune(const MckpInstance& inst) {
  detail::require_zero_items(inst);
  MckpInstance out;
  out.capacity = inst.capacity;
  out.beta = inst.beta;
  out.classes.resize(inst.classes.size());
  for (std::size_t i = 0; i < inst.classes.size(); ++i) {
    auto sorted = inst.classes[i];
    std::stable_sort(sorted.begin(), sorted.end(), [](const MckpItem& a, const MckpItem& b) {
      if (a.weight != b.weight) return a.weight < b.weight;
      if (a.value != b.value) return a.value > b.value;
      return a.prefix_length > b.prefix_length;
    });
    bool zero_kept = false;
    double best_value = -std::numeric_limits<double>::infinity();
    auto& kept = out.classes[i];
    for (auto item : sorted) {
      item.lp_dominated = false;
      const bool zero = item.is_zero() && !zero_kept;
      if (item.value > best_value || zero) {
        best_value = std::max(best_value, item.value);
        zero_kept = zero_kept || item.is_zero();
        kept.push_back(item);
      }
    }
    auto hull = detail::class_hull(kept);
    std::vector<bool> on_hull(kept.size(), false);
    for (std::size_t k : hull) on_hull[k] = true;
    for (std::size_t k = 0; k < kept.size(); ++k) kept[k].lp_dominated = !on_hull[k];
  }
  return out;
}

// Optimum of the continuous relaxation (hull greedy). At most one class ends
// up split between two adjacent hull points.
inline LpSolution solve_lp(const MckpInstance& inst) {
  detail::require_zero_items(inst);
  detail::LpModel model(inst);
  std::vector<std::optional<std::size_t>> none(inst.classes.size());
  return model.solve(none, inst.capacity);
}

// The per-class maximum-value selection, when it already fits.
inline std::optional<MckpSolution> fast_path(const MckpInstance& inst) {
  detail::require_zero_items(inst);
  MckpSolution sol;
  sol.chosen.resize(inst.classes.size());
  for (std::size_t i = 0; i < inst.classes.size(); ++i) {
    const auto& cls = inst.classes[i];
    std::size_t best = 0;
    for (std::size_t k = 1; k < cls.size(); ++k) {
      if (cls[k].value > cls[best].value || (cls[k].value == cls[best].value && cls[k].weight < cls[best].weight)) {
        best = k;
      }
    }
    sol.chosen[i] = best;
  }
  detail::finish_solution(inst, sol);
  if (!(sol.total_weight <= inst.capacity)) return std::nullopt;
  sol.optimal = true;
  sol.fast_path = true;
  sol.lp_bound = sol.objective;
  return sol;
}

// Depth-first branch-and-bound. Each node solves the LP over its free
// classes, takes the rounded-down LP point as a candidate incumbent and
// branches on the split class, heaviest-value items first.
inline MckpSolution solve_exact(const MckpInstance& inst) {
  detail::require_zero_items(inst);
  if (std::isinf(inst.capacity)) {
    if (auto sol = fast_path(inst)) return *sol;
  }
  detail::BranchAndBound bb(inst);
  return bb.run();
}

// prune, then the fast path when it applies, otherwise branch-and-bound.
inline MckpSolution solve(const MckpInstance& inst) {
  auto pruned = prune(inst);
  if (auto sol = fast_path(pruned)) return *sol;
  return solve_exact(pruned);
}

inline nlohmann::ordered_json instance_to_json(const MckpInstance& inst) {
  using ojson = nlohmann::ordered_json;
  ojson doc;
  doc["capacity"] = std::isinf(inst.capacity) ? ojson(nullptr) : ojson(inst.capacity);
  doc["beta"] = inst.beta ? ojson(*inst.beta) : ojson(nullptr);
  doc["classes"] = ojson::array();
  for (const auto& cls : inst.classes) {
    ojson jc = ojson::array();
    for (const auto& item : cls) {
      jc.push_back(ojson{{"k", item.prefix_length}, {"value", item.value}, {"weight", item.weight}});
    }
    doc["classes"].push_back(std::move(jc));
  }
  return doc;
}

}  // namespace adtarget

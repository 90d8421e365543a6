#pragma once

// End-to-end procedure: statistics -> candidate families -> knapsack ->
// strategy, plus coverage-floor sweeps, metrics and correlated-feature
// analysis.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "adtarget/errors.hpp"
#include "adtarget/mckp_solver.hpp"
#include "adtarget/prefix_gen.hpp"
#include "adtarget/stats_model.hpp"

namespace adtarget {

struct FeatureSelection {
  std::string name;
  PrefixCandidate prefix;
  std::vector<std::string> labels;  // selected type labels, ranking order
  std::size_t type_count = 0;
  bool active = false;  // selected set is a strict subset of the types
  bool excluded = false;
};

struct Strategy {
  double coverage_floor = 0.0;  // L
  std::vector<FeatureSelection> features;
  double coverage = 1.0;  // prod cum_q
  double lift = 1.0;      // prod lift
  double log_lift = 0.0;  // solver objective
  double lp_bound = 0.0;
  bool fast_path = false;
  std::size_t nodes = 0;

  std::optional<double> buy_rate;
  std::optional<double> conditional_buy_prob;  // lift * B
  std::optional<double> expected_sales;        // N * B * lift * coverage
  std::optional<double> profit;                // sales * (price - cost) - budget
  std::vector<std::string> warnings;

  std::size_t active_count() const {
    return static_cast<std::size_t>(
        std::count_if(features.begin(), features.end(), [](const FeatureSelection& f) { return f.active; }));
  }
};

struct SweepResult {
  std::vector<double> grid;
  std::vector<Strategy> points;
  std::vector<std::string> feature_names;
  std::vector<std::size_t> frequency;  // per feature: points where it is active
};

// "2.00·B": the conditional buy probability when B is left symbolic.
inline std::string lift_in_units_of_b(double lift) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f·B", lift);
  return buf;
}

inline Strategy evaluate(Strategy s, const StatsDataset& ds) {
  s.buy_rate = ds.buy_rate;
  s.conditional_buy_prob.reset();
  s.expected_sales.reset();
  s.profit.reset();
  s.warnings.clear();
  if (ds.buy_rate) {
    s.conditional_buy_prob = s.lift * *ds.buy_rate;
    if (*s.conditional_buy_prob > 1.0) {
      s.warnings.push_back("lift * B = " + detail::format_double(*s.conditional_buy_prob) +
                           " exceeds 1; the independence assumptions do not hold for this data");
    }
    if (ds.audience_count) {
      s.expected_sales = static_cast<double>(*ds.audience_count) * *ds.buy_rate * s.lift * s.coverage;
      if (ds.price && ds.unit_cost) {
        s.profit = *s.expected_sales * (*ds.price - *ds.unit_cost) - ds.budget.value_or(0.0);
      }
    }
  }
  return s;
}

// Holds the candidate families of one dataset so repeated solves (sweeps)
// share them read-only.
class StrategyEngine {
 public:
  explicit StrategyEngine(StatsDataset dataset, const std::set<std::string>& exclusions = {})
      : dataset_(std::move(dataset)), excluded_(dataset_.features.size(), false) {
    for (const auto& name : exclusions) {
      auto idx = dataset_.find(name);
      if (!idx) throw DomainError("unknown feature in exclusions: '" + name + "'");
      excluded_[*idx] = true;
    }
    families_.reserve(dataset_.features.size());
    for (std::size_t i = 0; i < dataset_.features.size(); ++i) {
      families_.push_back(build_family(dataset_.features[i], i));
    }
  }

  const StatsDataset& dataset() const noexcept { return dataset_; }
  const std::vector<CandidateFamily>& families() const noexcept { return families_; }

  MckpInstance instance(double coverage_floor) const {
    auto inst = build_instance(families_, coverage_floor);
    // Excluded features keep only the full prefix.
    for (std::size_t i = 0; i < inst.classes.size(); ++i) {
      if (!excluded_[i]) continue;
      auto& cls = inst.classes[i];
      const std::size_t m = families_[i].size();
      cls.erase(std::remove_if(cls.begin(), cls.end(), [&](const MckpItem& it) { return it.prefix_length != m; }),
                cls.end());
    }
    return inst;
  }

  Strategy optimize(double coverage_floor) const {
    if (!(coverage_floor >= 0.0 && coverage_floor <= 1.0)) throw DomainError("L must lie in [0,1]");
    const auto inst = prune(instance(coverage_floor));
    auto fast = fast_path(inst);
    const MckpSolution sol = fast ? *fast : solve_exact(inst);

    Strategy s;
    s.coverage_floor = coverage_floor;
    s.log_lift = sol.objective;
    s.lp_bound = sol.lp_bound;
    s.fast_path = sol.fast_path;
    s.nodes = sol.nodes;
    for (std::size_t i = 0; i < inst.classes.size(); ++i) {
      const auto& item = inst.classes[i][sol.chosen[i]];
      const auto& feature = dataset_.features[i];
      FeatureSelection fs;
      fs.name = feature.name;
      fs.prefix = candidate_of(families_, item);
      fs.type_count = feature.size();
      fs.active = !fs.prefix.is_full(fs.type_count);
      fs.excluded = excluded_[i];
      for (std::size_t k : fs.prefix.members) fs.labels.push_back(feature.types[k].label);
      s.coverage *= fs.prefix.cum_q;
      s.lift *= fs.prefix.lift;
      s.features.push_back(std::move(fs));
    }
    return evaluate(std::move(s), dataset_);
  }

 private:
  StatsDataset dataset_;
  std::vector<bool> excluded_;
  std::vector<CandidateFamily> families_;
};

inline Strategy optimize(const StatsDataset& ds, double coverage_floor, const std::set<std::string>& exclusions = {}) {
  if (!(coverage_floor >= 0.0 && coverage_floor <= 1.0)) throw DomainError("L must lie in [0,1]");
  return StrategyEngine(ds, exclusions).optimize(coverage_floor);
}

// `points` evenly spaced values on [0,1], endpoints included.
inline std::vector<double> default_grid(std::size_t points = 50) {
  std::vector<double> grid;
  if (points == 0) return grid;
  if (points == 1) return {0.0};
  for (std::size_t i = 0; i < points; ++i) {
    grid.push_back(i + 1 == points ? 1.0 : static_cast<double>(i) / static_cast<double>(points - 1));
  }
  return grid;
}

// One optimize per grid point. With jobs > 1 the points are spread over
// worker threads; results stay in grid order.
inline SweepResult sweep(const StatsDataset& ds, const std::vector<double>& grid,
                         const std::set<std::string>& exclusions = {}, unsigned jobs = 1) {
  for (double L : grid) {
    if (!(L >= 0.0 && L <= 1.0)) throw DomainError("grid value " + detail::format_double(L) + " outside [0,1]");
  }
  const StrategyEngine engine(ds, exclusions);
  SweepResult r;
  r.grid = grid;
  r.points.resize(grid.size());

  if (jobs <= 1 || grid.size() <= 1) {
    for (std::size_t g = 0; g < grid.size(); ++g) r.points[g] = engine.optimize(grid[g]);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
      for (std::size_t g; (g = next.fetch_add(1)) < grid.size();) {
        try {
          r.points[g] = engine.optimize(grid[g]);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(grid.size()));
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (const auto& f : ds.features) r.feature_names.push_back(f.name);
  r.frequency.assign(ds.features.size(), 0);
  for (const auto& s : r.points) {
    for (std::size_t i = 0; i < s.features.size(); ++i) r.frequency[i] += s.features[i].active ? 1 : 0;
  }
  return r;
}

// --- correlated features ----------------------------------------------------

struct GroupReport {
  std::vector<std::string> members;
  std::vector<std::size_t> frequency;           // per member
  std::vector<std::size_t> co_active_points;    // grid indices with >= 2 active members
  std::vector<std::string> co_active_members;   // members involved in any co-activation
  bool violation = false;
  std::optional<std::string> keep;
  std::vector<std::string> exclude;
};

// For each user-declared group of correlated features: where do members show
// up active together, and which one to keep (highest active frequency,
// first listed on ties) when they do.
inline std::vector<GroupReport> correlation_report(const SweepResult& sweep,
                                                   const std::vector<std::vector<std::string>>& groups) {
  auto index_of = [&](const std::string& name) {
    auto it = std::find(sweep.feature_names.begin(), sweep.feature_names.end(), name);
    if (it == sweep.feature_names.end()) throw DomainError("unknown feature in correlation group: '" + name + "'");
    return static_cast<std::size_t>(it - sweep.feature_names.begin());
  };

  std::vector<GroupReport> out;
  for (const auto& group : groups) {
    GroupReport g;
    g.members = group;
    std::vector<std::size_t> idx;
    for (const auto& name : group) {
      idx.push_back(index_of(name));
      g.frequency.push_back(sweep.frequency.at(idx.back()));
    }
    std::set<std::size_t> involved;
    for (std::size_t p = 0; p < sweep.points.size(); ++p) {
      std::vector<std::size_t> active;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        if (sweep.points[p].features.at(idx[j]).active) active.push_back(j);
      }
      if (active.size() >= 2) {
        g.co_active_points.push_back(p);
        involved.insert(active.begin(), active.end());
      }
    }
    for (std::size_t j : involved) g.co_active_members.push_back(group[j]);
    g.violation = !g.co_active_points.empty();
    if (g.violation) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < group.size(); ++j) {
        if (g.frequency[j] > g.frequency[best]) best = j;
      }
      g.keep = group[best];
      for (std::size_t j = 0; j < group.size(); ++j) {
        if (j != best) g.exclude.push_back(group[j]);
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace adtarget

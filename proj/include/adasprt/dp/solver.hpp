#pragma once

// Backward induction for the truncated adaptive SPRT.
//
// G(l, T) is the stopping risk. For n = T-1 down to 0 every grid point compares
// stopping now against the best one-label lookahead over the distinct worker types,
// reading G(., n+1) by piecewise-linear interpolation inside the grid and by the
// stopping risk outside it (the grid spans the outer stopping bounds, so that tail is
// exact). Ties stop. The continuation points of step n form C(n); its sup/inf are the
// hitting boundaries A(n)/B(n).
//
// The evidence levels actually reachable from l = 0 form a lattice of sums of
// increments. While a lattice level stays within GridConfig::lattice_budget nodes it is
// solved exactly (children are looked up by value rather than interpolated), so the
// risk at the start state carries no interpolation error for short horizons.

#include <adasprt/core/errors.hpp>
#include <adasprt/core/model.hpp>
#include <adasprt/dp/grid.hpp>
#include <adasprt/dp/policy_table.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adasprt {

/// Continue only when the lookahead risk beats stopping by more than this.
inline constexpr double kTieTolerance = 1e-12;

/// Raised when a continuation set is not a contiguous interval.
class StructureError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct ContinuationRegion {
  ContinuationInterval interval;
  double upper;  // A(n)
  double lower;  // B(n)
};

/// A(n) = sup C(n), B(n) = inf C(n) from per-point continuation flags. An empty set maps
/// both boundaries to the decision threshold.
inline ContinuationRegion boundaries_from_continuation(const Grid& grid, std::span<const std::uint8_t> proceed) {
  ContinuationInterval interval;
  for (std::size_t i = 0; i < proceed.size(); ++i) {
    if (!proceed[i]) continue;
    if (!interval.first) interval.first = i;
    if (interval.last && *interval.last + 1 != i) {
      throw StructureError("continuation set is not contiguous near l = " + std::to_string(grid.at(i)) +
                           "; the grid resolution is likely too coarse");
    }
    interval.last = i;
  }
  if (interval.empty()) return {interval, grid.center(), grid.center()};
  return {interval, grid.at(*interval.last), grid.at(*interval.first)};
}

/// Indices of the first occurrence of every distinct (tau00, tau11) pair, in order.
inline std::vector<std::size_t> distinct_workers(std::span<const WorkerParams> workers) {
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < workers.size(); ++i) {
    const bool seen = std::any_of(reps.begin(), reps.end(), [&](std::size_t r) { return workers[r] == workers[i]; });
    if (!seen) reps.push_back(i);
  }
  return reps;
}

namespace detail {

struct WorkerStep {
  std::int32_t index;
  double tau00;
  double tau11;
  double inc1;
  double inc0;
};

inline std::vector<WorkerStep> worker_steps(std::span<const WorkerParams> workers) {
  std::vector<WorkerStep> steps;
  for (std::size_t r : distinct_workers(workers)) {
    const auto& w = workers[r];
    steps.push_back({static_cast<std::int32_t>(r), w.tau00(), w.tau11(), log_lr_increment(w, 1),
                     log_lr_increment(w, 0)});
  }
  return steps;
}

struct Lookahead {
  double risk;
  std::int32_t worker;
};

/// Best one-label lookahead at evidence l; lowest worker index wins ties.
template <class NextRisk>
Lookahead best_lookahead(double l, const Posterior& post, std::span<const WorkerStep> steps, NextRisk&& g_next) {
  Lookahead best{std::numeric_limits<double>::infinity(), steps.empty() ? -1 : steps.front().index};
  for (const auto& s : steps) {
    const double p1 = post.p0 * (1.0 - s.tau00) + post.p1 * s.tau11;
    const double v = p1 * g_next(l + s.inc1) + (1.0 - p1) * g_next(l + s.inc0);
    if (v < best.risk) best = {v, s.index};
  }
  return best;
}

inline void build_lattice(PolicyTable& table, std::span<const WorkerStep> steps, std::size_t budget) {
  auto& levels = table.mutable_lattice();
  levels.clear();
  levels.push_back(LatticeLevel{{0.0}, {}, {}, {}});
  const std::size_t horizon = table.horizon();
  const std::size_t raw_cap = 8 * std::max<std::size_t>(budget, 1);
  while (levels.size() <= horizon) {
    const auto& prev = levels.back().l;
    if (prev.size() * 2 * steps.size() > raw_cap) break;
    std::vector<double> next;
    next.reserve(prev.size() * 2 * steps.size());
    for (double x : prev) {
      for (const auto& s : steps) {
        next.push_back(x + s.inc1);
        next.push_back(x + s.inc0);
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    if (next.size() > budget) break;
    levels.push_back(LatticeLevel{std::move(next), {}, {}, {}});
  }

  const Prior& prior = table.prior();
  const CostConfig& cost = table.cost();
  for (std::size_t n = levels.size(); n-- > 0;) {
    auto& level = levels[n];
    const std::size_t size = level.l.size();
    level.risk.assign(size, 0.0);
    level.select.assign(size, -1);
    level.proceed.assign(size, 0);
    for (std::size_t k = 0; k < size; ++k) {
      const double x = level.l[k];
      const auto post = posterior(x, prior);
      const double stop = std::min(prior.w0() * post.p0, prior.w1() * post.p1) + static_cast<double>(n) * cost.c();
      if (n == horizon) {
        level.risk[k] = stop;
        continue;
      }
      const auto best = best_lookahead(x, post, steps, [&](double y) { return table.value(y, n + 1); });
      level.select[k] = best.worker;
      level.proceed[k] = best.risk < stop - kTieTolerance ? 1 : 0;
      level.risk[k] = std::min(stop, best.risk);
    }
  }
}

}  // namespace detail

/// Solves the truncated problem with horizon T by backward induction.
inline PolicyTable solve(std::size_t horizon, const CostConfig& cost, const Prior& prior,
                         std::vector<WorkerParams> workers, const GridConfig& grid_cfg = {}) {
  if (horizon == 0) throw ConfigError("truncation length T must be at least 1");
  if (workers.empty()) throw ConfigError("worker pool must not be empty");
  const Grid grid = make_grid(grid_cfg, cost, prior, workers);
  const auto steps = detail::worker_steps(workers);
  PolicyTable table(horizon, cost, prior, std::move(workers), grid);

  const std::size_t points = grid.size();
  std::vector<double> xs(points);
  std::vector<Posterior> posts(points);
  std::vector<double> error_risk(points);
  for (std::size_t i = 0; i < points; ++i) {
    xs[i] = grid.at(i);
    posts[i] = posterior(xs[i], prior);
    error_risk[i] = std::min(prior.w0() * posts[i].p0, prior.w1() * posts[i].p1);
  }

  auto& terminal = table.mutable_risk(horizon);
  for (std::size_t i = 0; i < points; ++i) terminal[i] = error_risk[i] + static_cast<double>(horizon) * cost.c();
  table.set_continuation(horizon, {});
  table.set_boundaries(horizon, grid.center(), grid.center());

  std::vector<std::uint8_t> proceed(points);
  for (std::size_t n = horizon; n-- > 0;) {
    const std::span<const double> next = table.risk(n + 1);
    const double next_cost = static_cast<double>(n + 1) * cost.c();
    auto g_next = [&](double y) {
      if (!grid.contains(y)) {
        const auto p = posterior(y, prior);
        return std::min(prior.w0() * p.p0, prior.w1() * p.p1) + next_cost;
      }
      return grid.interpolate(next, y);
    };
    auto& current = table.mutable_risk(n);
    auto& select = table.mutable_select(n + 1);
    const double cost_now = static_cast<double>(n) * cost.c();
    for (std::size_t i = 0; i < points; ++i) {
      const double stop = error_risk[i] + cost_now;
      const auto best = detail::best_lookahead(xs[i], posts[i], steps, g_next);
      select[i] = best.worker;
      proceed[i] = best.risk < stop - kTieTolerance ? 1 : 0;
      current[i] = std::min(stop, best.risk);
    }
    const auto region = boundaries_from_continuation(grid, proceed);
    table.set_continuation(n, region.interval);
    table.set_boundaries(n, region.upper, region.lower);
  }

  detail::build_lattice(table, steps, grid_cfg.lattice_budget);
  return table;
}

/// Minimal truncated Bayes risk: G at zero evidence before any label.
inline double risk_at_start(const PolicyTable& policy) { return policy.value(0.0, 0); }

}  // namespace adasprt

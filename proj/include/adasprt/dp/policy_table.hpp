#pragma once

#include <adasprt/core/model.hpp>
#include <adasprt/dp/grid.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace adasprt {

/// Conditional risk after n labels with evidence l, if the requestor stops now:
/// min{w0 pi(0|l), w1 pi(1|l)} + n c.
inline double stopping_risk(double l, std::size_t n, const Prior& prior, const CostConfig& cost) {
  const auto post = posterior(l, prior);
  return std::min(prior.w0() * post.p0, prior.w1() * post.p1) + static_cast<double>(n) * cost.c();
}

/// Expected risk one label ahead when `w` is queried: p1 G(l + inc1) + (1 - p1) G(l + inc0).
template <class NextRisk>
double expected_next_risk(NextRisk&& g_next, double l, const Prior& prior, const WorkerParams& w) {
  const double p1 = response_prob_one(l, prior, w);
  return p1 * g_next(l + log_lr_increment(w, 1)) + (1.0 - p1) * g_next(l + log_lr_increment(w, 0));
}

/// Closed grid interval of continuation points [first, last]; empty when no point continues.
struct ContinuationInterval {
  std::optional<std::size_t> first;
  std::optional<std::size_t> last;
  bool empty() const { return !first.has_value(); }
  bool contains(std::size_t i) const { return first && *first <= i && i <= *last; }
};

/// One level of the exact start lattice: every log-likelihood ratio reachable from l = 0
/// in exactly n labels, sorted, with its Bellman value and decision.
struct LatticeLevel {
  std::vector<double> l;
  std::vector<double> risk;
  std::vector<std::int32_t> select;  // best worker for the next label; -1 at the horizon
  std::vector<std::uint8_t> proceed;

  std::optional<std::size_t> find(double x) const {
    const auto it = std::lower_bound(l.begin(), l.end(), x);
    if (it == l.end() || *it != x) return std::nullopt;
    return static_cast<std::size_t>(it - l.begin());
  }
};

/// Solved dynamic program for the truncated test.
///
/// Steps are indexed n = 0..T (labels collected so far). `risk(n)` is G(., n) on the
/// grid, `select(n)` is the worker to query for label n (n = 1..T) and `upper(n)`,
/// `lower(n)` are the hitting boundaries A(n), B(n). The start lattice holds exact
/// values at the evidence levels reachable from l = 0 within the lattice budget.
class PolicyTable {
 public:
  PolicyTable(std::size_t horizon, CostConfig cost, Prior prior, std::vector<WorkerParams> workers, Grid grid)
      : horizon_(horizon),
        cost_(cost),
        prior_(prior),
        workers_(std::move(workers)),
        grid_(grid),
        risk_(horizon + 1, std::vector<double>(grid.size())),
        select_(horizon + 1),
        continuation_(horizon + 1),
        upper_(horizon + 1, grid.center()),
        lower_(horizon + 1, grid.center()) {
    for (std::size_t n = 1; n <= horizon_; ++n) select_[n].assign(grid_.size(), 0);
  }

  std::size_t horizon() const { return horizon_; }
  const CostConfig& cost() const { return cost_; }
  const Prior& prior() const { return prior_; }
  std::span<const WorkerParams> workers() const { return workers_; }
  const Grid& grid() const { return grid_; }

  std::span<const double> risk(std::size_t n) const { return risk_[n]; }
  std::span<const std::int32_t> select(std::size_t n) const { return select_[n]; }
  const ContinuationInterval& continuation(std::size_t n) const { return continuation_[n]; }
  double upper(std::size_t n) const { return upper_[n]; }
  double lower(std::size_t n) const { return lower_[n]; }
  std::span<const LatticeLevel> lattice() const { return lattice_; }

  /// G(l, n): exact lattice value when l is a lattice node at level n, grid interpolation
  /// inside the grid, stopping risk outside it.
  double value(double l, std::size_t n) const {
    if (n < lattice_.size()) {
      if (auto k = lattice_[n].find(l)) return lattice_[n].risk[*k];
    }
    if (!grid_.contains(l)) return stopping_risk(l, n, prior_, cost_);
    return grid_.interpolate(risk_[n], l);
  }

  /// Lattice node for evidence l after n labels, if present.
  std::optional<std::size_t> lattice_node(double l, std::size_t n) const {
    if (n >= lattice_.size()) return std::nullopt;
    return lattice_[n].find(l);
  }

  // Mutable access for the solver and the loader.
  std::vector<double>& mutable_risk(std::size_t n) { return risk_[n]; }
  std::vector<std::int32_t>& mutable_select(std::size_t n) { return select_[n]; }
  void set_continuation(std::size_t n, ContinuationInterval c) { continuation_[n] = c; }
  void set_boundaries(std::size_t n, double upper, double lower) {
    upper_[n] = upper;
    lower_[n] = lower;
  }
  std::vector<LatticeLevel>& mutable_lattice() { return lattice_; }

 private:
  std::size_t horizon_;
  CostConfig cost_;
  Prior prior_;
  std::vector<WorkerParams> workers_;
  Grid grid_;
  std::vector<std::vector<double>> risk_;
  std::vector<std::vector<std::int32_t>> select_;
  std::vector<ContinuationInterval> continuation_;
  std::vector<double> upper_;
  std::vector<double> lower_;
  std::vector<LatticeLevel> lattice_;
};

}  // namespace adasprt

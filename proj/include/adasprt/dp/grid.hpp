#pragma once

#include <adasprt/core/errors.hpp>
#include <adasprt/core/model.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace adasprt {

/// Discretization of the log-likelihood-ratio axis.
struct GridConfig {
  std::size_t num_points = 2001;
  /// Both unset: span chosen from the cost and the pool (see make_grid).
  std::optional<double> l_min;
  std::optional<double> l_max;
  /// Largest number of nodes allowed in one level of the exact start lattice.
  std::size_t lattice_budget = 20000;
};

/// Uniform grid x_i = center + (i - center_index) * spacing. The decision threshold
/// log(pi0 w0 / (pi1 w1)) is always the grid point at center_index.
class Grid {
 public:
  Grid() = default;
  Grid(double center, double spacing, std::size_t num_points, std::size_t center_index)
      : center_(center), spacing_(spacing), n_(num_points), center_index_(center_index) {
    if (n_ < 3) throw ConfigError("grid needs at least 3 points");
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) throw ConfigError("grid spacing must be positive");
    if (center_index_ == 0 || center_index_ + 1 >= n_) {
      throw ConfigError("grid must strictly bracket the decision threshold");
    }
  }

  std::size_t size() const { return n_; }
  double spacing() const { return spacing_; }
  double center() const { return center_; }
  std::size_t center_index() const { return center_index_; }

  double at(std::size_t i) const {
    return center_ + (static_cast<double>(i) - static_cast<double>(center_index_)) * spacing_;
  }
  double l_min() const { return at(0); }
  double l_max() const { return at(n_ - 1); }
  bool contains(double l) const { return l >= l_min() && l <= l_max(); }

  /// Piecewise-linear interpolation of `values` (one per grid point) at l; l must be inside.
  double interpolate(std::span<const double> values, double l) const {
    const double pos = (l - center_) / spacing_ + static_cast<double>(center_index_);
    if (pos <= 0.0) return values[0];
    const double last = static_cast<double>(n_ - 1);
    if (pos >= last) return values[n_ - 1];
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    if (frac == 0.0) return values[k];
    return values[k] + frac * (values[k + 1] - values[k]);
  }

  /// Index of the grid point closest to l (clamped to the grid).
  std::size_t nearest(double l) const {
    const double pos = (l - center_) / spacing_ + static_cast<double>(center_index_);
    if (pos <= 0.0) return 0;
    if (pos >= static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(std::lround(pos));
  }

 private:
  double center_ = 0.0;
  double spacing_ = 1.0;
  std::size_t n_ = 3;
  std::size_t center_index_ = 1;
};

/// Largest absolute one-step log-likelihood-ratio increment in the pool.
inline double max_increment(std::span<const WorkerParams> workers) {
  double m = 0.0;
  for (const auto& w : workers) {
    m = std::max({m, std::abs(log_lr_increment(w, 0)), std::abs(log_lr_increment(w, 1))});
  }
  return m;
}

/// Half-width of the region outside which stopping is optimal at every step:
/// log((1 - c') / c') with c' = c / max(w0, w1).
inline double outer_half_width(const CostConfig& cost, const Prior& prior) {
  constexpr double kCostFloor = 1e-12;
  const double c = cost.c() / std::max(prior.w0(), prior.w1());
  if (c >= 0.5) return 0.0;
  return std::log1p(-c) - std::log(std::max(c, kCostFloor));
}

/// Builds the grid for a solve. The automatic span covers the outer stopping bounds
/// plus one maximal increment on each side; user spans are shifted so the decision
/// threshold falls on a grid point.
inline Grid make_grid(const GridConfig& cfg, const CostConfig& cost, const Prior& prior,
                      std::span<const WorkerParams> workers) {
  if (cfg.num_points < 3 || cfg.num_points % 2 == 0) {
    throw ConfigError("grid num_points must be odd and at least 3; got " + std::to_string(cfg.num_points));
  }
  const double center = prior.decision_threshold();
  if (!std::isfinite(center)) {
    throw ConfigError("prior pi1 must lie strictly inside (0,1) for the grid to bracket log(pi0/pi1)");
  }
  if (cfg.l_min.has_value() != cfg.l_max.has_value()) {
    throw ConfigError("grid l_min and l_max must be given together");
  }
  if (!cfg.l_min) {
    double half = outer_half_width(cost, prior) + max_increment(workers);
    if (!(half > 0.0)) half = 1.0;
    const std::size_t mid = (cfg.num_points - 1) / 2;
    return Grid(center, half / static_cast<double>(mid), cfg.num_points, mid);
  }
  const double lo = *cfg.l_min;
  const double hi = *cfg.l_max;
  if (!(lo < center && center < hi)) {
    throw ConfigError("grid [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "] does not bracket log(pi0 w0/(pi1 w1)) = " + std::to_string(center));
  }
  const double h = (hi - lo) / static_cast<double>(cfg.num_points - 1);
  auto k = static_cast<std::size_t>(std::lround((center - lo) / h));
  k = std::clamp<std::size_t>(k, 1, cfg.num_points - 2);
  return Grid(center, h, cfg.num_points, k);
}

}  // namespace adasprt

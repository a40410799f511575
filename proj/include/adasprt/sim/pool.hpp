#pragma once

#include <adasprt/core/errors.hpp>
#include <adasprt/core/model.hpp>
#include <adasprt/sim/rng.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace adasprt::sim {

/// M workers on the quarter circle: gamma ~ U(0, pi/2), tau00 = sin(gamma), tau11 = cos(gamma).
/// No worker dominates another on both accuracies.
inline std::vector<WorkerParams> gen_worker_pool(std::size_t m, std::uint64_t seed) {
  if (m == 0) throw ConfigError("worker pool size must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<WorkerParams> pool;
  pool.reserve(m);
  while (pool.size() < m) {
    const double gamma = uniform01(rng) * std::numbers::pi / 2.0;
    const double t00 = std::sin(gamma);
    const double t11 = std::cos(gamma);
    if (t00 > 0.0 && t00 < 1.0 && t11 > 0.0 && t11 < 1.0) pool.emplace_back(t00, t11);
  }
  return pool;
}

/// Truth of an object: theta = 1 with probability pi1.
inline Label draw_truth(double pi1, std::uint64_t seed, std::uint64_t stream) {
  return counter_uniform(seed, stream, 0, 0) < pi1 ? 1 : 0;
}

/// Label source for one simulated object. The k-th label from worker j is a fixed
/// function of (seed, stream, j, k), so repeated queries give fresh independent labels.
class SimulatedObject {
 public:
  SimulatedObject(std::span<const WorkerParams> pool, std::span<const std::size_t> candidates, Label truth,
                  std::uint64_t seed, std::uint64_t stream)
      : pool_(pool), candidates_(candidates), truth_(truth), seed_(seed), stream_(stream), counts_(pool.size(), 0) {}

  std::span<const std::size_t> candidates() const { return candidates_; }
  Label truth() const { return truth_; }

  std::optional<Label> query(std::size_t worker) {
    const std::uint64_t k = counts_[worker]++;
    const double u = counter_uniform(seed_, stream_, worker + 1, k);
    const auto& w = pool_[worker];
    if (truth_ == 1) return u < w.tau11() ? 1 : 0;
    return u < w.tau00() ? 0 : 1;
  }

 private:
  std::span<const WorkerParams> pool_;
  std::span<const std::size_t> candidates_;
  Label truth_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::vector<std::uint32_t> counts_;
};

inline std::vector<std::size_t> all_indices(std::size_t m) {
  std::vector<std::size_t> v(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = i;
  return v;
}

}  // namespace adasprt::sim

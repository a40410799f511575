#pragma once

#include <adasprt/core/errors.hpp>
#include <adasprt/core/model.hpp>
#include <adasprt/policy/engine.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace adasprt {

/// Chernoff-style comparison policy: query the worker with the largest KL information at
/// the posterior mode and stop at flat boundaries
///   A = -log c + log(pi0 max KL(1,.) / pi1),  B = log c + log(pi0 / (pi1 max KL(0,.))).
class KLPolicy {
 public:
  KLPolicy(std::vector<WorkerParams> workers, Prior prior, CostConfig cost, std::size_t horizon)
      : workers_(std::move(workers)), prior_(prior), cost_(cost), horizon_(horizon) {
    if (workers_.empty()) throw ConfigError("worker pool must not be empty");
    if (horizon_ == 0) throw ConfigError("truncation length T must be at least 1");
    if (!(cost.c() > 0.0)) throw ConfigError("KL policy boundaries need c > 0");
    double max0 = -1.0;
    double max1 = -1.0;
    for (std::size_t i = 0; i < workers_.size(); ++i) {
      const double k0 = kl_info(workers_[i], 0);
      const double k1 = kl_info(workers_[i], 1);
      if (k0 > max0) {
        max0 = k0;
        best0_ = i;
      }
      if (k1 > max1) {
        max1 = k1;
        best1_ = i;
      }
    }
    if (!(max0 > 0.0) || !(max1 > 0.0)) {
      throw ConfigError("KL policy needs a worker with positive KL information for each class");
    }
    const double log_prior_ratio = std::log(prior_.pi0()) - std::log(prior_.pi1());
    upper_ = -std::log(cost.c()) + log_prior_ratio + std::log(max1);
    lower_ = std::log(cost.c()) + log_prior_ratio - std::log(max0);
  }

  double upper() const { return upper_; }
  double lower() const { return lower_; }
  std::size_t best0() const { return best0_; }
  std::size_t best1() const { return best1_; }

  std::span<const WorkerParams> workers() const { return workers_; }
  const Prior& prior() const { return prior_; }
  const CostConfig& cost() const { return cost_; }
  std::size_t horizon() const { return horizon_; }

  /// Worker favoured at evidence l: the theta=0 side only when pi(0|l) > pi(1|l).
  Label favoured_side(double l) const {
    const auto post = posterior(l, prior_);
    return post.p0 > post.p1 ? 0 : 1;
  }

  Action next_action(const SequentialState& state, std::span<const std::size_t> available) const {
    const double l = state.l();
    if (state.n() >= horizon_ || l >= upper_ || l <= lower_ || available.empty()) {
      const auto post = posterior(l, prior_);
      return Stop{post.p1 >= post.p0 ? 1 : 0};
    }
    const Label side = favoured_side(l);
    const std::size_t preferred = side == 0 ? best0_ : best1_;
    if (detail::is_available(available, preferred)) return Continue{preferred};
    std::size_t best = available.front();
    double best_kl = -1.0;
    for (std::size_t j : available) {
      const double k = kl_info(workers_[j], side);
      if (k > best_kl || (k == best_kl && j < best)) {
        best_kl = k;
        best = j;
      }
    }
    return Continue{best};
  }

 private:
  std::vector<WorkerParams> workers_;
  Prior prior_;
  CostConfig cost_;
  std::size_t horizon_;
  std::size_t best0_ = 0;
  std::size_t best1_ = 0;
  double upper_ = 0.0;
  double lower_ = 0.0;
};

inline KLPolicy kl_build(std::vector<WorkerParams> workers, const Prior& prior, const CostConfig& cost,
                         std::size_t horizon) {
  return KLPolicy(std::move(workers), prior, cost, horizon);
}

inline Action kl_next_action(const KLPolicy& policy, const SequentialState& state,
                             std::span<const std::size_t> available) {
  return policy.next_action(state, available);
}

}  // namespace adasprt

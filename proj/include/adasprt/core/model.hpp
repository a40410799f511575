#pragma once

// Two-coin worker model, log-likelihood-ratio arithmetic, posteriors and the
// per-object loss. Everything here is a pure function of value types.

#include <adasprt/core/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>

namespace adasprt {

/// Binary label / hypothesis / decision. Always 0 or 1.
using Label = int;

/// One worker's conditional accuracies: tau00 = P(X=0 | theta=0), tau11 = P(X=1 | theta=1).
class WorkerParams {
 public:
  WorkerParams(double tau00, double tau11) : tau00_(tau00), tau11_(tau11) {
    if (!(tau00 > 0.0 && tau00 < 1.0) || !(tau11 > 0.0 && tau11 < 1.0)) {
      throw ConfigError("worker accuracies must lie in the open interval (0,1); got tau00=" +
                        std::to_string(tau00) + " tau11=" + std::to_string(tau11));
    }
  }

  double tau00() const { return tau00_; }
  double tau11() const { return tau11_; }

  /// P(X = 1 | theta).
  double prob_one(Label theta) const { return theta == 1 ? tau11_ : 1.0 - tau00_; }

  /// tau00 + tau11 == 1 means the label carries no information about theta.
  bool informative() const { return tau00_ + tau11_ != 1.0; }

  friend bool operator==(const WorkerParams&, const WorkerParams&) = default;

 private:
  double tau00_;
  double tau11_;
};

/// Class prior pi1 = P(theta = 1) and misclassification weights (w0, w1).
class Prior {
 public:
  explicit Prior(double pi1, double w0 = 1.0, double w1 = 1.0) : pi1_(pi1), w0_(w0), w1_(w1) {
    if (!(pi1 >= 0.0 && pi1 <= 1.0)) {
      throw ConfigError("prior pi1 must lie in [0,1]; got " + std::to_string(pi1));
    }
    if (!(w0 > 0.0) || !(w1 > 0.0) || !std::isfinite(w0) || !std::isfinite(w1)) {
      throw ConfigError("decision weights must be positive and finite");
    }
  }

  /// Prior with pi1 clamped to [margin, 1 - margin].
  static Prior clamped(double pi1, double margin, double w0 = 1.0, double w1 = 1.0) {
    margin = std::clamp(margin, 0.0, 0.5);
    return Prior(std::clamp(pi1, margin, 1.0 - margin), w0, w1);
  }

  double pi0() const { return 1.0 - pi1_; }
  double pi1() const { return pi1_; }
  double w0() const { return w0_; }
  double w1() const { return w1_; }

  /// log(pi0 w0 / (pi1 w1)): the log-likelihood ratio at which both decisions carry equal risk.
  double decision_threshold() const { return std::log(pi0() * w0_) - std::log(pi1_ * w1_); }

  friend bool operator==(const Prior&, const Prior&) = default;

 private:
  double pi1_;
  double w0_;
  double w1_;
};

/// Relative cost of one label, in [0, 1].
class CostConfig {
 public:
  explicit CostConfig(double c) : c_(c) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw ConfigError("relative label cost c must lie in [0,1]; got " + std::to_string(c));
    }
  }
  double c() const { return c_; }
  friend bool operator==(const CostConfig&, const CostConfig&) = default;

 private:
  double c_;
};

/// Posterior class probabilities.
struct Posterior {
  double p0;
  double p1;
};

namespace detail {

inline constexpr double kExpSaturation = 700.0;

/// 1 / (1 + e^t) with saturation beyond |t| > 700.
inline double logistic_complement(double t) {
  if (t > kExpSaturation) return 0.0;
  if (t < -kExpSaturation) return 1.0;
  return 1.0 / (1.0 + std::exp(t));
}

}  // namespace detail

/// Increment added to the running log-likelihood ratio log(f1/f0) when `w` reports `label`.
inline double log_lr_increment(const WorkerParams& w, Label label) {
  return label == 1 ? std::log(w.tau11()) - std::log1p(-w.tau00())
                    : std::log1p(-w.tau11()) - std::log(w.tau00());
}

/// Posterior given accumulated log-likelihood ratio `l`. The prior is not folded into `l`.
inline Posterior posterior(double l, const Prior& prior) {
  // t = l + log(pi1/pi0); pi1 in {0,1} gives t = -inf / +inf and saturates cleanly.
  const double t = l + (std::log(prior.pi1()) - std::log(prior.pi0()));
  if (std::isnan(t)) return {0.5, 0.5};
  return {detail::logistic_complement(t), detail::logistic_complement(-t)};
}

/// Predictive probability that `w` reports 1 given the current evidence.
inline double response_prob_one(double l, const Prior& prior, const WorkerParams& w) {
  const auto post = posterior(l, prior);
  return post.p0 * (1.0 - w.tau00()) + post.p1 * w.tau11();
}

/// Loss of one object: 1{decision != theta} + c n.
inline double loss(Label decision, Label theta, std::size_t n, const CostConfig& cost) {
  return (decision != theta ? 1.0 : 0.0) + cost.c() * static_cast<double>(n);
}

/// Kullback-Leibler information of one label from `w` when the truth is `theta`:
/// KL(1,w) = E[log f1/f0 | theta=1], KL(0,w) = E[log f0/f1 | theta=0].
inline double kl_info(const WorkerParams& w, Label theta) {
  const double inc1 = log_lr_increment(w, 1);
  const double inc0 = log_lr_increment(w, 0);
  if (theta == 1) return w.tau11() * inc1 + (1.0 - w.tau11()) * inc0;
  return -((1.0 - w.tau00()) * inc1 + w.tau00() * inc0);
}

/// Bayes decision for the current evidence; ties go to 1.
/// Compared against the threshold directly so it agrees bit-for-bit with solved boundaries.
inline Label bayes_decision(double l, const Prior& prior) {
  return l >= prior.decision_threshold() ? 1 : 0;
}

/// The pool must contain at least one worker with strictly positive information on both sides.
inline bool pool_identifiable(std::span<const WorkerParams> workers) {
  return std::any_of(workers.begin(), workers.end(), [](const WorkerParams& w) {
    return kl_info(w, 0) > 0.0 && kl_info(w, 1) > 0.0;
  });
}

}  // namespace adasprt

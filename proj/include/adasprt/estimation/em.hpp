#pragma once

// MAP-EM for the two-coin model with Beta(alpha, beta) priors on every worker accuracy.
//
// Objective (regularized negative log-likelihood, minimized):
//   h = - sum_j log( (1-pi1) prod_i f0(Z_ji) + pi1 prod_i f1(Z_ji) )
//       - sum_i [ (a-1) log t00_i + (b-1) log(1-t00_i) + (a-1) log t11_i + (b-1) log(1-t11_i) ]
// where the inner products run over the workers that labeled object j.
//
// M-step closed forms, with q_j = P(theta_j = 1 | data):
//   pi1   = mean of q_j over labeled objects
//   t11_i = (a-1 + sum_j q_j Z_ji)         / (a+b-2 + sum_j q_j)
//   t00_i = (a-1 + sum_j (1-q_j)(1-Z_ji))  / (a+b-2 + sum_j (1-q_j))
// Each is the maximizer of a concave function, so clamping to an interval keeps the
// EM objective non-increasing.

#include <adasprt/core/errors.hpp>
#include <adasprt/core/model.hpp>
#include <adasprt/estimation/label_matrix.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace adasprt {

struct EstimationConfig {
  double alpha = 4.0;
  double beta = 2.0;
  double tol = 1e-8;
  std::size_t max_iter = 500;
  /// Worker accuracies are kept in [clamp_eps, 1 - clamp_eps].
  double clamp_eps = 1e-6;
  /// Optional [lo, hi] interval for pi1 (the empirical-Bayes driver uses [c, 1 - c]).
  std::optional<std::pair<double, double>> prior_clamp;
  /// false: worker accuracies are known and held fixed; only pi1 is fitted.
  bool update_workers = true;
  /// Symmetric pseudo-count a on pi1: adds -a (log pi1 + log(1-pi1)) to the objective and
  /// turns the pi1 update into (sum q + a) / (labeled + 2a). 0 is the plain objective.
  double pi_pseudo_count = 0.0;

  void validate() const {
    if (!(alpha > 1.0) || !(beta > 1.0)) {
      throw ConfigError("Beta prior needs alpha > 1 and beta > 1; got alpha=" + std::to_string(alpha) +
                        " beta=" + std::to_string(beta));
    }
    if (!(tol > 0.0)) throw ConfigError("EM tolerance must be positive");
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw ConfigError("clamp_eps must lie in (0, 0.5)");
    if (!(pi_pseudo_count >= 0.0)) throw ConfigError("pi1 pseudo-count must be non-negative");
  }
};

struct Estimates {
  double pi1 = 0.5;
  std::vector<double> tau00;
  std::vector<double> tau11;
  double objective = 0.0;
  std::size_t iters = 0;
  bool converged = false;

  std::vector<WorkerParams> workers() const {
    std::vector<WorkerParams> out;
    out.reserve(tau00.size());
    for (std::size_t i = 0; i < tau00.size(); ++i) out.emplace_back(tau00[i], tau11[i]);
    return out;
  }
};

/// pi1 = 0.5 and every accuracy at the Beta prior mode (a-1)/(a+b-2).
inline Estimates initial_estimates(std::size_t num_workers, const EstimationConfig& cfg) {
  const double mode = (cfg.alpha - 1.0) / (cfg.alpha + cfg.beta - 2.0);
  Estimates e;
  e.pi1 = 0.5;
  e.tau00.assign(num_workers, mode);
  e.tau11.assign(num_workers, mode);
  return e;
}

inline Estimates estimates_from_workers(double pi1, std::span<const WorkerParams> workers) {
  Estimates e;
  e.pi1 = pi1;
  for (const auto& w : workers) {
    e.tau00.push_back(w.tau00());
    e.tau11.push_back(w.tau11());
  }
  return e;
}

namespace detail {

struct ClassLogLik {
  double given0;  // log(1-pi1) + sum log f0
  double given1;  // log(pi1)   + sum log f1
};

inline ClassLogLik class_loglik(const Estimates& est, std::span<const WorkerLabel> row) {
  double a = std::log1p(-est.pi1);
  double b = std::log(est.pi1);
  for (const auto& e : row) {
    const double t00 = est.tau00[e.worker];
    const double t11 = est.tau11[e.worker];
    if (e.label == 1) {
      a += std::log1p(-t00);
      b += std::log(t11);
    } else {
      a += std::log(t00);
      b += std::log1p(-t11);
    }
  }
  return {a, b};
}

inline double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double pi_update(double q_sum, std::size_t labeled, double fallback, const EstimationConfig& cfg) {
  const double a = cfg.pi_pseudo_count;
  const double denom = static_cast<double>(labeled) + 2.0 * a;
  return denom > 0.0 ? (q_sum + a) / denom : fallback;
}

inline double pi_penalty(double pi, const EstimationConfig& cfg) {
  if (cfg.pi_pseudo_count == 0.0) return 0.0;
  return -cfg.pi_pseudo_count * (std::log(pi) + std::log1p(-pi));
}

inline double clamp_pi(double pi, const EstimationConfig& cfg) {
  if (cfg.prior_clamp) pi = std::clamp(pi, cfg.prior_clamp->first, cfg.prior_clamp->second);
  return std::clamp(pi, cfg.clamp_eps, 1.0 - cfg.clamp_eps);
}

}  // namespace detail

/// Regularized negative log-likelihood of `est` on `data`. Objects without labels add 0.
inline double reg_neg_loglik(const Estimates& est, const LabelMatrix& data, const EstimationConfig& cfg) {
  double h = 0.0;
  for (std::size_t j = 0; j < data.num_objects(); ++j) {
    const auto row = data.object_labels(j);
    if (row.empty()) continue;
    const auto ll = detail::class_loglik(est, row);
    h -= detail::log_sum_exp(ll.given0, ll.given1);
  }
  const double a1 = cfg.alpha - 1.0;
  const double b1 = cfg.beta - 1.0;
  for (std::size_t i = 0; i < est.tau00.size(); ++i) {
    const double t00 = est.tau00[i];
    const double t11 = est.tau11[i];
    if (a1 != 0.0) h -= a1 * (std::log(t00) + std::log(t11));
    if (b1 != 0.0) h -= b1 * (std::log1p(-t00) + std::log1p(-t11));
  }
  return h + detail::pi_penalty(est.pi1, cfg);
}

/// q_j = P(theta_j = 1 | data, est), computed in log space.
inline std::vector<double> e_step(const Estimates& est, const LabelMatrix& data) {
  std::vector<double> q(data.num_objects(), est.pi1);
  for (std::size_t j = 0; j < data.num_objects(); ++j) {
    const auto row = data.object_labels(j);
    if (row.empty()) continue;
    const auto ll = detail::class_loglik(est, row);
    q[j] = detail::logistic_complement(ll.given0 - ll.given1);
  }
  return q;
}

/// MAP M-step. `previous` supplies values for parameters the data says nothing about.
inline Estimates m_step(std::span<const double> q, const LabelMatrix& data, const EstimationConfig& cfg,
                        const Estimates& previous) {
  Estimates next = previous;
  double q_sum = 0.0;
  std::size_t labeled = 0;
  for (std::size_t j = 0; j < data.num_objects(); ++j) {
    if (data.object_labels(j).empty()) continue;
    q_sum += q[j];
    ++labeled;
  }
  next.pi1 = detail::clamp_pi(detail::pi_update(q_sum, labeled, previous.pi1, cfg), cfg);

  if (cfg.update_workers) {
    const double a1 = cfg.alpha - 1.0;
    const double ab2 = cfg.alpha + cfg.beta - 2.0;
    const double lo = cfg.clamp_eps;
    const double hi = 1.0 - cfg.clamp_eps;
    for (std::size_t i = 0; i < data.num_workers(); ++i) {
      double s1 = 0.0, d1 = 0.0, s0 = 0.0, d0 = 0.0;
      for (const auto& e : data.worker_labels(i)) {
        const double qj = q[e.object];
        d1 += qj;
        d0 += 1.0 - qj;
        if (e.label == 1) {
          s1 += qj;
        } else {
          s0 += 1.0 - qj;
        }
      }
      if (ab2 + d1 > 0.0) next.tau11[i] = std::clamp((a1 + s1) / (ab2 + d1), lo, hi);
      if (ab2 + d0 > 0.0) next.tau00[i] = std::clamp((a1 + s0) / (ab2 + d0), lo, hi);
    }
  }
  next.objective = reg_neg_loglik(next, data, cfg);
  return next;
}

namespace detail {

/// EM over pi1 alone. With the accuracies fixed each labeled object reduces to its two
/// class log-likelihoods, computed once.
inline Estimates fit_prior_only(const LabelMatrix& data, const EstimationConfig& cfg, Estimates est,
                                std::vector<double>* objective_trace) {
  std::vector<ClassLogLik> rows;
  Estimates flat = est;
  flat.pi1 = 0.5;
  for (std::size_t j = 0; j < data.num_objects(); ++j) {
    const auto row = data.object_labels(j);
    if (row.empty()) continue;
    auto ll = class_loglik(flat, row);
    ll.given0 -= std::log(0.5);
    ll.given1 -= std::log(0.5);
    rows.push_back(ll);
  }
  // objective terms that do not move with pi1
  const double penalty = est.objective - pi_penalty(est.pi1, cfg) + [&] {
    double h = 0.0;
    for (const auto& r : rows) h += log_sum_exp(std::log1p(-est.pi1) + r.given0, std::log(est.pi1) + r.given1);
    return h;
  }();
  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    const double log0 = std::log1p(-est.pi1);
    const double log1 = std::log(est.pi1);
    double q_sum = 0.0;
    for (const auto& r : rows) q_sum += logistic_complement((log0 + r.given0) - (log1 + r.given1));
    const double next_pi = clamp_pi(pi_update(q_sum, rows.size(), est.pi1, cfg), cfg);
    const double n0 = std::log1p(-next_pi);
    const double n1 = std::log(next_pi);
    double h = penalty + pi_penalty(next_pi, cfg);
    for (const auto& r : rows) h -= log_sum_exp(n0 + r.given0, n1 + r.given1);
    const double change = std::abs(est.objective - h);
    est.pi1 = next_pi;
    est.objective = h;
    est.iters = it + 1;
    if (objective_trace) objective_trace->push_back(h);
    if (change < cfg.tol) {
      est.converged = true;
      break;
    }
  }
  return est;
}

}  // namespace detail

/// EM from `init` until the objective moves by less than cfg.tol or cfg.max_iter steps.
/// Non-convergence is reported through Estimates::converged, never thrown. When
/// `objective_trace` is given it receives the objective before the first and after every
/// iteration.
inline Estimates em_fit(const LabelMatrix& data, const EstimationConfig& cfg, Estimates init,
                        std::vector<double>* objective_trace = nullptr) {
  cfg.validate();
  if (init.tau00.size() != data.num_workers() || init.tau11.size() != data.num_workers()) {
    throw ConfigError("initial estimates cover " + std::to_string(init.tau00.size()) + " workers, data has " +
                      std::to_string(data.num_workers()));
  }
  Estimates est = std::move(init);
  est.iters = 0;
  est.converged = false;
  if (cfg.max_iter > 0) {
    est.pi1 = detail::clamp_pi(est.pi1, cfg);
    for (auto* v : {&est.tau00, &est.tau11}) {
      for (double& t : *v) t = std::clamp(t, cfg.clamp_eps, 1.0 - cfg.clamp_eps);
    }
  }
  est.objective = reg_neg_loglik(est, data, cfg);
  if (objective_trace) objective_trace->push_back(est.objective);
  if (!cfg.update_workers) return detail::fit_prior_only(data, cfg, std::move(est), objective_trace);
  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    const auto q = e_step(est, data);
    Estimates next = m_step(q, data, cfg, est);
    next.iters = it + 1;
    const double change = std::abs(est.objective - next.objective);
    est = std::move(next);
    if (objective_trace) objective_trace->push_back(est.objective);
    if (change < cfg.tol) {
      est.converged = true;
      break;
    }
  }
  return est;
}

}  // namespace adasprt

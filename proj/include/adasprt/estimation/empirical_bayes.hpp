#pragma once

// Empirical-Bayes driver over a sequence of objects: solve under the current prior
// estimate, run one episode, add its labels to the pool of data, refit by warm-started EM.

#include <adasprt/core/model.hpp>
#include <adasprt/dp/solver.hpp>
#include <adasprt/estimation/em.hpp>
#include <adasprt/policy/engine.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

namespace adasprt {

/// Solved tables keyed by the prior rounded to a multiple of 1/steps (4 decimals by
/// default), for a fixed pool, cost, horizon and grid. A cache may be shared across runs
/// that agree on those.
class PolicyCache {
 public:
  PolicyCache(std::vector<WorkerParams> workers, CostConfig cost, std::size_t horizon, GridConfig grid = {},
              std::int64_t steps = 10000)
      : workers_(std::move(workers)), cost_(cost), horizon_(horizon), grid_(grid), steps_(steps) {
    if (steps_ < 1) throw ConfigError("cache resolution must be at least one step per unit");
  }

  std::int64_t key(double pi1) const { return std::llround(pi1 * static_cast<double>(steps_)); }

  /// Table solved at the rounded prior. Repeated calls with the same key return the same table.
  std::shared_ptr<const PolicyTable> get(double pi1) {
    const auto k = key(pi1);
    auto it = tables_.find(k);
    if (it != tables_.end()) return it->second;
    const double rounded = static_cast<double>(k) / static_cast<double>(steps_);
    auto table = std::make_shared<const PolicyTable>(solve(horizon_, cost_, Prior(rounded), workers_, grid_));
    tables_.emplace(k, table);
    return table;
  }

  std::size_t size() const { return tables_.size(); }

 private:
  std::vector<WorkerParams> workers_;
  CostConfig cost_;
  std::size_t horizon_;
  GridConfig grid_;
  std::int64_t steps_;
  std::map<std::int64_t, std::shared_ptr<const PolicyTable>> tables_;
};

struct EbConfig {
  CostConfig cost{0.0};
  std::size_t horizon = 1;
  EstimationConfig estimation;
  /// true: the solver uses the known worker accuracies and EM fits pi1 only.
  bool workers_known = true;
  QueryMode mode = QueryMode::repeat;
  GridConfig grid;
  /// Cache tables by the prior rounded to 4 decimals (known workers only). false solves
  /// every object at the exact estimate.
  bool cache_tables = true;
  /// Solve each object's table over the workers its source can serve, instead of the whole
  /// pool. Meant for dataset replay, where each object has a few labelers out of many.
  bool per_object_pool = false;
  /// Pseudo-count on pi1 used by the refits. With 1 the estimate before any data is the
  /// 0.5 starting value, and a single confidently decided object cannot push it to the
  /// clamp (where every later object stops with no labels and the estimate freezes).
  double pi_pseudo_count = 1.0;
  /// The first `calibration_objects` objects consume up to T labels each with no policy;
  /// one EM fit follows them and their decisions use the fitted posterior.
  std::size_t calibration_objects = 0;
};

struct EstimateRecord {
  std::size_t k;
  double pi1_hat;
  double mean_abs_tau_error;  // NaN without true accuracies
  std::size_t em_iters;
  double objective;
};

struct EbObjectResult {
  std::size_t stop_time;
  Label decision;
  bool forced;
  bool calibration;
  double prior_used;
};

struct EbRunResult {
  std::vector<EbObjectResult> objects;
  std::vector<EstimateRecord> history;
  Estimates final_estimates;
};

namespace detail {

inline double mean_abs_tau_error(const Estimates& est, std::span<const WorkerParams> truth) {
  if (truth.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    s += std::abs(est.tau00[i] - truth[i].tau00()) + std::abs(est.tau11[i] - truth[i].tau11());
  }
  return s / (2.0 * static_cast<double>(truth.size()));
}

/// Presents a source's candidates as local indices 0..m-1.
template <class Source>
class LocalSource {
 public:
  explicit LocalSource(Source& inner) : inner_(inner), global_(inner.candidates().begin(), inner.candidates().end()) {
    local_.resize(global_.size());
    for (std::size_t i = 0; i < local_.size(); ++i) local_[i] = i;
  }
  std::span<const std::size_t> candidates() const { return local_; }
  std::optional<Label> query(std::size_t i) { return inner_.query(global_[i]); }

 private:
  Source& inner_;
  std::vector<std::size_t> global_;
  std::vector<std::size_t> local_;
};

/// Solver prior: the estimate clamped to [c, 1-c].
inline Prior solver_prior(double pi1_hat, const CostConfig& cost) { return Prior::clamped(pi1_hat, cost.c()); }

}  // namespace detail

/// Runs K objects. `source_for(k)` returns the LabelSource of object k; it is called once
/// per object and must stay alive while that object runs. `workers` holds the known
/// accuracies (workers_known) or only fixes the pool size; `true_workers`, when given,
/// feeds the tau-error column of the history. `cache` may be null.
template <class SourceFactory>
EbRunResult empirical_bayes_run(std::size_t K, SourceFactory&& source_for, const std::vector<WorkerParams>& workers,
                                const EbConfig& cfg, std::span<const WorkerParams> true_workers = {},
                                PolicyCache* cache = nullptr) {
  if (K == 0) throw ConfigError("empirical Bayes run needs at least one object");
  if (workers.empty()) throw ConfigError("worker pool must not be empty");
  EstimationConfig est_cfg = cfg.estimation;
  est_cfg.update_workers = !cfg.workers_known;
  est_cfg.pi_pseudo_count = cfg.pi_pseudo_count;
  const double c = cfg.cost.c();
  const double margin = std::min(c, 0.5);
  est_cfg.prior_clamp = std::make_pair(margin, 1.0 - margin);
  est_cfg.validate();

  Estimates est = cfg.workers_known ? estimates_from_workers(0.5, workers)
                                    : initial_estimates(workers.size(), est_cfg);
  est.pi1 = 0.5;
  LabelMatrix data(K, workers.size(), cfg.mode == QueryMode::repeat);

  std::optional<PolicyCache> local_cache;
  if (cfg.workers_known && cfg.cache_tables && cache == nullptr) {
    local_cache.emplace(workers, cfg.cost, cfg.horizon, cfg.grid);
    cache = &*local_cache;
  }
  if (!cfg.workers_known || !cfg.cache_tables) cache = nullptr;

  EbRunResult out;
  out.objects.reserve(K);
  const std::size_t calib = std::min(cfg.calibration_objects, K);

  auto refit = [&](std::size_t k) {
    est = em_fit(data, est_cfg, est);
    out.history.push_back({k, est.pi1, detail::mean_abs_tau_error(est, true_workers), est.iters, est.objective});
  };

  for (std::size_t k = 0; k < calib; ++k) {
    auto&& source = source_for(k);
    std::size_t taken = 0;
    bool forced = false;
    for (std::size_t j : source.candidates()) {
      if (taken >= cfg.horizon) break;
      const auto x = source.query(j);
      if (!x) {
        forced = true;
        continue;
      }
      data.add(k, j, *x);
      ++taken;
    }
    forced = forced || taken < cfg.horizon;
    out.objects.push_back({taken, 1, forced, true, est.pi1});
  }
  if (calib > 0) {
    refit(calib - 1);
    const auto ws = est.workers();
    const Prior prior = detail::solver_prior(est.pi1, cfg.cost);
    for (std::size_t k = 0; k < calib; ++k) {
      double l = 0.0;
      for (const auto& e : data.object_labels(k)) l += log_lr_increment(ws[e.worker], e.label);
      out.objects[k].decision = bayes_decision(l, prior);
      out.objects[k].prior_used = prior.pi1();
    }
  }

  for (std::size_t k = calib; k < K; ++k) {
    const Prior prior = detail::solver_prior(est.pi1, cfg.cost);
    auto&& source = source_for(k);
    if (cfg.per_object_pool) {
      const auto cands = source.candidates();
      if (cands.empty()) {
        out.objects.push_back({0, bayes_decision(0.0, prior), true, false, prior.pi1()});
        refit(k);
        continue;
      }
      std::vector<WorkerParams> local;
      local.reserve(cands.size());
      for (std::size_t j : cands) {
        local.push_back(cfg.workers_known ? workers[j] : WorkerParams(est.tau00[j], est.tau11[j]));
      }
      const auto table = solve(cfg.horizon, cfg.cost, prior, std::move(local), cfg.grid);
      detail::LocalSource<std::remove_cvref_t<decltype(source)>> view(source);
      const auto ep = run_episode(AdaPolicy(table, cfg.mode), view, cfg.mode);
      for (const auto& s : ep.state.trace()) data.add(k, cands[s.worker], s.label);
      out.objects.push_back({ep.stop_time, ep.decision, ep.forced, false, prior.pi1()});
      refit(k);
      continue;
    }
    std::shared_ptr<const PolicyTable> table;
    if (cache) {
      table = cache->get(prior.pi1());
    } else {
      table = std::make_shared<const PolicyTable>(
          solve(cfg.horizon, cfg.cost, prior, cfg.workers_known ? workers : est.workers(), cfg.grid));
    }
    const auto ep = run_episode(AdaPolicy(*table, cfg.mode), source, cfg.mode);
    for (const auto& s : ep.state.trace()) data.add(k, s.worker, s.label);
    out.objects.push_back({ep.stop_time, ep.decision, ep.forced, false, table->prior().pi1()});
    refit(k);
  }
  out.final_estimates = est;
  return out;
}

}  // namespace adasprt

#pragma once

// Monte Carlo experiments. Replication r, object k draws its truth and labels from the
// counter stream object_stream(r, k), so every policy, horizon and cost sees the same
// objects and the same label sequence from each worker.

#include <adasprt/baselines/kl_policy.hpp>
#include <adasprt/core/errors.hpp>
#include <adasprt/core/model.hpp>
#include <adasprt/dp/solver.hpp>
#include <adasprt/estimation/empirical_bayes.hpp>
#include <adasprt/policy/engine.hpp>
#include <adasprt/sim/pool.hpp>
#include <adasprt/sim/rng.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adasprt::sim {

struct Outcome {
  std::size_t stop_time;
  Label decision;
  Label truth;
};

struct Metrics {
  double avg_stop = 0.0;
  double avg_stop_se = 0.0;
  double accuracy = 0.0;
  double accuracy_se = 0.0;
  double avg_loss = 0.0;
  double avg_loss_se = 0.0;
  std::size_t reps = 0;
};

/// Mean of 1{D != theta} + c N over the episodes.
inline double averaged_loss(std::span<const Outcome> episodes, const CostConfig& cost) {
  if (episodes.empty()) throw ConfigError("averaged loss needs at least one episode");
  double s = 0.0;
  for (const auto& e : episodes) {
    s += (e.decision != e.truth ? 1.0 : 0.0) + cost.c() * static_cast<double>(e.stop_time);
  }
  return s / static_cast<double>(episodes.size());
}

/// Metrics over consecutive groups of `group` episodes (one group per replication).
/// Means are over all episodes; standard errors treat group means as the i.i.d. units.
inline Metrics summarize(std::span<const Outcome> episodes, const CostConfig& cost, std::size_t group = 1) {
  if (episodes.empty()) throw ConfigError("metrics need at least one episode");
  if (group == 0 || episodes.size() % group != 0) throw ConfigError("episode count must be a multiple of the group size");
  const std::size_t units = episodes.size() / group;
  const double c = cost.c();
  double stop_sum = 0.0, acc_sum = 0.0, loss_sum = 0.0;
  double stop_sq = 0.0, acc_sq = 0.0, loss_sq = 0.0;
  for (std::size_t u = 0; u < units; ++u) {
    double s = 0.0, a = 0.0, l = 0.0;
    for (std::size_t k = u * group; k < (u + 1) * group; ++k) {
      const auto& e = episodes[k];
      const double n = static_cast<double>(e.stop_time);
      const double correct = e.decision == e.truth ? 1.0 : 0.0;
      s += n;
      a += correct;
      l += (1.0 - correct) + c * n;
    }
    stop_sum += s;
    acc_sum += a;
    loss_sum += l;
    const double g = static_cast<double>(group);
    stop_sq += (s / g) * (s / g);
    acc_sq += (a / g) * (a / g);
    loss_sq += (l / g) * (l / g);
  }
  const double total = static_cast<double>(episodes.size());
  const double nu = static_cast<double>(units);
  auto se = [&](double mean, double sq) {
    if (units < 2) return 0.0;
    const double var = std::max(0.0, (sq - nu * mean * mean) / (nu - 1.0));
    return std::sqrt(var / nu);
  };
  Metrics m;
  m.reps = units;
  m.avg_stop = stop_sum / total;
  m.accuracy = acc_sum / total;
  m.avg_loss = loss_sum / total;
  m.avg_stop_se = se(m.avg_stop, stop_sq);
  m.accuracy_se = se(m.accuracy, acc_sq);
  m.avg_loss_se = se(m.avg_loss, loss_sq);
  return m;
}

enum class PolicyKind { ada, kl };

struct PriorMode {
  enum class Kind { truth, empirical_bayes, fixed };
  Kind kind = Kind::truth;
  double value = 0.5;

  static PriorMode truth() { return {}; }
  static PriorMode empirical_bayes() { return {Kind::empirical_bayes, 0.5}; }
  static PriorMode fixed(double v) { return {Kind::fixed, v}; }

  /// "true", "eb" or "fixed=V".
  static PriorMode parse(std::string_view text) {
    if (text == "true") return truth();
    if (text == "eb") return empirical_bayes();
    if (text.starts_with("fixed=")) {
      const std::string v(text.substr(6));
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(v, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != v.size() || v.empty()) throw ConfigError("bad fixed prior value '" + v + "'");
      if (!(x > 0.0 && x < 1.0)) throw ConfigError("fixed prior must lie in (0, 1); got " + v);
      return fixed(x);
    }
    throw ConfigError("prior mode must be true, eb or fixed=V; got '" + std::string(text) + "'");
  }

  std::string name() const {
    switch (kind) {
      case Kind::truth: return "true";
      case Kind::empirical_bayes: return "eb";
      case Kind::fixed: return "fixed=" + std::to_string(value);
    }
    return "?";
  }
};

inline PolicyKind parse_policy_kind(std::string_view text) {
  if (text == "ada") return PolicyKind::ada;
  if (text == "kl") return PolicyKind::kl;
  throw ConfigError("policy must be ada or kl; got '" + std::string(text) + "'");
}

inline std::string policy_name(PolicyKind k) { return k == PolicyKind::ada ? "ada" : "kl"; }

struct ExperimentConfig {
  std::size_t pool_size = 50;
  std::uint64_t pool_seed = 1;
  /// Explicit pool; overrides pool_size/pool_seed when set.
  std::optional<std::vector<WorkerParams>> pool;
  /// Independent replications (macro-replications when objects > 1).
  std::size_t reps = 1000;
  /// Objects per replication (K). Empirical-Bayes estimates carry over within a replication.
  std::size_t objects = 1;
  double c = 1.0 / 4096.0;
  double pi1_true = 0.5;
  std::size_t horizon = 10;
  PolicyKind policy = PolicyKind::ada;
  PriorMode prior;
  std::uint64_t seed = 1;
  GridConfig grid;
  /// Empirical Bayes only: false re-estimates worker accuracies too.
  bool workers_known = true;
  /// Empirical Bayes only: solved tables are shared between priors that agree after
  /// rounding to a multiple of 1/prior_steps.
  std::int64_t prior_steps = 10000;

  void validate() const {
    if (reps == 0) throw ConfigError("reps must be at least 1");
    if (objects == 0) throw ConfigError("objects per replication must be at least 1");
    if (horizon == 0) throw ConfigError("truncation length T must be at least 1");
    if (!(pi1_true >= 0.0 && pi1_true <= 1.0)) throw ConfigError("true pi1 must lie in [0, 1]");
    static_cast<void>(CostConfig(c));
    if (!pool && pool_size == 0) throw ConfigError("worker pool size must be at least 1");
    if (policy == PolicyKind::kl && prior.kind == PriorMode::Kind::empirical_bayes) {
      throw ConfigError("empirical-Bayes prior is only available for the ada policy");
    }
  }

  std::vector<WorkerParams> workers() const { return pool ? *pool : gen_worker_pool(pool_size, pool_seed); }

  /// Prior handed to the policy for the truth/fixed modes.
  Prior policy_prior() const {
    return Prior(prior.kind == PriorMode::Kind::fixed ? prior.value : pi1_true);
  }
};

namespace detail {

template <SequentialPolicy P>
std::vector<Outcome> run_fixed_policy(const P& policy, const ExperimentConfig& cfg,
                                      std::span<const WorkerParams> workers, QueryMode mode) {
  const auto cands = all_indices(workers.size());
  std::vector<Outcome> out;
  out.reserve(cfg.reps * cfg.objects);
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    for (std::size_t k = 0; k < cfg.objects; ++k) {
      const auto stream = object_stream(r, k);
      const Label theta = draw_truth(cfg.pi1_true, cfg.seed, stream);
      SimulatedObject obj(workers, cands, theta, cfg.seed, stream);
      const auto ep = run_episode(policy, obj, mode);
      out.push_back({ep.stop_time, ep.decision, theta});
    }
  }
  return out;
}

}  // namespace detail

/// Every episode of the experiment, replication-major. `cache` (optional) shares solved
/// tables across empirical-Bayes replications; it must match cfg's pool, cost, T and grid.
inline std::vector<Outcome> simulate_outcomes(const ExperimentConfig& cfg, PolicyCache* cache = nullptr) {
  cfg.validate();
  const auto workers = cfg.workers();
  const CostConfig cost(cfg.c);
  if (cfg.prior.kind != PriorMode::Kind::empirical_bayes) {
    if (cfg.policy == PolicyKind::kl) {
      return detail::run_fixed_policy(KLPolicy(workers, cfg.policy_prior(), cost, cfg.horizon), cfg, workers,
                                      QueryMode::repeat);
    }
    const auto table = solve(cfg.horizon, cost, cfg.policy_prior(), workers, cfg.grid);
    return detail::run_fixed_policy(AdaPolicy(table), cfg, workers, QueryMode::repeat);
  }

  EbConfig eb;
  eb.cost = cost;
  eb.horizon = cfg.horizon;
  eb.workers_known = cfg.workers_known;
  eb.grid = cfg.grid;
  std::optional<PolicyCache> local;
  if (cache == nullptr && cfg.workers_known) {
    local.emplace(workers, cost, cfg.horizon, cfg.grid, cfg.prior_steps);
    cache = &*local;
  }
  const auto cands = all_indices(workers.size());
  std::vector<Outcome> out;
  out.reserve(cfg.reps * cfg.objects);
  std::vector<Label> truths(cfg.objects);
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    auto source_for = [&](std::size_t k) {
      const auto stream = object_stream(r, k);
      truths[k] = draw_truth(cfg.pi1_true, cfg.seed, stream);
      return SimulatedObject(workers, cands, truths[k], cfg.seed, stream);
    };
    const auto res = empirical_bayes_run(cfg.objects, source_for, workers, eb, {}, cache);
    for (std::size_t k = 0; k < cfg.objects; ++k) {
      out.push_back({res.objects[k].stop_time, res.objects[k].decision, truths[k]});
    }
  }
  return out;
}

inline Metrics simulate(const ExperimentConfig& cfg, PolicyCache* cache = nullptr) {
  const auto outcomes = simulate_outcomes(cfg, cache);
  return summarize(outcomes, CostConfig(cfg.c), cfg.objects);
}

struct BoundaryPoint {
  std::size_t n;
  double upper;
  double lower;
};

struct SweepRow {
  std::size_t horizon;
  Metrics metrics;
  /// DP risk at the start (ada with a truth/fixed prior; NaN otherwise).
  double risk_at_start = std::numeric_limits<double>::quiet_NaN();
  /// Stopping boundaries per n (ada with a truth/fixed prior; empty otherwise).
  std::vector<BoundaryPoint> boundaries;
};

inline std::vector<BoundaryPoint> boundary_curve(const PolicyTable& table) {
  std::vector<BoundaryPoint> out;
  for (std::size_t n = 0; n <= table.horizon(); ++n) out.push_back({n, table.upper(n), table.lower(n)});
  return out;
}

inline std::vector<SweepRow> sweep_T(const ExperimentConfig& cfg, std::span<const std::size_t> horizons) {
  std::vector<SweepRow> rows;
  for (std::size_t T : horizons) {
    ExperimentConfig c = cfg;
    c.horizon = T;
    SweepRow row{T, simulate(c), std::numeric_limits<double>::quiet_NaN(), {}};
    if (c.policy == PolicyKind::ada && c.prior.kind != PriorMode::Kind::empirical_bayes) {
      const auto table = solve(T, CostConfig(c.c), c.policy_prior(), c.workers(), c.grid);
      row.risk_at_start = risk_at_start(table);
      row.boundaries = boundary_curve(table);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

struct PolicySpec {
  PolicyKind kind = PolicyKind::ada;
  PriorMode prior;
  std::string label() const { return policy_name(kind) + "/" + prior.name(); }
};

struct SweepCell {
  std::size_t horizon;
  double c;
};

struct ComparisonCell {
  PolicySpec spec;
  SweepCell cell;
  Metrics metrics;
  std::vector<Outcome> outcomes;
};

/// Every policy on every (T, c) cell with common random numbers.
inline std::vector<ComparisonCell> compare_policies(const ExperimentConfig& cfg, std::span<const PolicySpec> policies,
                                                    std::span<const SweepCell> cells) {
  std::vector<ComparisonCell> out;
  for (const auto& cell : cells) {
    for (const auto& spec : policies) {
      ExperimentConfig c = cfg;
      c.horizon = cell.horizon;
      c.c = cell.c;
      c.policy = spec.kind;
      c.prior = spec.prior;
      auto outcomes = simulate_outcomes(c);
      const auto metrics = summarize(outcomes, CostConfig(c.c), c.objects);
      out.push_back({spec, cell, metrics, std::move(outcomes)});
    }
  }
  return out;
}

}  // namespace adasprt::sim

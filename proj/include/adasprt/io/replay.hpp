#pragma once

// Dataset replay: shuffle the objects, label the first quarter fully to calibrate the
// estimates, then run the empirical-Bayes test on the rest, where each worker can label
// an object at most once and only workers present in the data can be asked.

#include <adasprt/estimation/empirical_bayes.hpp>
#include <adasprt/io/dataset.hpp>
#include <adasprt/sim/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

namespace adasprt::io {

/// Label source backed by the recorded labels of one object.
class DatasetObject {
 public:
  DatasetObject(const LabelMatrix& m, std::size_t object) : row_(m.object_labels(object)) {
    for (const auto& e : row_) workers_.push_back(e.worker);
  }
  std::span<const std::size_t> candidates() const { return workers_; }
  std::optional<Label> query(std::size_t worker) const {
    for (const auto& e : row_) {
      if (e.worker == worker) return e.label;
    }
    return std::nullopt;
  }

 private:
  std::span<const WorkerLabel> row_;
  std::vector<std::size_t> workers_;
};

struct ReplayConfig {
  CostConfig cost{1.0 / 64.0};
  std::size_t horizon = 10;
  EstimationConfig estimation;
  std::size_t orderings = 20;
  std::uint64_t seed = 1;
  GridConfig grid{.num_points = 1001};
  double calibration_fraction = 0.25;
  double pi_pseudo_count = 1.0;

  void validate() const {
    if (horizon == 0) throw ConfigError("truncation length T must be at least 1");
    if (orderings == 0) throw ConfigError("need at least one ordering");
    if (!(calibration_fraction >= 0.0 && calibration_fraction <= 1.0)) {
      throw ConfigError("calibration fraction must lie in [0, 1]");
    }
    estimation.validate();
  }
};

struct ReplayObject {
  std::size_t object;
  std::size_t stop_time;
  Label decision;
  std::optional<bool> correct;
  bool calibration;
  bool forced;
  bool no_labels;
};

struct OrderingReport {
  std::vector<ReplayObject> objects;  // in processing order
  std::size_t queried = 0;
  std::size_t calibration_size = 0;
  std::size_t calibration_queried = 0;
  std::size_t zero_label_objects = 0;
  std::optional<double> accuracy;
  std::optional<double> accuracy_non_calibration;
  Estimates estimates;
  std::vector<EstimateRecord> history;
};

struct RunReport {
  ReplayConfig config;
  std::vector<OrderingReport> orderings;
  std::size_t total_labels = 0;
  double queried_mean = 0.0;
  double queried_std = 0.0;
  double queried_fraction = 0.0;
  std::optional<double> accuracy_mean, accuracy_std;
  std::optional<double> accuracy_non_calibration_mean, accuracy_non_calibration_std;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

inline std::optional<double> accuracy_of(const std::vector<ReplayObject>& objs, bool skip_calibration) {
  std::size_t n = 0, right = 0;
  for (const auto& o : objs) {
    if (!o.correct || (skip_calibration && o.calibration)) continue;
    ++n;
    right += *o.correct ? 1 : 0;
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(right) / static_cast<double>(n);
}

}  // namespace detail

inline OrderingReport replay_ordering(const LabelDataset& ds, const ReplayConfig& cfg,
                                      const std::vector<std::size_t>& order) {
  const std::size_t K = order.size();
  EbConfig eb;
  eb.cost = cfg.cost;
  eb.horizon = cfg.horizon;
  eb.estimation = cfg.estimation;
  eb.workers_known = false;
  eb.mode = QueryMode::no_repeat;
  eb.grid = cfg.grid;
  eb.cache_tables = false;
  eb.per_object_pool = true;
  eb.pi_pseudo_count = cfg.pi_pseudo_count;
  eb.calibration_objects = static_cast<std::size_t>(std::floor(cfg.calibration_fraction * static_cast<double>(K)));
  const std::vector<WorkerParams> placeholder(ds.labels.num_workers(), WorkerParams(0.75, 0.75));
  auto source_for = [&](std::size_t k) { return DatasetObject(ds.labels, order[k]); };
  const auto res = empirical_bayes_run(K, source_for, placeholder, eb);

  OrderingReport rep;
  rep.calibration_size = eb.calibration_objects;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& o = res.objects[k];
    const std::size_t j = order[k];
    ReplayObject r{j, o.stop_time, o.decision, std::nullopt, o.calibration, o.forced,
                   ds.labels.object_labels(j).empty()};
    if (ds.truth[j]) r.correct = *ds.truth[j] == o.decision;
    rep.queried += o.stop_time;
    if (o.calibration) rep.calibration_queried += o.stop_time;
    rep.zero_label_objects += r.no_labels ? 1 : 0;
    rep.objects.push_back(r);
  }
  rep.accuracy = detail::accuracy_of(rep.objects, false);
  rep.accuracy_non_calibration = detail::accuracy_of(rep.objects, true);
  rep.estimates = res.final_estimates;
  rep.history = res.history;
  return rep;
}

/// Object order for ordering `index`: a seeded shuffle of 0..K-1.
inline std::vector<std::size_t> ordering(std::size_t K, std::uint64_t seed, std::size_t index) {
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(sim::splitmix64(seed ^ sim::splitmix64(index + 1)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

inline RunReport run_dataset(const LabelDataset& ds, const ReplayConfig& cfg) {
  cfg.validate();
  if (ds.labels.num_objects() == 0) throw DataError("dataset has no objects");
  RunReport report;
  report.config = cfg;
  report.total_labels = ds.labels.size();
  std::vector<double> queried, acc, acc_nc;
  for (std::size_t o = 0; o < cfg.orderings; ++o) {
    auto rep = replay_ordering(ds, cfg, ordering(ds.labels.num_objects(), cfg.seed, o));
    queried.push_back(static_cast<double>(rep.queried));
    if (rep.accuracy) acc.push_back(*rep.accuracy);
    if (rep.accuracy_non_calibration) acc_nc.push_back(*rep.accuracy_non_calibration);
    report.orderings.push_back(std::move(rep));
  }
  std::tie(report.queried_mean, report.queried_std) = detail::mean_std(queried);
  report.queried_fraction =
      report.total_labels > 0 ? report.queried_mean / static_cast<double>(report.total_labels) : 0.0;
  if (acc.size() == cfg.orderings) {
    const auto [m, s] = detail::mean_std(acc);
    report.accuracy_mean = m;
    report.accuracy_std = s;
  }
  if (acc_nc.size() == cfg.orderings) {
    const auto [m, s] = detail::mean_std(acc_nc);
    report.accuracy_non_calibration_mean = m;
    report.accuracy_non_calibration_std = s;
  }
  return report;
}

struct FullDataResult {
  Estimates estimates;
  std::vector<Label> decisions;
  std::optional<double> accuracy;
};

/// EM on every label, then the posterior-argmax decision for each object.
inline FullDataResult full_data_decisions(const LabelDataset& ds, const EstimationConfig& cfg) {
  FullDataResult out;
  out.estimates = em_fit(ds.labels, cfg, initial_estimates(ds.labels.num_workers(), cfg));
  const auto q = e_step(out.estimates, ds.labels);
  std::size_t n = 0, right = 0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const Label d = q[j] >= 0.5 ? 1 : 0;
    out.decisions.push_back(d);
    if (ds.truth[j]) {
      ++n;
      right += *ds.truth[j] == d ? 1 : 0;
    }
  }
  if (n > 0) out.accuracy = static_cast<double>(right) / static_cast<double>(n);
  return out;
}

/// Workers with tau00, tau11 drawn independently from U(lo, hi).
inline std::vector<WorkerParams> uniform_pool(std::size_t m, double lo, double hi, std::uint64_t seed) {
  if (m == 0) throw ConfigError("pool size must be at least 1");
  if (!(0.0 < lo && lo <= hi && hi < 1.0)) throw ConfigError("accuracy range must satisfy 0 < lo <= hi < 1");
  std::mt19937_64 rng(seed);
  std::vector<WorkerParams> pool;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = lo + (hi - lo) * sim::uniform01(rng);
    const double b = lo + (hi - lo) * sim::uniform01(rng);
    pool.emplace_back(a, b);
  }
  return pool;
}

/// Synthetic corpus: each object labeled by `per_object` distinct workers drawn uniformly
/// from the pool, truth ~ Bernoulli(pi1), labels from the two-coin model.
inline LabelDataset synthetic_dataset(std::span<const WorkerParams> pool, std::size_t objects,
                                      std::size_t per_object, double pi1, std::uint64_t seed) {
  if (per_object > pool.size()) throw ConfigError("cannot draw more labelers per object than workers");
  std::mt19937_64 rng(seed);
  LabelDataset ds;
  ds.labels = LabelMatrix(objects, pool.size());
  ds.truth.resize(objects);
  std::vector<std::size_t> ids(pool.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t i = 0; i < pool.size(); ++i) ds.worker_ids.push_back("w" + std::to_string(i));
  for (std::size_t j = 0; j < objects; ++j) {
    ds.object_ids.push_back("o" + std::to_string(j));
    const Label theta = sim::uniform01(rng) < pi1 ? 1 : 0;
    ds.truth[j] = theta;
    // partial Fisher-Yates: the first per_object entries are a uniform sample
    for (std::size_t a = 0; a < per_object; ++a) {
      const std::size_t b = a + static_cast<std::size_t>(sim::uniform01(rng) * static_cast<double>(pool.size() - a));
      std::swap(ids[a], ids[std::min(b, pool.size() - 1)]);
    }
    std::vector<std::size_t> chosen(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(per_object));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) {
      const double p1 = theta == 1 ? pool[i].tau11() : 1.0 - pool[i].tau00();
      ds.labels.add(j, i, sim::uniform01(rng) < p1 ? 1 : 0);
    }
  }
  return ds;
}

}  // namespace adasprt::io

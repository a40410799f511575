#pragma once

// CSV and JSON writers for metrics, estimates and dataset run reports. Column orders are
// fixed and listed in the README.

#include <adasprt/io/replay.hpp>
#include <adasprt/sim/harness.hpp>

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace adasprt::io {

struct MetricsRow {
  std::string policy;
  std::string prior;
  std::size_t horizon;
  double c;
  sim::Metrics metrics;
  std::optional<double> risk_at_start;
};

inline constexpr const char* kMetricsHeader =
    "policy,prior,T,c,reps,avg_stop,avg_stop_se,accuracy,accuracy_se,avg_loss,avg_loss_se,risk_at_start";

namespace detail {

inline std::ostream& full_precision(std::ostream& out) {
  out.precision(std::numeric_limits<double>::max_digits10);
  return out;
}

inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace detail

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  detail::full_precision(out) << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.policy << ',' << r.prior << ',' << r.horizon << ',' << r.c << ',' << m.reps << ',' << m.avg_stop << ','
        << m.avg_stop_se << ',' << m.accuracy << ',' << m.accuracy_se << ',' << m.avg_loss << ',' << m.avg_loss_se
        << ',';
    if (r.risk_at_start) out << *r.risk_at_start;
    out << '\n';
  }
}

inline nlohmann::json metrics_to_json(const MetricsRow& r) {
  const auto& m = r.metrics;
  return {{"policy", r.policy},         {"prior", r.prior},
          {"T", r.horizon},             {"c", r.c},
          {"reps", m.reps},             {"avg_stop", m.avg_stop},
          {"avg_stop_se", m.avg_stop_se}, {"accuracy", m.accuracy},
          {"accuracy_se", m.accuracy_se}, {"avg_loss", m.avg_loss},
          {"avg_loss_se", m.avg_loss_se}, {"risk_at_start", detail::opt(r.risk_at_start)}};
}

/// Long form: one row per parameter. key is pi1, tau00 or tau11; worker_id is empty for pi1.
inline void write_estimates_csv(std::ostream& out, const Estimates& est, const std::vector<std::string>& worker_ids) {
  detail::full_precision(out) << "key,worker_id,value\n";
  out << "pi1,," << est.pi1 << '\n';
  for (std::size_t i = 0; i < est.tau00.size(); ++i) {
    const std::string id = i < worker_ids.size() ? worker_ids[i] : std::to_string(i);
    out << "tau00," << id << ',' << est.tau00[i] << '\n';
    out << "tau11," << id << ',' << est.tau11[i] << '\n';
  }
}

inline void write_history_csv(std::ostream& out, const std::vector<EstimateRecord>& history) {
  detail::full_precision(out) << "k,pi1_hat,mean_abs_tau_error,em_iters,objective\n";
  for (const auto& h : history) {
    out << h.k << ',' << h.pi1_hat << ',';
    if (!std::isnan(h.mean_abs_tau_error)) out << h.mean_abs_tau_error;
    out << ',' << h.em_iters << ',' << h.objective << '\n';
  }
}

inline constexpr const char* kRunReportHeader =
    "ordering,position,object_id,N,D,truth,correct,calibration,forced,no_labels";

/// One row per object per ordering; truth and correct are empty without ground truth.
inline void write_run_report_csv(std::ostream& out, const RunReport& rep, const LabelDataset& ds) {
  out << kRunReportHeader << '\n';
  for (std::size_t o = 0; o < rep.orderings.size(); ++o) {
    const auto& objs = rep.orderings[o].objects;
    for (std::size_t p = 0; p < objs.size(); ++p) {
      const auto& r = objs[p];
      out << o << ',' << p << ',' << ds.object_ids[r.object] << ',' << r.stop_time << ',' << r.decision << ',';
      if (ds.truth[r.object]) out << *ds.truth[r.object];
      out << ',';
      if (r.correct) out << (*r.correct ? 1 : 0);
      out << ',' << r.calibration << ',' << r.forced << ',' << r.no_labels << '\n';
    }
  }
}

inline nlohmann::json run_report_to_json(const RunReport& rep, const LabelDataset& ds, bool per_object = false) {
  using nlohmann::json;
  const auto& c = rep.config;
  json j;
  j["config"] = {{"c", c.cost.c()},
                 {"T", c.horizon},
                 {"alpha", c.estimation.alpha},
                 {"beta", c.estimation.beta},
                 {"orderings", c.orderings},
                 {"seed", c.seed},
                 {"grid_points", c.grid.num_points},
                 {"calibration_fraction", c.calibration_fraction},
                 {"pi_pseudo_count", c.pi_pseudo_count}};
  j["objects"] = ds.labels.num_objects();
  j["workers"] = ds.labels.num_workers();
  j["total_labels"] = rep.total_labels;
  j["queried_mean"] = rep.queried_mean;
  j["queried_std"] = rep.queried_std;
  j["queried_fraction"] = rep.queried_fraction;
  j["accuracy_mean"] = detail::opt(rep.accuracy_mean);
  j["accuracy_std"] = detail::opt(rep.accuracy_std);
  j["accuracy_non_calibration_mean"] = detail::opt(rep.accuracy_non_calibration_mean);
  j["accuracy_non_calibration_std"] = detail::opt(rep.accuracy_non_calibration_std);
  json ords = json::array();
  for (const auto& o : rep.orderings) {
    json oj = {{"queried", o.queried},
               {"calibration_size", o.calibration_size},
               {"calibration_queried", o.calibration_queried},
               {"zero_label_objects", o.zero_label_objects},
               {"accuracy", detail::opt(o.accuracy)},
               {"accuracy_non_calibration", detail::opt(o.accuracy_non_calibration)},
               {"pi1_hat", o.estimates.pi1}};
    if (per_object) {
      json objs = json::array();
      for (const auto& r : o.objects) {
        objs.push_back({{"object_id", ds.object_ids[r.object]},
                        {"N", r.stop_time},
                        {"D", r.decision},
                        {"correct", r.correct ? json(*r.correct) : json(nullptr)},
                        {"calibration", r.calibration},
                        {"forced", r.forced},
                        {"no_labels", r.no_labels}});
      }
      oj["objects"] = std::move(objs);
    }
    ords.push_back(std::move(oj));
  }
  j["orderings"] = std::move(ords);
  return j;
}

}  // namespace adasprt::io

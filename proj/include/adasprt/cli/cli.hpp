#pragma once

// Command-line front end. Exit codes: 0 success, 2 configuration error (including bad
// flags), 3 data error.

#include <adasprt/core/errors.hpp>
#include <adasprt/dp/solver.hpp>
#include <adasprt/estimation/em.hpp>
#include <adasprt/io/dataset.hpp>
#include <adasprt/io/policy_json.hpp>
#include <adasprt/io/replay.hpp>
#include <adasprt/io/reports.hpp>
#include <adasprt/sim/harness.hpp>
#include <adasprt/sim/pool.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace adasprt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

namespace detail {

struct PoolOptions {
  std::string file;
  std::size_t size = 50;
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    app->add_option("--pool", file, "worker pool JSON ({\"workers\":[{\"tau00\":..,\"tau11\":..}]})");
    app->add_option("--pool-size", size, "size of the generated pool when --pool is absent");
    app->add_option("--pool-seed", seed, "seed of the generated pool");
  }
  std::vector<WorkerParams> load() const {
    if (!file.empty()) return io::load_pool(file);
    return sim::gen_worker_pool(size, seed);
  }
};

struct EstimationOptions {
  double alpha = 4.0;
  double beta = 2.0;
  std::size_t max_iter = 500;
  double tol = 1e-8;

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "Beta prior alpha on worker accuracies");
    app->add_option("--beta", beta, "Beta prior beta on worker accuracies");
    app->add_option("--max-iter", max_iter, "EM iteration cap");
    app->add_option("--tol", tol, "EM relative objective tolerance");
  }
  EstimationConfig config() const {
    EstimationConfig c;
    c.alpha = alpha;
    c.beta = beta;
    c.max_iter = max_iter;
    c.tol = tol;
    c.validate();
    return c;
  }
};

/// Writes to `path`, or to `fallback` when the path is empty or "-".
template <class F>
void emit(const std::string& path, std::ostream& fallback, F&& write) {
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write(out);
}

inline GridConfig grid_config(std::size_t points) {
  GridConfig g;
  g.num_points = points;
  return g;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Adaptive sequential probability ratio tests for crowdsourced binary labeling"};
  app.require_subcommand(1);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "solve the truncated dynamic program; write policy JSON and boundary CSV");
  std::size_t s_T = 10;
  double s_c = 1.0 / 4096.0, s_pi1 = 0.5;
  std::size_t s_grid = 2001;
  std::string s_out = "policy.json", s_bounds;
  detail::PoolOptions s_pool;
  solve_cmd->add_option("--T", s_T, "truncation length");
  solve_cmd->add_option("--c", s_c, "relative label cost in [0,1]");
  solve_cmd->add_option("--pi1", s_pi1, "prior P(theta = 1)");
  solve_cmd->add_option("--grid-points", s_grid, "odd number of grid points");
  solve_cmd->add_option("--out", s_out, "policy JSON path");
  solve_cmd->add_option("--boundaries", s_bounds, "boundary CSV path (default: boundaries.csv beside --out)");
  s_pool.add(solve_cmd);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo metrics for one policy");
  sim::ExperimentConfig m_cfg;
  std::string m_policy = "ada", m_prior = "true", m_out;
  std::size_t m_grid = 2001;
  bool m_json = false, m_estimate_workers = false;
  detail::PoolOptions m_pool;
  sim_cmd->add_option("--policy", m_policy, "ada or kl");
  sim_cmd->add_option("--prior", m_prior, "true, eb or fixed=V");
  sim_cmd->add_option("--T", m_cfg.horizon, "truncation length");
  sim_cmd->add_option("--c", m_cfg.c, "relative label cost in [0,1]");
  sim_cmd->add_option("--pi1", m_cfg.pi1_true, "true class prior P(theta = 1)");
  sim_cmd->add_option("--reps", m_cfg.reps, "replications");
  sim_cmd->add_option("--objects", m_cfg.objects, "objects per replication");
  sim_cmd->add_option("--seed", m_cfg.seed, "label seed");
  sim_cmd->add_option("--grid-points", m_grid, "odd number of grid points");
  sim_cmd->add_flag("--estimate-workers", m_estimate_workers, "empirical Bayes re-estimates worker accuracies too");
  sim_cmd->add_flag("--json", m_json, "JSON instead of CSV");
  sim_cmd->add_option("--out", m_out, "output path (default stdout)");
  m_pool.add(sim_cmd);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "metrics over several T and c values");
  sim::ExperimentConfig w_cfg;
  std::vector<std::size_t> w_T{5, 10, 15, 20};
  std::vector<double> w_c{1.0 / 4096.0};
  std::string w_policy = "ada", w_prior = "true", w_out, w_bounds;
  std::size_t w_grid = 2001;
  detail::PoolOptions w_pool;
  sweep_cmd->add_option("--T", w_T, "truncation lengths")->expected(1, -1);
  sweep_cmd->add_option("--c", w_c, "label costs")->expected(1, -1);
  sweep_cmd->add_option("--policy", w_policy, "ada or kl");
  sweep_cmd->add_option("--prior", w_prior, "true, eb or fixed=V");
  sweep_cmd->add_option("--pi1", w_cfg.pi1_true, "true class prior");
  sweep_cmd->add_option("--reps", w_cfg.reps, "replications per cell");
  sweep_cmd->add_option("--objects", w_cfg.objects, "objects per replication");
  sweep_cmd->add_option("--seed", w_cfg.seed, "label seed");
  sweep_cmd->add_option("--grid-points", w_grid, "odd number of grid points");
  sweep_cmd->add_option("--out", w_out, "metrics CSV path (default stdout)");
  sweep_cmd->add_option("--boundaries", w_bounds, "long-form boundary CSV (T,c,n,A,B)");
  w_pool.add(sweep_cmd);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "MAP-EM on a label CSV; write estimates CSV");
  std::string f_labels, f_truth, f_out;
  detail::EstimationOptions f_est;
  fit_cmd->add_option("--labels", f_labels, "CSV object_id,worker_id,label")->required();
  fit_cmd->add_option("--truth", f_truth, "CSV object_id,truth");
  fit_cmd->add_option("--out", f_out, "estimates CSV path (default stdout)");
  f_est.add(fit_cmd);

  // run-dataset
  auto* run_cmd = app.add_subcommand("run-dataset", "replay a labeled corpus with calibration and empirical Bayes");
  io::ReplayConfig r_cfg;
  double r_c = 1.0 / 64.0;
  std::size_t r_grid = 1001;
  std::string r_labels, r_truth, r_out, r_csv;
  bool r_objects = false;
  detail::EstimationOptions r_est;
  run_cmd->add_option("--labels", r_labels, "CSV object_id,worker_id,label")->required();
  run_cmd->add_option("--truth", r_truth, "CSV object_id,truth");
  run_cmd->add_option("--c", r_c, "relative label cost in [0,1]");
  run_cmd->add_option("--T", r_cfg.horizon, "truncation length");
  run_cmd->add_option("--orderings", r_cfg.orderings, "random object orderings");
  run_cmd->add_option("--seed", r_cfg.seed, "ordering seed");
  run_cmd->add_option("--grid-points", r_grid, "odd number of grid points");
  run_cmd->add_option("--calibration", r_cfg.calibration_fraction, "fraction of objects fully labeled first");
  run_cmd->add_option("--out", r_out, "report JSON path (default stdout)");
  run_cmd->add_option("--csv", r_csv, "per-object CSV path");
  run_cmd->add_flag("--per-object", r_objects, "include per-object rows in the JSON report");
  r_est.add(run_cmd);

  // pool
  auto* pool_cmd = app.add_subcommand("pool", "generate a seeded worker pool");
  std::size_t p_size = 50;
  std::uint64_t p_seed = 1;
  std::string p_out;
  pool_cmd->add_option("--size", p_size, "number of workers");
  pool_cmd->add_option("--seed", p_seed, "pool seed");
  pool_cmd->add_option("--out", p_out, "pool JSON path (default stdout)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a labeled corpus from random two-coin workers");
  std::size_t y_objects = 800, y_workers = 164, y_per = 10;
  double y_pi1 = 0.5, y_lo = 0.55, y_hi = 0.95;
  std::uint64_t y_seed = 1;
  std::string y_labels = "labels.csv", y_truth = "truth.csv", y_pool;
  synth_cmd->add_option("--objects", y_objects, "number of objects");
  synth_cmd->add_option("--workers", y_workers, "number of workers");
  synth_cmd->add_option("--per-object", y_per, "distinct labelers per object");
  synth_cmd->add_option("--pi1", y_pi1, "class prior");
  synth_cmd->add_option("--tau-min", y_lo, "lower end of the uniform accuracy range");
  synth_cmd->add_option("--tau-max", y_hi, "upper end of the uniform accuracy range");
  synth_cmd->add_option("--seed", y_seed, "seed");
  synth_cmd->add_option("--labels", y_labels, "label CSV path");
  synth_cmd->add_option("--truth", y_truth, "truth CSV path");
  synth_cmd->add_option("--pool-out", y_pool, "write the generating accuracies as pool JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*solve_cmd) {
      const CostConfig cost(s_c);
      const auto table = solve(s_T, cost, Prior(s_pi1), s_pool.load(), detail::grid_config(s_grid));
      io::save_policy(table, s_out);
      const auto bounds = s_bounds.empty()
                              ? (std::filesystem::path(s_out).parent_path() / "boundaries.csv").string()
                              : s_bounds;
      io::save_boundaries_csv(table, bounds);
      out.precision(17);
      out << "risk_at_start " << risk_at_start(table) << '\n';
      out << "policy " << s_out << "\nboundaries " << bounds << '\n';
    } else if (*sim_cmd) {
      static_cast<void>(CostConfig(m_cfg.c));
      m_cfg.policy = sim::parse_policy_kind(m_policy);
      m_cfg.prior = sim::PriorMode::parse(m_prior);
      m_cfg.grid = detail::grid_config(m_grid);
      m_cfg.workers_known = !m_estimate_workers;
      m_cfg.pool = m_pool.load();
      m_cfg.validate();
      io::MetricsRow row{m_policy, m_cfg.prior.name(), m_cfg.horizon, m_cfg.c, sim::simulate(m_cfg), std::nullopt};
      if (m_cfg.policy == sim::PolicyKind::ada && m_cfg.prior.kind != sim::PriorMode::Kind::empirical_bayes) {
        row.risk_at_start =
            risk_at_start(solve(m_cfg.horizon, CostConfig(m_cfg.c), m_cfg.policy_prior(), *m_cfg.pool, m_cfg.grid));
      }
      detail::emit(m_out, out, [&](std::ostream& o) {
        if (m_json) {
          o << io::metrics_to_json(row).dump(2) << '\n';
        } else {
          io::write_metrics_csv(o, {row});
        }
      });
    } else if (*sweep_cmd) {
      for (double c : w_c) static_cast<void>(CostConfig(c));
      w_cfg.policy = sim::parse_policy_kind(w_policy);
      w_cfg.prior = sim::PriorMode::parse(w_prior);
      w_cfg.grid = detail::grid_config(w_grid);
      w_cfg.pool = w_pool.load();
      w_cfg.validate();
      std::vector<io::MetricsRow> rows;
      std::ostringstream bounds;
      bounds.precision(17);
      bounds << "T,c,n,A,B\n";
      for (double c : w_c) {
        sim::ExperimentConfig cfg = w_cfg;
        cfg.c = c;
        for (const auto& r : sim::sweep_T(cfg, w_T)) {
          io::MetricsRow row{w_policy, cfg.prior.name(), r.horizon, c, r.metrics, std::nullopt};
          if (!std::isnan(r.risk_at_start)) row.risk_at_start = r.risk_at_start;
          rows.push_back(row);
          for (const auto& b : r.boundaries) bounds << r.horizon << ',' << c << ',' << b.n << ',' << b.upper << ',' << b.lower << '\n';
        }
      }
      detail::emit(w_out, out, [&](std::ostream& o) { io::write_metrics_csv(o, rows); });
      if (!w_bounds.empty()) detail::emit(w_bounds, out, [&](std::ostream& o) { o << bounds.str(); });
    } else if (*fit_cmd) {
      const auto cfg = f_est.config();
      const auto ds = io::load_dataset(f_labels, f_truth.empty() ? std::nullopt : std::optional(f_truth));
      const auto res = io::full_data_decisions(ds, cfg);
      detail::emit(f_out, out, [&](std::ostream& o) { io::write_estimates_csv(o, res.estimates, ds.worker_ids); });
      err << "em iterations " << res.estimates.iters << (res.estimates.converged ? "" : " (not converged)")
          << ", objective " << res.estimates.objective << '\n';
      if (res.accuracy) err << "posterior-argmax accuracy " << *res.accuracy << '\n';
    } else if (*run_cmd) {
      r_cfg.cost = CostConfig(r_c);
      r_cfg.grid = detail::grid_config(r_grid);
      r_cfg.estimation = r_est.config();
      const auto ds = io::load_dataset(r_labels, r_truth.empty() ? std::nullopt : std::optional(r_truth));
      const auto rep = io::run_dataset(ds, r_cfg);
      auto j = io::run_report_to_json(rep, ds, r_objects);
      if (ds.has_truth()) {
        const auto full = io::full_data_decisions(ds, r_cfg.estimation);
        j["full_data_accuracy"] = io::detail::opt(full.accuracy);
      }
      detail::emit(r_out, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
      if (!r_csv.empty()) detail::emit(r_csv, out, [&](std::ostream& o) { io::write_run_report_csv(o, rep, ds); });
    } else if (*synth_cmd) {
      if (!(y_pi1 >= 0.0 && y_pi1 <= 1.0)) throw ConfigError("pi1 must lie in [0,1]");
      const auto pool = io::uniform_pool(y_workers, y_lo, y_hi, y_seed);
      const auto ds = io::synthetic_dataset(pool, y_objects, y_per, y_pi1, y_seed + 1);
      io::save_dataset(ds, y_labels, y_truth);
      if (!y_pool.empty()) io::save_pool(pool, y_pool);
      out << ds.labels.size() << " labels on " << y_objects << " objects\n";
    } else if (*pool_cmd) {
      if (p_size == 0) throw ConfigError("pool size must be at least 1");
      const auto pool = sim::gen_worker_pool(p_size, p_seed);
      detail::emit(p_out, out, [&](std::ostream& o) { o << io::pool_to_json(pool).dump(2) << '\n'; });
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace adasprt::cli

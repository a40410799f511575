#include <adasprt/sim/harness.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

namespace adasprt::sim {
namespace {

TEST(WorkerPool, LiesOnTheQuarterCircle) {
  const auto pool = gen_worker_pool(200, 42);
  ASSERT_EQ(pool.size(), 200u);
  for (const auto& w : pool) {
    EXPECT_NEAR(w.tau00() * w.tau00() + w.tau11() * w.tau11(), 1.0, 1e-12);
  }
}

TEST(WorkerPool, NoWorkerIsDominated) {
  const auto pool = gen_worker_pool(100, 3);
  for (const auto& a : pool) {
    for (const auto& b : pool) {
      EXPECT_FALSE(a.tau00() < b.tau00() && a.tau11() < b.tau11());
    }
  }
}

TEST(WorkerPool, SeedDeterminesPool) {
  EXPECT_EQ(gen_worker_pool(20, 9), gen_worker_pool(20, 9));
  EXPECT_NE(gen_worker_pool(20, 9), gen_worker_pool(20, 10));
  EXPECT_THROW(gen_worker_pool(0, 1), ConfigError);
}

TEST(CounterRng, UniformAndDeterministic) {
  double sum = 0.0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const double u = counter_uniform(5, i, 1, 0);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
  EXPECT_EQ(counter_uniform(1, 2, 3, 4), counter_uniform(1, 2, 3, 4));
  EXPECT_NE(counter_uniform(1, 2, 3, 4), counter_uniform(1, 2, 3, 5));
}

TEST(SimulatedObject, LabelFrequenciesFollowTheWorker) {
  const std::vector<WorkerParams> pool{WorkerParams(0.9, 0.7)};
  const auto cands = all_indices(1);
  for (Label theta : {0, 1}) {
    SimulatedObject obj(pool, cands, theta, 11, 0);
    int ones = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) ones += *obj.query(0);
    const double expected = theta == 1 ? 0.7 : 0.1;
    EXPECT_NEAR(ones / double(n), expected, 4.0 * std::sqrt(expected * (1 - expected) / n));
  }
}

TEST(AveragedLoss, Examples) {
  const std::vector<Outcome> two{{0, 1, 0}, {5, 1, 1}};
  EXPECT_DOUBLE_EQ(averaged_loss(two, CostConfig(0.1)), 0.75);
  const std::vector<Outcome> all_right{{4, 1, 1}, {4, 0, 0}, {4, 1, 1}};
  EXPECT_DOUBLE_EQ(averaged_loss(all_right, CostConfig(0.01)), 0.04);
  EXPECT_THROW(averaged_loss(std::vector<Outcome>{}, CostConfig(0.1)), ConfigError);
}

TEST(Summarize, IdentityAndGroupedErrors) {
  std::vector<Outcome> eps;
  for (int i = 0; i < 1000; ++i) eps.push_back({static_cast<std::size_t>(i % 7), i % 3 == 0 ? 0 : 1, 1});
  const CostConfig cost(0.013);
  const auto m = summarize(eps, cost);
  EXPECT_NEAR(m.avg_loss, (1.0 - m.accuracy) + cost.c() * m.avg_stop, 1e-12);
  EXPECT_NEAR(m.avg_loss, averaged_loss(eps, cost), 1e-12);
  const auto g = summarize(eps, cost, 10);
  EXPECT_EQ(g.reps, 100u);
  EXPECT_DOUBLE_EQ(g.accuracy, m.accuracy);
  EXPECT_THROW(summarize(eps, cost, 7), ConfigError);
}

ExperimentConfig single_worker(std::size_t T, double c, std::size_t reps) {
  ExperimentConfig cfg;
  cfg.pool = std::vector<WorkerParams>{WorkerParams(0.8, 0.8)};
  cfg.horizon = T;
  cfg.c = c;
  cfg.reps = reps;
  cfg.pi1_true = 0.5;
  cfg.seed = 2024;
  return cfg;
}

TEST(Simulate, ExpensiveLabelsStopImmediately) {
  const auto m = simulate(single_worker(5, 0.5, 20000));
  EXPECT_EQ(m.avg_stop, 0.0);
  EXPECT_NEAR(m.accuracy, 0.5, 3.0 * m.accuracy_se);
  EXPECT_NEAR(m.avg_loss, 0.5, 3.0 * m.avg_loss_se);
}

TEST(Simulate, SingleWorkerSingleLabel) {
  const auto m = simulate(single_worker(1, 0.01, 100000));
  EXPECT_EQ(m.avg_stop, 1.0);
  EXPECT_NEAR(m.accuracy, 0.8, 3.0 * m.accuracy_se);
  EXPECT_NEAR(m.avg_loss, 0.21, 3.0 * m.avg_loss_se);
  EXPECT_NEAR(m.avg_loss, (1.0 - m.accuracy) + 0.01 * m.avg_stop, 1e-12);
}

TEST(Simulate, SeededRunsAreBitIdentical) {
  ExperimentConfig cfg;
  cfg.pool_size = 10;
  cfg.reps = 3000;
  cfg.horizon = 8;
  const auto a = simulate(cfg);
  const auto b = simulate(cfg);
  EXPECT_EQ(a.avg_loss, b.avg_loss);
  EXPECT_EQ(a.avg_stop, b.avg_stop);
  EXPECT_EQ(a.accuracy_se, b.accuracy_se);
  cfg.seed = 2;
  EXPECT_NE(simulate(cfg).avg_stop, a.avg_stop);
}

/// P(decision != theta | theta) of the solved policy by enumerating every label sequence.
double exact_error(const PolicyTable& table, Label theta) {
  const auto workers = table.workers();
  const std::vector<std::size_t> all = all_indices(workers.size());
  std::function<double(const SequentialState&)> visit = [&](const SequentialState& s) -> double {
    const Action a = next_action(table, s, all);
    if (const auto* stop = std::get_if<Stop>(&a)) return stop->decision != theta ? 1.0 : 0.0;
    const std::size_t j = std::get<Continue>(a).worker;
    const double p1 = theta == 1 ? workers[j].tau11() : 1.0 - workers[j].tau00();
    return p1 * visit(s.step(workers[j], j, 1)) + (1.0 - p1) * visit(s.step(workers[j], j, 0));
  };
  return visit(SequentialState{});
}

TEST(Simulate, ConditionalErrorMatchesPolicyEvaluation) {
  ExperimentConfig cfg;
  cfg.pool = std::vector<WorkerParams>{WorkerParams(0.75, 0.9), WorkerParams(0.92, 0.6), WorkerParams(0.8, 0.8)};
  cfg.horizon = 6;
  cfg.c = 0.01;
  cfg.prior = PriorMode::fixed(0.5);
  cfg.reps = 100000;
  const auto table = solve(cfg.horizon, CostConfig(cfg.c), Prior(0.5), *cfg.pool);
  for (double truth : {0.0, 1.0}) {
    cfg.pi1_true = truth;
    const auto m = simulate(cfg);
    const double predicted = exact_error(table, truth == 1.0 ? 1 : 0);
    EXPECT_NEAR(1.0 - m.accuracy, predicted, 3.0 * std::sqrt(predicted * (1 - predicted) / cfg.reps));
  }
}

TEST(ComparePolicies, IdenticalPoliciesGiveIdenticalMetrics) {
  ExperimentConfig cfg;
  cfg.pool_size = 8;
  cfg.reps = 2000;
  const std::vector<PolicySpec> specs{{PolicyKind::ada, PriorMode::truth()}, {PolicyKind::ada, PriorMode::truth()},
                                      {PolicyKind::kl, PriorMode::truth()}};
  const std::vector<SweepCell> cells{{5, 1.0 / 512}, {10, 1.0 / 512}};
  const auto res = compare_policies(cfg, specs, cells);
  ASSERT_EQ(res.size(), 6u);
  for (std::size_t i = 0; i < res.size(); i += 3) {
    EXPECT_EQ(res[i].metrics.avg_loss, res[i + 1].metrics.avg_loss);
    EXPECT_EQ(res[i].metrics.accuracy, res[i + 1].metrics.accuracy);
    // same truths across policies
    for (std::size_t r = 0; r < cfg.reps; ++r) EXPECT_EQ(res[i].outcomes[r].truth, res[i + 2].outcomes[r].truth);
  }
}

TEST(SweepT, TrendsAndBoundaryExport) {
  ExperimentConfig cfg;
  cfg.pool_size = 20;
  cfg.pool_seed = 4;
  cfg.reps = 4000;
  cfg.c = 1.0 / 4096;
  const std::vector<std::size_t> Ts{3, 6, 12};
  const auto rows = sweep_T(cfg, Ts);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].boundaries.size(), Ts[i] + 1);
    EXPECT_NEAR(rows[i].metrics.avg_loss, rows[i].risk_at_start, 4.0 * rows[i].metrics.avg_loss_se + 1e-9);
    if (i == 0) continue;
    const auto& a = rows[i - 1].metrics;
    const auto& b = rows[i].metrics;
    EXPECT_GE(b.avg_stop + 3.0 * std::hypot(a.avg_stop_se, b.avg_stop_se), a.avg_stop);
    EXPECT_GE(b.accuracy + 3.0 * std::hypot(a.accuracy_se, b.accuracy_se), a.accuracy);
    EXPECT_LE(b.avg_loss - 3.0 * std::hypot(a.avg_loss_se, b.avg_loss_se), a.avg_loss);
  }
}

TEST(Simulate, EmpiricalBayesReplications) {
  ExperimentConfig cfg;
  cfg.pool_size = 10;
  cfg.reps = 5;
  cfg.objects = 40;
  cfg.pi1_true = 0.8;
  cfg.c = 1.0 / 256;
  cfg.prior = PriorMode::empirical_bayes();
  const auto m = simulate(cfg);
  EXPECT_EQ(m.reps, 5u);
  EXPECT_GT(m.accuracy, 0.6);
  cfg.policy = PolicyKind::kl;
  EXPECT_THROW(simulate(cfg), ConfigError);
}

TEST(PriorModeParse, AcceptsAndRejects) {
  EXPECT_EQ(PriorMode::parse("true").kind, PriorMode::Kind::truth);
  EXPECT_EQ(PriorMode::parse("eb").kind, PriorMode::Kind::empirical_bayes);
  EXPECT_DOUBLE_EQ(PriorMode::parse("fixed=0.3").value, 0.3);
  EXPECT_THROW(PriorMode::parse("fixed=1.5"), ConfigError);
  EXPECT_THROW(PriorMode::parse("fixed=abc"), ConfigError);
  EXPECT_THROW(PriorMode::parse("guess"), ConfigError);
  EXPECT_THROW(parse_policy_kind("kg"), ConfigError);
}

}  // namespace
}  // namespace adasprt::sim

#include <adasprt/dp/solver.hpp>

#include <gtest/gtest.h>

#include <oracles.hpp>

#include <cmath>
#include <random>
#include <vector>

namespace adasprt {
namespace {

const WorkerParams kSym80(0.8, 0.8);

std::vector<oracle::Worker> to_oracle(const std::vector<WorkerParams>& ws) {
  std::vector<oracle::Worker> out;
  for (const auto& w : ws) out.push_back({w.tau00(), w.tau11()});
  return out;
}

TEST(StoppingRisk, Examples) {
  EXPECT_NEAR(stopping_risk(0.0, 3, Prior(0.5), CostConfig(1.0 / 4096)), 0.5 + 3.0 / 4096, 1e-15);
  EXPECT_EQ(stopping_risk(0.0, 0, Prior(0.5), CostConfig(0.2)), 0.5);
  EXPECT_EQ(stopping_risk(1e5, 0, Prior(0.5), CostConfig(0.2)), 0.0);
}

TEST(ExpectedNextRisk, HandComputedOneStep) {
  const Prior prior(0.5);
  const CostConfig cost(0.01);
  auto terminal = [&](double y) { return stopping_risk(y, 1, prior, cost); };
  EXPECT_NEAR(expected_next_risk(terminal, 0.0, prior, kSym80), 0.21, 1e-12);
}

TEST(ExpectedNextRisk, UninformativeWorkerReturnsNextRiskAtSameEvidence) {
  const Prior prior(0.4);
  auto g = [](double y) { return 0.3 + 0.1 * y * y; };
  EXPECT_EQ(expected_next_risk(g, 1.25, prior, WorkerParams(0.5, 0.5)), g(1.25));
}

TEST(ExpectedNextRisk, FarTailMatchesStoppingRisk) {
  const auto policy = solve(4, CostConfig(0.01), Prior(0.5), {kSym80, WorkerParams(0.7, 0.9)});
  const double l = 60.0;
  const double next = expected_next_risk([&](double y) { return policy.value(y, 2); }, l, Prior(0.5), kSym80);
  EXPECT_NEAR(next, stopping_risk(l, 2, Prior(0.5), CostConfig(0.01)), 1e-9);
}

TEST(Solve, SingleStepHorizon) {
  const auto policy = solve(1, CostConfig(0.01), Prior(0.5), {kSym80});
  EXPECT_NEAR(risk_at_start(policy), 0.21, 1e-12);
  EXPECT_TRUE(policy.continuation(0).contains(policy.grid().center_index()));
  const auto node = policy.lattice_node(0.0, 0);
  ASSERT_TRUE(node);
  EXPECT_TRUE(policy.lattice()[0].proceed[*node]);
}

TEST(Solve, TwoStepHorizonStopsAfterOneLabel) {
  const auto policy = solve(2, CostConfig(0.01), Prior(0.5), {kSym80});
  EXPECT_NEAR(risk_at_start(policy), 0.21, 1e-12);
  const double up = log_lr_increment(kSym80, 1);
  const double down = log_lr_increment(kSym80, 0);
  // After one informative label the policy stops.
  for (double l : {up, down}) {
    const auto node = policy.lattice_node(l, 1);
    ASSERT_TRUE(node);
    EXPECT_FALSE(policy.lattice()[1].proceed[*node]);
  }
  // Grid view of C(1) excludes +-log 4.
  const auto& c1 = policy.continuation(1);
  EXPECT_FALSE(c1.contains(policy.grid().nearest(up)));
  EXPECT_FALSE(c1.contains(policy.grid().nearest(down)));
  // Taking the second label would cost 0.22 in expectation.
  const oracle::HistoryTreeSolver tree({{0.8, 0.8}}, 0.5, 0.01, 2);
  EXPECT_NEAR(tree.risk(), 0.21, 1e-12);
}

TEST(Solve, ExpensiveLabelsStopImmediately) {
  for (double c : {0.5, 0.7, 1.0}) {
    for (std::size_t horizon : {1u, 3u, 8u}) {
      const auto policy = solve(horizon, CostConfig(c), Prior(0.5), {kSym80, WorkerParams(0.95, 0.9)});
      EXPECT_NEAR(risk_at_start(policy), 0.5, 1e-15);
      const auto node = policy.lattice_node(0.0, 0);
      ASSERT_TRUE(node);
      EXPECT_FALSE(policy.lattice()[0].proceed[*node]);
    }
  }
}

TEST(Solve, RejectsBadInput) {
  EXPECT_THROW(solve(0, CostConfig(0.1), Prior(0.5), {kSym80}), ConfigError);
  EXPECT_THROW(solve(3, CostConfig(0.1), Prior(0.5), {}), ConfigError);
  GridConfig g;
  g.l_min = 1.0;
  g.l_max = 5.0;
  EXPECT_THROW(solve(3, CostConfig(0.1), Prior(0.5), {kSym80}, g), ConfigError);
  GridConfig even;
  even.num_points = 100;
  EXPECT_THROW(solve(3, CostConfig(0.1), Prior(0.5), {kSym80}, even), ConfigError);
  EXPECT_THROW(solve(3, CostConfig(0.1), Prior(1.0), {kSym80}), ConfigError);
}

TEST(Solve, UserGridIsShiftedOntoThreshold) {
  GridConfig g;
  g.num_points = 101;
  g.l_min = -6.03;
  g.l_max = 5.97;
  const auto policy = solve(3, CostConfig(0.05), Prior(0.3), {kSym80}, g);
  EXPECT_EQ(policy.grid().at(policy.grid().center_index()), Prior(0.3).decision_threshold());
  EXPECT_EQ(policy.upper(3), Prior(0.3).decision_threshold());
  EXPECT_EQ(policy.lower(3), Prior(0.3).decision_threshold());
}

TEST(Solve, DuplicateWorkersCollapseToLowestIndex) {
  const std::vector<WorkerParams> pool{WorkerParams(0.6, 0.6), kSym80, kSym80};
  const auto policy = solve(3, CostConfig(0.01), Prior(0.5), pool);
  for (std::size_t n = 1; n <= 3; ++n) {
    for (auto j : policy.select(n)) EXPECT_NE(j, 2);
  }
  const auto single = solve(3, CostConfig(0.01), Prior(0.5), {WorkerParams(0.6, 0.6), kSym80});
  EXPECT_EQ(risk_at_start(policy), risk_at_start(single));
}

TEST(BoundariesFromContinuation, Examples) {
  const Grid grid(0.0, 0.5, 9, 4);
  std::vector<std::uint8_t> all(9, 1);
  auto r = boundaries_from_continuation(grid, all);
  EXPECT_EQ(r.upper, grid.l_max());
  EXPECT_EQ(r.lower, grid.l_min());

  std::vector<std::uint8_t> none(9, 0);
  r = boundaries_from_continuation(grid, none);
  EXPECT_TRUE(r.interval.empty());
  EXPECT_EQ(r.upper, 0.0);
  EXPECT_EQ(r.lower, 0.0);

  std::vector<std::uint8_t> holes{0, 1, 1, 0, 1, 0, 0, 0, 0};
  EXPECT_THROW(boundaries_from_continuation(grid, holes), StructureError);
}

TEST(RiskAtStart, LongerHorizonNeverWorse) {
  const std::vector<WorkerParams> pool{kSym80, WorkerParams(0.9, 0.65)};
  const auto one = solve(1, CostConfig(0.01), Prior(0.5), pool);
  const auto two = solve(2, CostConfig(0.01), Prior(0.5), pool);
  EXPECT_LE(risk_at_start(two), risk_at_start(one) + 1e-9);
}

// Randomized checks: exhaustive oracle equivalence and the structural properties of the
// boundaries.
class SolverProperties : public ::testing::Test {
 protected:
  std::mt19937_64 rng{99};
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  std::vector<WorkerParams> random_pool(std::size_t m) {
    std::vector<WorkerParams> pool;
    for (std::size_t i = 0; i < m; ++i) pool.emplace_back(uniform(0.5, 0.97), uniform(0.5, 0.97));
    return pool;
  }
};

TEST_F(SolverProperties, MatchesHistoryTreeOracle) {
  for (int k = 0; k < 60; ++k) {
    const auto m = static_cast<std::size_t>(1 + k % 3);
    const auto horizon = static_cast<std::size_t>(1 + (k / 3) % 4);
    const double c = std::array{0.01, 0.05, 0.2}[k % 3];
    const double pi1 = std::array{0.3, 0.5, 0.8}[(k / 2) % 3];
    const auto pool = random_pool(m);
    const auto policy = solve(horizon, CostConfig(c), Prior(pi1), pool);
    const oracle::HistoryTreeSolver tree(to_oracle(pool), pi1, c, horizon);
    EXPECT_NEAR(risk_at_start(policy), tree.risk(), 1e-6) << "instance " << k;
  }
}

TEST_F(SolverProperties, WeightedRiskMatchesOracle) {
  for (int k = 0; k < 20; ++k) {
    const auto pool = random_pool(2);
    const double w0 = uniform(0.5, 3.0);
    const double w1 = uniform(0.5, 3.0);
    const Prior prior(uniform(0.2, 0.8), w0, w1);
    const auto policy = solve(3, CostConfig(0.03), prior, pool);
    const oracle::HistoryTreeSolver tree(to_oracle(pool), prior.pi1(), 0.03, 3, w0, w1);
    EXPECT_NEAR(risk_at_start(policy), tree.risk(), 1e-6);
    EXPECT_EQ(policy.upper(3), prior.decision_threshold());
  }
}

TEST_F(SolverProperties, BoundaryStructure) {
  for (int k = 0; k < 12; ++k) {
    const auto pool = random_pool(1 + k % 5);
    const double c = std::pow(2.0, -uniform(3.0, 12.0));
    const Prior prior(uniform(0.2, 0.8));
    const auto horizon = static_cast<std::size_t>(2 + k % 12);
    const auto policy = solve(horizon, CostConfig(c), prior, pool);
    const auto& grid = policy.grid();
    const double h = grid.spacing();
    const double center = prior.decision_threshold();
    EXPECT_EQ(policy.upper(horizon), center);
    EXPECT_EQ(policy.lower(horizon), center);
    for (std::size_t n = 1; n < horizon; ++n) {
      EXPECT_LE(policy.upper(n + 1), policy.upper(n) + 1e-12);
      EXPECT_GE(policy.lower(n + 1), policy.lower(n) - 1e-12);
    }
    EXPECT_LE(policy.upper(1), center + std::log((1 - c) / c) + h);
    EXPECT_GE(policy.lower(1), center + std::log(c / (1 - c)) - h);
    for (std::size_t n = 0; n < horizon; ++n) {
      const auto& cn = policy.continuation(n);
      if (cn.empty()) continue;
      EXPECT_TRUE(cn.contains(grid.center_index()));
      const auto& next = policy.continuation(n + 1);
      if (next.empty()) continue;
      EXPECT_LE(*cn.first, *next.first);
      EXPECT_GE(*cn.last, *next.last);
    }
  }
}

TEST(SolverGrid, LatticeAndGridAgreeAtStart) {
  const std::vector<WorkerParams> pool{kSym80, WorkerParams(0.9, 0.65), WorkerParams(0.62, 0.93)};
  const auto policy = solve(6, CostConfig(0.004), Prior(0.45), pool);
  const double grid_value = policy.grid().interpolate(policy.risk(0), 0.0);
  EXPECT_NEAR(grid_value, risk_at_start(policy), 2e-4);
}

TEST(SolverGrid, RiskIsContinuousInEvidence) {
  const std::vector<WorkerParams> pool{kSym80, WorkerParams(0.9, 0.65)};
  auto max_jump = [&](std::size_t points) {
    GridConfig g;
    g.num_points = points;
    const auto policy = solve(5, CostConfig(0.01), Prior(0.5), pool, g);
    double m = 0.0;
    for (std::size_t n = 0; n <= 5; ++n) {
      const auto r = policy.risk(n);
      for (std::size_t i = 1; i < r.size(); ++i) m = std::max(m, std::abs(r[i] - r[i - 1]));
    }
    return m;
  };
  const double coarse = max_jump(1001);
  const double fine = max_jump(2001);
  EXPECT_LT(fine, 0.6 * coarse);
  EXPECT_GT(fine, 0.4 * coarse);
}

}  // namespace
}  // namespace adasprt

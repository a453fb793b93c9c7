#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_support.hpp"

using namespace ibscale;
using ibscale::testing::code_of;
using ibscale::testing::naive_information;
using ibscale::testing::naive_mi;
using ibscale::testing::random_cell_joint;
using ibscale::testing::random_joint;
using ibscale::testing::solution_violation;

namespace {

SolverConfig quick_config(std::size_t restarts = 10, std::uint64_t seed = 1) {
  SolverConfig c;
  c.restarts = restarts;
  c.seed = seed;
  return c;
}

// Three clusters of near-duplicate conditional rows.
JointDistribution grouped_joint(std::uint64_t seed, std::size_t perGroup = 3) {
  std::mt19937_64 gen(seed);
  std::vector<std::vector<double>> base;
  for (int g = 0; g < 3; ++g) base.push_back(ibscale::testing::dirichlet(gen, 5, 0.5));
  std::uniform_real_distribution<double> u(0.0, 0.02);
  Matrix w(3 * perGroup, 5);
  for (std::size_t x = 0; x < w.rows(); ++x)
    for (std::size_t y = 0; y < 5; ++y) w(x, y) = base[x % 3][y] + u(gen);
  return JointDistribution::from_weights(w, ibscale::testing::numbered_ids(w.rows()));
}

void expect_descending(const IBSolution& s) {
  for (std::size_t i = 1; i < s.trace.size(); ++i) {
    if (s.trace[i].beta != s.trace[i - 1].beta) continue;
    EXPECT_LE(s.trace[i].functional, s.trace[i - 1].functional + 1e-10) << "sweep " << i;
  }
}

}  // namespace

TEST(AnnealingScheduleTest, GeometricBetasEndAtTarget) {
  AnnealingSchedule a{1.0, 2.0, 10};
  EXPECT_EQ(a.betas(50.0), (std::vector<double>{1, 2, 4, 8, 16, 32, 50}));
  AnnealingSchedule shortRun{1.0, 2.0, 3};
  EXPECT_EQ(shortRun.betas(50.0), (std::vector<double>{1, 2, 4, 50}));
}

TEST(SolverConfigTest, RejectsInvalidValues) {
  SolverConfig c;
  c.beta = 0.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::InvalidConfig);
  c = SolverConfig{};
  c.restarts = 0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::InvalidConfig);
  c = SolverConfig{};
  c.convergenceTol = 0.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::InvalidConfig);
}

TEST(IbInitializeTest, SingleClusterForcesMarginal) {
  auto j = random_cell_joint(2, 5, 4);
  auto s = ib_initialize(j, 1, 9);
  for (std::size_t x = 0; x < 5; ++x) EXPECT_EQ(s.assignment(0, x), 1.0);
  for (std::size_t y = 0; y < 4; ++y) EXPECT_NEAR(s.relevance(y, 0), j.marginal_y()[y], 1e-15);
}

TEST(IbInitializeTest, DeterministicForFixedSeed) {
  auto j = random_cell_joint(3, 6, 4);
  EXPECT_TRUE(ib_initialize(j, 3, 77) == ib_initialize(j, 3, 77));
  EXPECT_FALSE(ib_initialize(j, 3, 77) == ib_initialize(j, 3, 78));
}

TEST(IbInitializeTest, FullClusterCountIsValid) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto j = random_cell_joint(seed, 7, 3);
    EXPECT_EQ(solution_violation(j, ib_initialize(j, 7, seed)), "");
  }
}

TEST(IbInitializeTest, ClusterCountOutOfRange) {
  auto j = random_cell_joint(1, 4, 3);
  EXPECT_EQ(code_of([&] { ib_initialize(j, 0, 1); }), ErrorCode::InvalidClusterCount);
  EXPECT_EQ(code_of([&] { ib_initialize(j, 5, 1); }), ErrorCode::InvalidClusterCount);
  EXPECT_EQ(code_of([&] { ib_solve(j, 5, quick_config()); }), ErrorCode::InvalidClusterCount);
}

TEST(IbIterateTest, FixedPointIsIdempotent) {
  auto j = random_joint(5, 6, 4);
  auto s = ib_converge(j, ib_initialize(j, 3, 5), 1e-13, 5000);
  ASSERT_TRUE(s.converged);
  auto next = ib_iterate(j, s);
  for (std::size_t k = 0; k < s.assignment.data().size(); ++k)
    EXPECT_NEAR(next.assignment.data()[k], s.assignment.data()[k], 1e-10);
  for (std::size_t k = 0; k < s.relevance.data().size(); ++k)
    EXPECT_NEAR(next.relevance.data()[k], s.relevance.data()[k], 1e-10);
}

TEST(IbIterateTest, VanishingBetaMakesAssignmentIndependentOfItem) {
  auto j = random_cell_joint(6, 6, 4);
  auto s = ib_initialize(j, 3, 12, 1e-6);
  auto next = ib_iterate(j, s);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t x = 0; x < 6; ++x) {
      EXPECT_NEAR(next.assignment(t, x), s.clusterPrior[t], 1e-6);
      EXPECT_NEAR(next.assignment(t, x), next.assignment(t, 0), 1e-6);
    }
}

TEST(IbIterateTest, OneSweepMatchesLinearDomainTransliteration) {
  auto j = random_cell_joint(42, 4, 3);
  for (double beta : {0.5, 3.0, 20.0}) {
    auto s = ib_initialize(j, 2, 1234, beta);
    auto ref = ibscale::testing::naive_sweep(j, ibscale::testing::naive_derive(j, s.assignment.to_rows()), beta);
    auto next = ib_iterate(j, s);
    for (std::size_t t = 0; t < 2; ++t) {
      EXPECT_NEAR(next.clusterPrior[t], ref.pt[t], 1e-13);
      for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(next.assignment(t, x), ref.q[t][x], 1e-13);
      for (std::size_t y = 0; y < 3; ++y) EXPECT_NEAR(next.relevance(y, t), ref.pyt[y][t], 1e-13);
    }
  }
}

TEST(IbIterateTest, EmptyClusterIsFlaggedAndStaysEmpty) {
  auto j = random_cell_joint(8, 4, 3);
  Matrix q = Matrix::from_rows({{0.7, 0.2, 1.0, 0.5}, {0.0, 0.0, 0.0, 0.0}, {0.3, 0.8, 0.0, 0.5}});
  auto s = make_solution(j, q, 50.0);
  EXPECT_EQ(s.emptyClusters, (std::vector<std::size_t>{1}));
  for (int i = 0; i < 5; ++i) s = ib_iterate(j, s);
  EXPECT_EQ(s.emptyClusters, (std::vector<std::size_t>{1}));
  for (std::size_t x = 0; x < 4; ++x) EXPECT_EQ(s.assignment(1, x), 0.0);
  EXPECT_EQ(solution_violation(j, s), "");
}

TEST(IbIterateTest, FunctionalDescendsMonotonically) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto j = random_cell_joint(seed, 8, 4);
    for (double beta : {1.0, 10.0, 50.0}) {
      auto s = ib_initialize(j, 1 + seed % 4, seed * 31, beta);
      for (int i = 0; i < 60; ++i) s = ib_iterate(j, s);
      expect_descending(s);
      EXPECT_EQ(solution_violation(j, s), "");
    }
  }
}

TEST(IbFunctionalTest, SingleClusterIsZero) {
  auto j = random_cell_joint(9, 5, 4);
  auto s = ib_initialize(j, 1, 3);
  EXPECT_NEAR(ib_functional(j, s), 0.0, 1e-12);
  EXPECT_NEAR(s.infoTX, 0.0, 1e-15);
  EXPECT_NEAR(s.infoTY, 0.0, 1e-15);
}

TEST(IbFunctionalTest, IdentityAssignmentLiftsTheJoint) {
  auto j = random_cell_joint(10, 5, 4);
  auto s = make_solution(j, hard_assignment(Partition::singletons(j.item_ids())), 1.0);
  EXPECT_NEAR(s.infoTX, entropy(j.marginal_x()), 1e-14);
  EXPECT_NEAR(s.infoTY, naive_mi(j.joint().to_rows()), 1e-14);
  EXPECT_NEAR(ib_functional(j, s), entropy(j.marginal_x()) - naive_mi(j.joint().to_rows()), 1e-14);
}

TEST(IbFunctionalTest, MatchesBruteForceInformationTerms) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto j = random_cell_joint(seed, 6, 4);
    auto s = ib_initialize(j, 2 + seed % 4, seed, 7.5);
    auto [itx, ity] = naive_information(j, s.assignment);
    EXPECT_NEAR(s.infoTX, itx, 1e-13);
    EXPECT_NEAR(s.infoTY, ity, 1e-13);
    EXPECT_NEAR(ib_functional(j, s), itx - 7.5 * ity, 1e-12);
  }
}

TEST(IbSolveTest, SingleClusterHasZeroFunctional) {
  auto j = random_cell_joint(11, 6, 4);
  auto s = ib_solve(j, 1, quick_config(1));
  EXPECT_NEAR(s.functionalValue, 0.0, 1e-12);
  EXPECT_TRUE(s.converged);
}

TEST(IbSolveTest, IdentityLimitOnDistinctRows) {
  auto j = random_joint(12, 6, 7);
  auto s = ib_solve(j, 6, quick_config(30));
  EXPECT_GE(s.infoTY, 0.999 * mutual_information(j));
}

TEST(IbSolveTest, EightItemBipartitionMatchesExhaustiveSearch) {
  auto j = random_joint(2024, 8, 4);
  SolverConfig c;
  c.restarts = 64;
  c.seed = 3;
  auto s = ib_solve(j, 2, c);
  auto hardened = partition_information(j, harden(s, j).partition);
  auto best = exhaustive_oracle(j, 2);
  EXPECT_EQ(best.partition.cluster_count(), 2u);
  EXPECT_NEAR(hardened.infoTY, best.infoTY, 1e-6);
}

TEST(IbSolveTest, ReturnedSolutionsRespectInformationBounds) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto j = random_cell_joint(seed, 7, 4);
    std::size_t t = 1 + seed % 7;
    auto s = ib_solve(j, t, quick_config(4, seed));
    EXPECT_EQ(solution_violation(j, s), "");
    EXPECT_LE(s.infoTY, mutual_information(j) + 1e-9);
    EXPECT_LE(s.infoTY, s.infoTX + 1e-9);
    EXPECT_LE(s.infoTX, std::log(static_cast<double>(t)) + 1e-9);
    expect_descending(s);
    if (s.converged) {
      EXPECT_LT(fixed_point_residual(j, s), 1e-8);
    }
  }
}

TEST(IbSolveTest, ThreadCountDoesNotChangeTheResult) {
  auto j = random_cell_joint(13, 8, 5);
  auto c = quick_config(17, 99);
  auto one = ib_solve(j, 3, c);
  c.threads = 4;
  auto four = ib_solve(j, 3, c);
  c.threads = 17;
  auto many = ib_solve(j, 3, c);
  EXPECT_TRUE(one == four);
  EXPECT_TRUE(one == many);
}

TEST(IbSolveTest, WinnerHasLowestFunctionalAmongRestarts) {
  auto j = random_cell_joint(14, 6, 4);
  auto c = quick_config(12, 5);
  auto best = ib_solve(j, 3, c);
  for (std::size_t r = 0; r < c.restarts; ++r) {
    auto init = ib_initialize(j, 3, splitmix64(c.seed ^ splitmix64(r + 1)), c.beta);
    auto run = ib_run(j, init, c);
    if (run.converged) {
      EXPECT_LE(best.functionalValue, run.functionalValue);
    }
  }
}

TEST(IbSolveTest, PermutingItemsPermutesThePartition) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto j = grouped_joint(seed);
    std::vector<std::size_t> order{4, 7, 0, 2, 8, 1, 6, 3, 5};
    auto p = j.permuted(order);
    auto a = harden(ib_solve(j, 3, quick_config(20, seed)), j).partition;
    auto b = harden(ib_solve(p, 3, quick_config(20, seed + 100)), p).partition;
    EXPECT_DOUBLE_EQ(adjusted_rand_index(a, b), 1.0);
    EXPECT_EQ(a.reindexed(p.item_ids()), b);
  }
}

TEST(IbSolveTest, AnnealedRunsStayValid) {
  auto j = random_cell_joint(15, 8, 4);
  auto c = quick_config(6, 4);
  c.annealing = AnnealingSchedule{1.0, 2.0, 6};
  auto s = ib_solve(j, 3, c);
  EXPECT_EQ(s.beta, 50.0);
  EXPECT_EQ(solution_violation(j, s), "");
  EXPECT_EQ(s.trace.front().beta, 1.0);
  expect_descending(s);
  if (s.converged) {
    EXPECT_LT(fixed_point_residual(j, s), 1e-8);
  }
}

TEST(IbSolveTest, WarmStartRunsAsExtraRestart) {
  auto j = grouped_joint(21);
  auto planted = Partition::from_labels(j.item_ids(), {0, 1, 2, 0, 1, 2, 0, 1, 2});
  auto warm = hard_assignment(planted);
  auto s = ib_solve(j, 3, quick_config(1, 2), warm);
  EXPECT_EQ(harden(s, j).partition, planted);
  EXPECT_EQ(code_of([&] { ib_solve(j, 2, quick_config(1), warm); }), ErrorCode::DimensionError);
}

TEST(HardenTest, ArgmaxWithLowestIndexTies) {
  auto j = random_cell_joint(16, 3, 2);
  auto s = make_solution(j, Matrix::from_rows({{0.9, 0.5, 0.2}, {0.1, 0.5, 0.8}}), 50.0);
  auto h = harden(s, j);
  EXPECT_EQ(h.partition.cluster_of(), (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_EQ(h.effectiveClusters, 2u);
}

TEST(HardenTest, RelabelsByFirstOccurrenceAndDropsEmpty) {
  auto j = random_cell_joint(17, 4, 2);
  auto s = make_solution(j, Matrix::from_rows({{0.1, 0.0, 0.1, 0.2},
                                               {0.1, 0.1, 0.1, 0.1},
                                               {0.8, 0.9, 0.8, 0.7}}),
                         50.0);
  auto h = harden(s, j);
  EXPECT_EQ(h.partition.cluster_of(), (std::vector<std::size_t>{0, 0, 0, 0}));
  EXPECT_EQ(h.effectiveClusters, 1u);
}

TEST(HardenTest, MatchesIndependentColumnScan) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto j = random_cell_joint(seed, 9, 3);
    auto s = ib_initialize(j, 4, seed);
    auto h = harden(s, j).partition;
    std::vector<std::size_t> raw(9);
    for (std::size_t x = 0; x < 9; ++x) {
      double best = -1;
      for (std::size_t t = 0; t < 4; ++t)
        if (s.assignment(t, x) > best) best = s.assignment(t, x), raw[x] = t;
    }
    for (std::size_t a = 0; a < 9; ++a)
      for (std::size_t b = 0; b < 9; ++b)
        EXPECT_EQ(h.cluster_of(a) == h.cluster_of(b), raw[a] == raw[b]);
  }
}

TEST(ExhaustiveOracleTest, RecoversIdenticalRowGroups) {
  Matrix w = Matrix::from_rows({{0.7, 0.2, 0.1}, {0.1, 0.3, 0.6}, {0.7, 0.2, 0.1},
                                {0.1, 0.3, 0.6}, {0.7, 0.2, 0.1}});
  auto j = JointDistribution::from_weights(w, {"a", "b", "c", "d", "e"});
  auto best = exhaustive_oracle(j, 2);
  EXPECT_EQ(best.partition.cluster_of(), (std::vector<std::size_t>{0, 1, 0, 1, 0}));
  EXPECT_NEAR(best.infoTY, mutual_information(j), 1e-14);
}

TEST(ExhaustiveOracleTest, ThreeItemsAgainstAllBipartitions) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto j = random_cell_joint(seed, 3, 4);
    std::vector<std::vector<std::size_t>> splits{{0, 0, 1}, {0, 1, 0}, {0, 1, 1}};
    double best = -1;
    std::vector<std::size_t> arg;
    for (const auto& lab : splits) {
      std::vector<std::vector<double>> pty(2, std::vector<double>(4, 0.0));
      for (std::size_t x = 0; x < 3; ++x)
        for (std::size_t y = 0; y < 4; ++y) pty[lab[x]][y] += j(x, y);
      double mi = naive_mi(pty);
      if (mi > best) best = mi, arg = lab;
    }
    auto o = exhaustive_oracle(j, 2);
    EXPECT_NEAR(o.infoTY, best, 1e-14);
    EXPECT_EQ(o.partition.cluster_of(), arg);
  }
}

TEST(ExhaustiveOracleTest, FullCountIsIdentity) {
  auto j = random_cell_joint(5, 6, 3);
  auto o = exhaustive_oracle(j, 6);
  EXPECT_EQ(o.partition, Partition::singletons(j.item_ids()));
  EXPECT_NEAR(o.infoTY, mutual_information(j), 1e-14);
}

TEST(ExhaustiveOracleTest, EnumerationBound) {
  auto j = random_cell_joint(5, 13, 3);
  EXPECT_EQ(code_of([&] { exhaustive_oracle(j, 2); }), ErrorCode::EnumerationBound);
}

TEST(ExhaustiveOracleTest, MatchesBruteForceOverAllLabelings) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto j = random_joint(seed, 8, 4);
    for (std::size_t t : {2u, 3u}) {
      double best = -1;
      std::size_t codes = 1;
      for (std::size_t i = 0; i < 8; ++i) codes *= t;
      for (std::size_t code = 0; code < codes; ++code) {
        std::size_t c = code;
        std::vector<std::size_t> lab(8);
        std::vector<bool> used(t, false);
        for (auto& v : lab) v = c % t, c /= t, used[v] = true;
        if (std::find(used.begin(), used.end(), false) != used.end()) continue;
        std::vector<std::vector<double>> pty(t, std::vector<double>(4, 0.0));
        for (std::size_t x = 0; x < 8; ++x)
          for (std::size_t y = 0; y < 4; ++y) pty[lab[x]][y] += j(x, y);
        best = std::max(best, naive_mi(pty));
      }
      auto o = exhaustive_oracle(j, t);
      EXPECT_NEAR(o.infoTY, best, 1e-13);
      EXPECT_EQ(o.partition.cluster_count(), t);
    }
  }
}

#include "support/oracles.hpp"

#include "expgraph/degree.hpp"
#include "expgraph/reduction.hpp"
#include "expgraph/solver.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace expgraph;

namespace {

VertexFunction vf(std::initializer_list<double> xs) {
  VertexFunction v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Random instance whose last `removed` vertices carry no coefficients. The
// leading coefficient is positive somewhere and c < 0, so a root exists.
ExpNonlinearity with_inert_tail(std::mt19937_64& rng, Index k, Index removed, double c = -0.5) {
  VertexFunction f1 = oracle::random_vf(rng, k), f2 = oracle::random_vf(rng, k);
  f2(0) = 0.5 + std::abs(f2(0));
  for (Index x = k - removed; x < k; ++x) f1(x) = f2(x) = 0.0;
  return ExpNonlinearity({f1, f2}, c);
}

}  // namespace

TEST(Partition, IdentityWhenNoVertexIsInert) {
  const WeightedGraph g = WeightedGraph::unit(2, {{0, 1, 1.0}});
  const ExpNonlinearity eq({vf({1, 0}), vf({0, -1})}, 0.0);
  const ReducedSystem rs = schur_reduce(g, eq);
  EXPECT_TRUE(rs.identity());
  EXPECT_EQ(rs.lift(vf({0.3, -0.2})), vf({0.3, -0.2}));
  EXPECT_EQ(rs.det_r(), 1.0);
}

TEST(Partition, MatchesBruteForceScan) {
  std::mt19937_64 rng(31);
  std::bernoulli_distribution zero(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    const Index k = 5;
    std::vector<VertexFunction> f{oracle::random_vf(rng, k), oracle::random_vf(rng, k)};
    f[0](0) = 1.0;
    std::vector<Index> expected_removed;
    for (Index x = 1; x < k; ++x)
      if (zero(rng)) {
        f[0](x) = f[1](x) = 0.0;
        expected_removed.push_back(x);
      }
    const Partition p = partition(oracle::random_graph(rng, k), ExpNonlinearity(f, 0.0));
    EXPECT_EQ(p.removed, expected_removed);
    EXPECT_EQ(p.kept.size() + p.removed.size(), static_cast<std::size_t>(k));
  }
}

TEST(SchurReduce, PathSeriesWeight) {
  const WeightedGraph g = WeightedGraph::unit(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const ExpNonlinearity eq({vf({1, 0, -1}), vf({1, 0, 1})}, 0.0);
  const ReducedSystem rs = schur_reduce(g, eq);
  EXPECT_EQ(rs.part().kept, (std::vector<Index>{0, 2}));
  EXPECT_NEAR(rs.graph().weight(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(rs.det_r(), 2.0, 1e-14);
  const WeightedGraph h = WeightedGraph::unit(3, {{0, 1, 2.0}, {1, 2, 3.0}});
  EXPECT_NEAR(schur_reduce(h, eq).graph().weight(0, 1), 6.0 / 5.0, 1e-15);
}

TEST(SchurReduce, StarWithInertLeaves) {
  const WeightedGraph g = WeightedGraph::unit(4, {{0, 1, 1.0}, {0, 2, 2.0}, {0, 3, 0.5}, {1, 2, 1.0}});
  const ExpNonlinearity eq({vf({1, 1, 1, 0}), vf({-1, 1, 0, 0})}, 0.0);
  const VertexFunction f0 = vf({0.3, -0.1, 0.2, 0.0});
  const ReducedSystem rs = schur_reduce(g, eq, f0);
  EXPECT_EQ(rs.part().removed, (std::vector<Index>{3}));
  EXPECT_NEAR(rs.f0_tilde()(0), 0.3, 1e-15);
  EXPECT_NEAR(rs.f0_tilde()(1), -0.1, 1e-15);
  EXPECT_NEAR(rs.f0_tilde()(2), 0.2, 1e-15);
}

TEST(SchurReduce, DeterminantIdentity) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const WeightedGraph g = oracle::random_graph(rng, 6);
    const ExpNonlinearity eq = with_inert_tail(rng, 6, 2);
    const ReducedSystem rs = schur_reduce(g, eq);
    for (int s = 0; s < 5; ++s) {
      const VertexFunction u = oracle::random_vf(rng, 6);
      VertexFunction u1(4);
      for (Index i = 0; i < 4; ++i) u1(i) = u(rs.part().kept[static_cast<std::size_t>(i)]);
      const double full = energy_hessian(g, eq, u).determinant();
      const double reduced = energy_hessian(rs.graph(), rs.equation(), u1).determinant();
      EXPECT_NEAR(rs.det_r() * reduced / full, 1.0, 1e-8);
    }
  }
}

TEST(SchurReduce, Invariants) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const Index removed = 1 + trial % 3;
    const Index k = removed + 2 + trial % 3;
    const WeightedGraph g = oracle::random_graph(rng, k);
    const ExpNonlinearity eq = with_inert_tail(rng, k, removed);
    const VertexFunction f0 = oracle::random_vf(rng, k);
    const ReducedSystem rs = schur_reduce(g, eq, f0);
    const auto& d = rs.diagnostics();
    EXPECT_GT(d.r_min_eigenvalue, 0.0);
    EXPECT_GE(d.r_inverse_min, -1e-12);
    EXPECT_LE(d.column_sum_error, 1e-10);
    EXPECT_LE(d.row_sum_error, 1e-10);
    EXPECT_GE(d.min_reduced_weight, -1e-12);
    EXPECT_TRUE(oracle::bfs_connected(rs.graph().weights()));
    EXPECT_NEAR(rs.graph().measure().dot(rs.f0_tilde()), g.measure().dot(f0 + VertexFunction::Constant(k, -0.5)),
                1e-10);
  }
}

TEST(SchurReduce, WeightsScaleLinearly) {
  std::mt19937_64 rng(34);
  const WeightedGraph g = oracle::random_graph(rng, 6);
  const ExpNonlinearity eq = with_inert_tail(rng, 6, 2);
  const Eigen::MatrixXd w = schur_reduce(g, eq).graph().weights();
  const Eigen::MatrixXd w3 = schur_reduce(g.with_scaled_weights(3.0), eq).graph().weights();
  EXPECT_LT((w3 - 3.0 * w).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lift, PathMiddleMatchesFullNewton) {
  const WeightedGraph g = WeightedGraph::from_edges(vf({1.0, 2.0, 1.0}), {{0, 1, 1.0}, {1, 2, 3.0}});
  const ExpNonlinearity eq({vf({-1, 0, -0.5}), vf({1, 0, 0.5})}, 0.0);
  const VertexFunction f0 = vf({-0.4, 0.3, -0.2});
  const ReducedSystem rs = schur_reduce(g, eq, f0);
  const NormalizedSource ns = rs.reduced_instance();
  SolverConfig cfg;
  const SolutionSet set = multistart_enumerate(rs.graph(), ns.equation, cfg);
  ASSERT_FALSE(set.empty());
  for (const auto& s : set.solutions) {
    const VertexFunction u = rs.lift(s.u + ns.shift);
    // Middle value: weighted neighbour average plus the source term.
    EXPECT_NEAR(u(1), (1.0 * u(0) + 3.0 * u(2) + 2.0 * 0.3) / 4.0, 1e-12);
    // Plain Newton on the full 3x3 system with finite-difference Jacobians.
    const auto full = [&](const VertexFunction& w) {
      return VertexFunction(oracle::residual(g.measure(), g.weights(), eq.coeffs(), 0.0, w) + f0);
    };
    VertexFunction direct = u + vf({0.05, -0.05, 0.05});
    for (int it = 0; it < 50; ++it) direct -= oracle::fd_jacobian(full, direct).lu().solve(full(direct));
    EXPECT_LE((direct - u).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Lift, RoundTripResidual) {
  std::mt19937_64 rng(35);
  SolverConfig cfg;
  for (int trial = 0; trial < 15; ++trial) {
    const Index removed = 1 + trial % 3;
    const Index k = removed + 3;
    const WeightedGraph g = oracle::random_graph(rng, k);
    const ExpNonlinearity eq = with_inert_tail(rng, k, removed);
    const VertexFunction f0 = 0.2 * oracle::random_vf(rng, k);
    const ReducedSystem rs = schur_reduce(g, eq, f0);
    const NormalizedSource ns = rs.reduced_instance();
    const SolutionSet reduced = multistart_enumerate(rs.graph(), ns.equation, cfg);
    ASSERT_FALSE(reduced.empty());
    for (const auto& s : reduced.solutions) {
      const VertexFunction u = rs.lift(s.u + ns.shift);
      EXPECT_LE((residual(g, eq, u) + f0).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(Lift, SolutionBijectionAndDegreeTransport) {
  std::mt19937_64 rng(36);
  SolverConfig cfg;
  int compared = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const Index k = 5;
    const WeightedGraph g = oracle::random_graph(rng, k);
    const ExpNonlinearity eq = with_inert_tail(rng, k, 1 + trial % 2, trial % 2 ? -0.5 : 0.5);
    const ReducedSystem rs = schur_reduce(g, eq);
    const NormalizedSource ns = rs.reduced_instance();
    const DegreeReport full = empirical_degree(g, eq, cfg);
    const DegreeReport reduced = empirical_degree(rs.graph(), ns.equation, cfg);
    if (!full.certified || !reduced.certified) continue;
    ++compared;
    EXPECT_EQ(full.solutions.size(), reduced.solutions.size());
    EXPECT_EQ(full.empirical, reduced.empirical);
    // Every lifted reduced root is one of the full roots.
    for (const auto& s : reduced.solutions.solutions) {
      const VertexFunction u = rs.lift(s.u + ns.shift);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : full.solutions.solutions) best = std::min(best, (t.u - u).cwiseAbs().maxCoeff());
      EXPECT_LT(best, 1e-6);
    }
  }
  EXPECT_GE(compared, 8);
}

TEST(Lift, RejectsWrongLength) {
  const WeightedGraph g = WeightedGraph::unit(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const ReducedSystem rs = schur_reduce(g, ExpNonlinearity({vf({1, 0, 1})}, 0.0));
  EXPECT_THROW(rs.lift(vf({1, 2, 3})), std::invalid_argument);
}

TEST(SchurReduce, AllInertThrows) {
  const WeightedGraph g = WeightedGraph::unit(2, {{0, 1, 1.0}});
  EXPECT_THROW(schur_reduce(g, ExpNonlinearity({vf({0, 0})}, 1.0)), std::invalid_argument);
}

#include "support/instances.hpp"
#include "support/oracles.hpp"

#include "expgraph/apriori.hpp"
#include "expgraph/degree.hpp"

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

}  // namespace

TEST(EmpiricalDegree, TableRows) {
  std::mt19937_64 rng(51);
  SolverConfig cfg;
  for (int row = 0; row < fixtures::kDegreeRows; ++row) {
    for (int i = 0; i < 2; ++i) {
      const auto inst = fixtures::degree_row_instance(row, i, rng);
      const DegreeReport r = empirical_degree(inst.graph, inst.eq, cfg);
      EXPECT_EQ(r.predicted, fixtures::expected_row_degree(row));
      if (r.certified) {
        EXPECT_EQ(r.empirical, r.predicted) << "row " << row;
      }
      // A nonzero degree forces a root.
      if (*r.predicted != 0) {
        EXPECT_FALSE(r.solutions.empty());
      }
    }
  }
}

TEST(EmpiricalDegree, StructuralCases) {
  std::mt19937_64 rng(52);
  SolverConfig cfg;
  const WeightedGraph g = oracle::random_graph(rng, 4);
  // b*, c > 0.
  const ExpNonlinearity b({-oracle::random_vf(rng, 4, 0.1, 1.0), -oracle::random_vf(rng, 4, 0.1, 1.0)}, 0.5);
  ASSERT_EQ(structural_case(b), Structural::b_star);
  const DegreeReport rb = empirical_degree(g, b, cfg);
  EXPECT_TRUE(rb.certified);
  EXPECT_EQ(rb.empirical, 1);
  // a*, c > 0: degree 0.
  const ExpNonlinearity a({vf({-1.0, 0.3, -0.5, 0.2}), vf({0.5, -1.0, 0.2, -0.3})}, 0.05);
  ASSERT_EQ(structural_case(a), Structural::a_star);
  const DegreeReport ra = empirical_degree(g, a, cfg);
  EXPECT_TRUE(ra.certified);
  EXPECT_EQ(ra.empirical, 0);
  EXPECT_EQ(ra.solutions.size() % 2, 0u);
  // a*, c = 0, avg f1 < 0: degree -1.
  const DegreeReport r0 = empirical_degree(g, a.with_constant(0.0), cfg);
  EXPECT_TRUE(r0.certified);
  EXPECT_EQ(r0.empirical, -1);
}

TEST(EmpiricalDegree, UndefinedAtZeroAverage) {
  const WeightedGraph g = WeightedGraph::unit(2, {{0, 1, 1.0}});
  const ExpNonlinearity eq({vf({1, -1}), vf({1, -1})}, 0.0);
  EXPECT_EQ(empirical_degree(g, eq, SolverConfig{}).predicted, std::nullopt);
  EXPECT_THROW(canonical_homotopy(g, eq), std::invalid_argument);
}

TEST(CanonicalHomotopy, CaseAEndpointIsIndicator) {
  const WeightedGraph g = WeightedGraph::unit(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const ExpNonlinearity eq({vf({0.3, -1.0, 0.2}), vf({-0.5, 2.0, 0.1})}, -0.4);
  const HomotopyPath path = canonical_homotopy(g, eq);
  const ExpNonlinearity end = path.at(1.0);
  EXPECT_EQ(end.coeff(2), vf({0, 1, 0}));
  EXPECT_EQ(end.coeff(1), vf({0, 0, 0}));
  EXPECT_EQ(end.constant(), -0.4);
  const ExpNonlinearity start = path.at(0.0);
  EXPECT_EQ(start.coeff(2), eq.coeff(2));
}

TEST(CanonicalHomotopy, CaseBEndpointIsNegativeIndicator) {
  const WeightedGraph g = WeightedGraph::unit(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const ExpNonlinearity eq({vf({-0.3, -1.0, 0.0}), vf({-0.5, -2.0, -0.1})}, 0.4);
  const HomotopyPath path = canonical_homotopy(g, eq);
  const ExpNonlinearity end = path.at(1.0);
  EXPECT_EQ((end.coeff(2).array() != 0.0).count(), 1);
  EXPECT_EQ(end.coeff(2).minCoeff(), -1.0);
  EXPECT_EQ(end.coeff(1), vf({0, 0, 0}));
  EXPECT_EQ(empirical_degree(g, end, SolverConfig{}).empirical, 1);
}

TEST(CanonicalHomotopy, CaseDEndpoint) {
  const WeightedGraph g = WeightedGraph::unit(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const ExpNonlinearity eq({vf({1.0, -0.2, 0.5}), vf({-1.0, -0.3, -2.0})}, 0.0);
  ASSERT_EQ(quadratic_case(eq), QuadraticCase::d);
  const ExpNonlinearity end = canonical_homotopy(g, eq).at(1.0);
  EXPECT_EQ(end.coeff(2), vf({-1, -1, -1}));
  EXPECT_EQ(end.coeff(1), vf({1, 1, 1}));
  // Delta u = e^u (e^u - 1) has the single root u = 0.
  const SolutionSet set = multistart_enumerate(g, end, SolverConfig{});
  ASSERT_EQ(set.size(), 1u);
  EXPECT_LT(set.solutions[0].u.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(TrackHomotopy, ConstantPath) {
  const WeightedGraph g = WeightedGraph::unit(2, {{0, 1, 1.0}});
  const ExpNonlinearity eq({vf({-1, -1}), vf({-1, -1})}, 0.0);  // b*, avg f1 < 0
  const HomotopyPath path = canonical_homotopy(g, eq);
  const HomotopyTrack tr = track_homotopy(g, path, SolverConfig{}, 4);
  EXPECT_EQ(tr.status, TrackStatus::constant);
  EXPECT_EQ(tr.degree, 0);
}

TEST(TrackHomotopy, CaseANegativeConstantOnFiveVertices) {
  std::mt19937_64 rng(53);
  const WeightedGraph g = oracle::random_graph(rng, 5);
  VertexFunction f2 = oracle::random_vf(rng, 5);
  f2(2) = 1.5;
  const ExpNonlinearity eq({oracle::random_vf(rng, 5), f2}, -0.6);
  const HomotopyPath path = canonical_homotopy(g, eq);
  const HomotopyTrack tr = track_homotopy(g, path, SolverConfig{}, 16);
  EXPECT_EQ(tr.status, TrackStatus::constant);
  EXPECT_EQ(tr.degree, -1);
  // Endpoint: e^{2u} at the witness only, so m0 e^{2 u0} = 0.6 vol.
  const ExpNonlinearity end = path.at(1.0);
  Index x0 = 0;
  end.coeff(2).maxCoeff(&x0);
  const auto& last = tr.samples.back().report.solutions;
  ASSERT_EQ(last.size(), 1u);
  EXPECT_NEAR(last.solutions[0].u(x0), 0.5 * std::log(0.6 * g.volume() / g.measure(x0)), 1e-9);
}

TEST(TrackHomotopy, CaseCNegativeAverageEndpoint) {
  const WeightedGraph g = WeightedGraph::unit(2, {{0, 1, 2.0}});
  const ExpNonlinearity eq({vf({1.0, -3.0}), vf({0.0, -1.0})}, 0.0);
  ASSERT_EQ(quadratic_case(eq), QuadraticCase::c);
  const HomotopyPath path = canonical_homotopy(g, eq);
  SolverConfig cfg;
  cfg.budget = 150;
  const HomotopyTrack tr = track_homotopy(g, path, cfg, 8);
  EXPECT_EQ(tr.status, TrackStatus::constant);
  EXPECT_EQ(tr.degree, -1);
  const auto& last = tr.samples.back().report.solutions;
  ASSERT_EQ(last.size(), 1u);
  EXPECT_NEAR(last.solutions[0].u(0), std::log(2.0), 1e-9);
  EXPECT_NEAR(last.solutions[0].u(1), std::log(2.0) - 1.0, 1e-9);
}

TEST(TrackHomotopy, GuardViolationIsReported) {
  const WeightedGraph g = WeightedGraph::unit(2, {{0, 1, 1.0}});
  const Coefficients a{{vf({1.0, -2.0}), vf({1.0, 0.0})}, 0.0};
  const Coefficients b{{vf({2.0, -1.0}), vf({1.0, 0.0})}, 0.0};
  const HomotopyPath path({a, b}, "through avg f1 = 0");
  EXPECT_THROW(path.check_guard(g, 3), GuardViolation);
  EXPECT_THROW(path.at(1.5), std::out_of_range);
}

TEST(TwoVertex, Ex34UniqueRootAndBlowup) {
  const WeightedGraph g = two_vertex_unit_graph();
  const TwoVertexAnalysis an = two_vertex_analyze(g, example_equation(ExampleKind::ex34, 0.1));
  EXPECT_TRUE(an.certified);
  ASSERT_EQ(an.solutions.size(), 1u);
  EXPECT_GT(an.solutions.solutions[0].u(0) - an.solutions.solutions[0].u(1), 0.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const TwoVertexAnalysis a = two_vertex_analyze(g, example_equation(ExampleKind::ex34, eps));
    ASSERT_EQ(a.solutions.size(), 1u);
    const double low = a.solutions.solutions[0].u.minCoeff();
    EXPECT_LT(low, prev - 2.0);
    prev = low;
  }
}

TEST(TwoVertex, Ex35IdentityRoots) {
  const WeightedGraph g = two_vertex_unit_graph();
  for (double eps : {0.3, 0.1, 0.05, 0.01}) {
    const TwoVertexAnalysis an = two_vertex_analyze(g, example_equation(ExampleKind::ex35, eps));
    ASSERT_EQ(an.solutions.size(), 1u);
    const VertexFunction& u = an.solutions.solutions[0].u;
    const double t = oracle::bisect(
        [eps](double s) { return (std::exp(s) - 1.0) * std::exp(s) / s - (1.0 + eps); }, 1e-12, 1.0);
    EXPECT_NEAR(u(0) - u(1), t, 1e-10);
  }
}

TEST(TwoVertex, DegreeMatchesSignSum) {
  const WeightedGraph g = WeightedGraph::unit(2, {{0, 1, 1.0}});
  const ExpNonlinearity eq({vf({-1.0, -1.0}), vf({1.0, -3.0})}, 0.2);
  const TwoVertexAnalysis an = two_vertex_analyze(g, eq);
  EXPECT_TRUE(an.certified);
  EXPECT_EQ(an.solutions.size(), 2u);
  EXPECT_EQ(an.degree, 0);
  EXPECT_EQ(an.degree, *predicted_degree(g, eq));
}

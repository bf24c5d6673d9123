#pragma once

// Random instance families shared by the unit and acceptance tests.

#include "support/oracles.hpp"

#include "expgraph/expgraph.hpp"

#include <random>
#include <vector>

namespace fixtures {

using expgraph::ExpNonlinearity;
using expgraph::Index;
using expgraph::VertexFunction;
using expgraph::WeightedGraph;

struct GeneratedInstance {
  WeightedGraph graph;
  ExpNonlinearity eq;
};

/// Rows of the degree table, in the order: +1 (q finite, c > 0), +1 (q finite,
/// c = 0, avg f1 > 0), -1 (q infinite, c < 0), -1 (q infinite, c = 0, avg
/// f1 < 0), 0 with c != 0, 0 with c = 0.
inline constexpr int kDegreeRows = 6;

inline int expected_row_degree(int row) { return row < 2 ? 1 : (row < 4 ? -1 : 0); }

inline GeneratedInstance degree_row_instance(int row, int index, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index k = 2 + index % 4;
  int n = 1 + index % 3;
  if (row == 1 && n == 1) n = 2;  // q finite with avg f1 > 0 needs a higher term
  const bool zero_c = row == 1 || row == 3 || row == 5;
  // Alternate the two "otherwise" patterns.
  bool q_finite = row == 0 || row == 1;
  if (row == 4) q_finite = index % 2 == 1;   // q infinite with c > 0, or q finite with c < 0
  if (row == 5) q_finite = index % 2 == 0;   // q finite with avg f1 < 0, or q infinite with avg f1 > 0
  int c_sign = 0;
  if (row == 0) c_sign = 1;
  if (row == 2) c_sign = -1;
  if (row == 4) c_sign = q_finite ? -1 : 1;
  int f1_sign = 0;
  if (row == 1) f1_sign = 1;
  if (row == 3) f1_sign = -1;
  if (row == 5) f1_sign = q_finite ? -1 : 1;

  for (;;) {
    WeightedGraph g = oracle::random_graph(rng, k);
    std::vector<VertexFunction> f;
    for (int i = 0; i < n; ++i) f.push_back(oracle::random_vf(rng, k));
    // Thin out higher coefficients so leading indices vary between vertices.
    for (Index x = 0; x < k; ++x)
      for (int i = n - 1; i >= 1; --i)
        if (unit(rng) < 0.3) f[static_cast<std::size_t>(i)](x) = 0.0;
        else break;
    f.back()(0) = f.back()(0) == 0.0 ? 0.5 : f.back()(0);  // keep degree n
    for (Index x = 0; x < k; ++x) {
      int lead = n - 1;
      while (lead > 0 && f[static_cast<std::size_t>(lead)](x) == 0.0) --lead;
      double& d = f[static_cast<std::size_t>(lead)](x);
      if (d == 0.0) d = -0.3;
      if (std::abs(d) < 0.2) d = d < 0.0 ? -0.2 : 0.2;
      if (q_finite && d > 0.0) d = -d;
    }
    if (!q_finite) {
      std::uniform_int_distribution<Index> pick(0, k - 1);
      const Index x = pick(rng);
      int lead = n - 1;
      while (lead > 0 && f[static_cast<std::size_t>(lead)](x) == 0.0) --lead;
      f[static_cast<std::size_t>(lead)](x) = std::abs(f[static_cast<std::size_t>(lead)](x));
    }
    double c = 0.0;
    if (!zero_c) c = c_sign * (0.2 + 0.8 * unit(rng));
    ExpNonlinearity eq(f, c);
    if (eq.degree() != n) continue;
    const expgraph::LeadingProfile p = expgraph::leading_profile(eq);
    if (p.q_finite != q_finite) continue;
    if (zero_c) {
      const double avg = expgraph::f1_average(g, eq);
      if (!(f1_sign * avg >= 0.1)) continue;
    }
    const auto pred = expgraph::predicted_degree(g, eq);
    if (!pred || *pred != expected_row_degree(row)) continue;
    return {std::move(g), std::move(eq)};
  }
}

/// n = 2, q infinite, avg f1 = -1/2.
inline GeneratedInstance case_a_existence_instance(std::mt19937_64& rng, Index k = 4) {
  WeightedGraph g = oracle::random_graph(rng, k);
  VertexFunction f2 = oracle::random_vf(rng, k);
  f2(0) = 0.5 + 0.5 * std::abs(f2(0));
  VertexFunction f1 = oracle::random_vf(rng, k);
  f1.array() -= expgraph::average(g, f1) + 0.5;
  return {std::move(g), ExpNonlinearity({f1, f2}, 0.0)};
}

/// n = 2, f2 < 0 everywhere (q finite), avg f1 = +1/2.
inline GeneratedInstance case_b_existence_instance(std::mt19937_64& rng, Index k = 4) {
  WeightedGraph g = oracle::random_graph(rng, k);
  VertexFunction f2 = -(oracle::random_vf(rng, k, 0.2, 1.0));
  VertexFunction f1 = oracle::random_vf(rng, k);
  f1.array() -= expgraph::average(g, f1) - 0.5;
  return {std::move(g), ExpNonlinearity({f1, f2}, 0.0)};
}

/// Quadratic case (d) with avg f1 > 0: f2 <= 0 with zeros, f1 <= 0 where
/// f2 = 0, and f1 positive somewhere.
inline GeneratedInstance case_d_instance(std::mt19937_64& rng, Index k = 4) {
  for (;;) {
    WeightedGraph g = oracle::random_graph(rng, k);
    VertexFunction f2 = -(oracle::random_vf(rng, k, 0.3, 1.5));
    VertexFunction f1 = oracle::random_vf(rng, k, 0.1, 1.5);
    f2(k - 1) = 0.0;
    f1(k - 1) = -oracle::random_vf(rng, 1, 0.0, 0.5)(0);
    ExpNonlinearity eq({f1, f2}, 0.0);
    if (expgraph::quadratic_case(eq) != expgraph::QuadraticCase::d) continue;
    if (!(expgraph::f1_average(g, eq) > 0.1)) continue;
    return {std::move(g), std::move(eq)};
  }
}

}  // namespace fixtures

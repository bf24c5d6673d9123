#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's numerics; inputs are plain matrices and lambdas.

#include "expgraph/graph.hpp"
#include "expgraph/nonlinearity.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using expgraph::Index;
using expgraph::VertexFunction;
using Eigen::MatrixXd;

inline bool bfs_connected(const MatrixXd& w) {
  const Index k = w.rows();
  if (k == 0) return false;
  std::vector<bool> seen(static_cast<std::size_t>(k), false);
  std::queue<Index> q;
  q.push(0);
  seen[0] = true;
  Index count = 1;
  while (!q.empty()) {
    const Index x = q.front();
    q.pop();
    for (Index y = 0; y < k; ++y)
      if (w(x, y) > 0.0 && !seen[static_cast<std::size_t>(y)]) {
        seen[static_cast<std::size_t>(y)] = true;
        ++count;
        q.push(y);
      }
  }
  return count == k;
}

// Delta u(x) = (1/m(x)) sum_y w_xy (u(y) - u(x)), by direct loops.
inline VertexFunction laplacian(const VertexFunction& m, const MatrixXd& w, const VertexFunction& u) {
  VertexFunction out = VertexFunction::Zero(u.size());
  for (Index x = 0; x < u.size(); ++x) {
    double s = 0.0;
    for (Index y = 0; y < u.size(); ++y) s += w(x, y) * (u(y) - u(x));
    out(x) = s / m(x);
  }
  return out;
}

inline VertexFunction gamma(const VertexFunction& m, const MatrixXd& w, const VertexFunction& u,
                            const VertexFunction& v) {
  VertexFunction out = VertexFunction::Zero(u.size());
  for (Index x = 0; x < u.size(); ++x) {
    double s = 0.0;
    for (Index y = 0; y < u.size(); ++y) s += w(x, y) * (u(y) - u(x)) * (v(y) - v(x));
    out(x) = s / (2.0 * m(x));
  }
  return out;
}

inline double nonlinearity(const std::vector<VertexFunction>& f, double c, Index x, double y) {
  double s = c;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i](x) * std::exp(static_cast<double>(i + 1) * y);
  return s;
}

inline VertexFunction residual(const VertexFunction& m, const MatrixXd& w, const std::vector<VertexFunction>& f,
                               double c, const VertexFunction& u) {
  VertexFunction r = laplacian(m, w, u);
  for (Index x = 0; x < u.size(); ++x) r(x) += nonlinearity(f, c, x, u(x));
  return r;
}

/// Central differences of a vector map.
inline MatrixXd fd_jacobian(const std::function<VertexFunction(const VertexFunction&)>& fun, const VertexFunction& u,
                            double h = 1e-6) {
  const VertexFunction f0 = fun(u);
  MatrixXd j(f0.size(), u.size());
  for (Index k = 0; k < u.size(); ++k) {
    VertexFunction up = u, dn = u;
    up(k) += h;
    dn(k) -= h;
    j.col(k) = (fun(up) - fun(dn)) / (2.0 * h);
  }
  return j;
}

inline VertexFunction fd_gradient(const std::function<double(const VertexFunction&)>& fun, const VertexFunction& u,
                                  double h = 1e-6) {
  VertexFunction g(u.size());
  for (Index k = 0; k < u.size(); ++k) {
    VertexFunction up = u, dn = u;
    up(k) += h;
    dn(k) -= h;
    g(k) = (fun(up) - fun(dn)) / (2.0 * h);
  }
  return g;
}

/// Gaussian elimination with partial pivoting: (sign, log |det|).
inline std::pair<int, double> log_det(MatrixXd a) {
  const Index n = a.rows();
  int sign = 1;
  double logabs = 0.0;
  for (Index col = 0; col < n; ++col) {
    Index piv = col;
    for (Index r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (a(piv, col) == 0.0) return {0, -std::numeric_limits<double>::infinity()};
    if (piv != col) {
      a.row(piv).swap(a.row(col));
      sign = -sign;
    }
    const double p = a(col, col);
    if (p < 0.0) sign = -sign;
    logabs += std::log(std::abs(p));
    for (Index r = col + 1; r < n; ++r) {
      const double f = a(r, col) / p;
      for (Index k = col; k < n; ++k) a(r, k) -= f * a(col, k);
    }
  }
  return {sign, logabs};
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// All sign-change roots of f on [lo, hi] from a uniform scan plus bisection.
inline std::vector<double> scan_roots(const std::function<double(double)>& f, double lo, double hi, int points) {
  std::vector<double> out;
  double x0 = lo, f0 = f(lo);
  for (int i = 1; i <= points; ++i) {
    const double x1 = lo + (hi - lo) * i / points;
    const double f1 = f(x1);
    if ((f0 < 0.0) != (f1 < 0.0)) out.push_back(bisect(f, x0, x1));
    x0 = x1;
    f0 = f1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-vertex grid scan: winding number of the residual vector around each grid
// cell, from the accumulated angle along the cell edges. Edge steps that turn
// by more than a quarter are subdivided; if that does not resolve them the
// cell is ambiguous.

struct GridCount {
  int roots = 0;
  int ambiguous = 0;
};

using PlaneMap = std::function<std::pair<double, double>(double, double)>;

namespace detail {

inline double wrap_angle(double d) {
  while (d > M_PI) d -= 2.0 * M_PI;
  while (d <= -M_PI) d += 2.0 * M_PI;
  return d;
}

inline double angle_at(const PlaneMap& h, double x, double y) {
  const auto [a, b] = h(x, y);
  return std::atan2(b, a);
}

// Angle swept from (x0, y0) to (x1, y1); nullopt if not resolved.
inline std::optional<double> edge_sweep(const PlaneMap& h, double x0, double y0, double a0, double x1, double y1,
                                        double a1, int depth) {
  const double d = wrap_angle(a1 - a0);
  if (std::abs(d) <= M_PI / 2) return d;
  if (depth == 0) return std::nullopt;
  const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
  const double am = angle_at(h, xm, ym);
  const auto l = edge_sweep(h, x0, y0, a0, xm, ym, am, depth - 1);
  if (!l) return std::nullopt;
  const auto r = edge_sweep(h, xm, ym, am, x1, y1, a1, depth - 1);
  if (!r) return std::nullopt;
  return *l + *r;
}

}  // namespace detail

inline GridCount grid_scan_2v(const PlaneMap& h, double lo1, double hi1, double lo2, double hi2, int n = 200,
                              int depth = 12) {
  GridCount out;
  const double d1 = (hi1 - lo1) / n, d2 = (hi2 - lo2) / n;
  const auto at = [&](int i, int j) { return std::make_pair(lo1 + i * d1, lo2 + j * d2); };
  std::vector<double> ang(static_cast<std::size_t>((n + 1) * (n + 1)));
  const auto idx = [n](int i, int j) { return static_cast<std::size_t>(i * (n + 1) + j); };
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const auto [x, y] = at(i, j);
      ang[idx(i, j)] = detail::angle_at(h, x, y);
    }
  // Horizontal edges (i,j)->(i+1,j) and vertical edges (i,j)->(i,j+1).
  std::vector<std::optional<double>> horiz(static_cast<std::size_t>(n * (n + 1)));
  std::vector<std::optional<double>> vert(static_cast<std::size_t>(n * (n + 1)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= n; ++j) {
      const auto [x0, y0] = at(i, j);
      const auto [x1, y1] = at(i + 1, j);
      horiz[static_cast<std::size_t>(i * (n + 1) + j)] =
          detail::edge_sweep(h, x0, y0, ang[idx(i, j)], x1, y1, ang[idx(i + 1, j)], depth);
    }
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto [x0, y0] = at(i, j);
      const auto [x1, y1] = at(i, j + 1);
      vert[static_cast<std::size_t>(i * n + j)] =
          detail::edge_sweep(h, x0, y0, ang[idx(i, j)], x1, y1, ang[idx(i, j + 1)], depth);
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto& bottom = horiz[static_cast<std::size_t>(i * (n + 1) + j)];
      const auto& top = horiz[static_cast<std::size_t>(i * (n + 1) + j + 1)];
      const auto& left = vert[static_cast<std::size_t>(i * n + j)];
      const auto& right = vert[static_cast<std::size_t>((i + 1) * n + j)];
      if (!bottom || !top || !left || !right) {
        ++out.ambiguous;
        continue;
      }
      const double total = *bottom + *right - *top - *left;
      out.roots += std::abs(static_cast<int>(std::lround(total / (2.0 * M_PI))));
    }
  return out;
}

/// Grid scan of the residual of a two-vertex instance.
inline GridCount grid_scan_2v(const expgraph::WeightedGraph& g, const expgraph::ExpNonlinearity& eq, double lo,
                              double hi, int n = 200) {
  const VertexFunction m = g.measure();
  const MatrixXd w = g.weights();
  const std::vector<VertexFunction> f = eq.coeffs();
  const double c = eq.constant();
  return grid_scan_2v(
      [&](double a, double b) {
        const VertexFunction r = residual(m, w, f, c, (VertexFunction(2) << a, b).finished());
        return std::make_pair(r(0), r(1));
      },
      lo, hi, lo, hi, n);
}

// ---------------------------------------------------------------------------
// Random data

inline expgraph::WeightedGraph random_graph(std::mt19937_64& rng, Index k, bool unit_measure = false,
                                            double extra_edge_p = 0.4) {
  std::uniform_real_distribution<double> wdist(0.5, 2.0);
  VertexFunction m = VertexFunction::Ones(k);
  if (!unit_measure)
    for (Index x = 0; x < k; ++x) m(x) = wdist(rng);
  MatrixXd w = MatrixXd::Zero(k, k);
  std::vector<Index> order(static_cast<std::size_t>(k));
  for (Index x = 0; x < k; ++x) order[static_cast<std::size_t>(x)] = x;
  std::shuffle(order.begin(), order.end(), rng);
  for (Index i = 1; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(0, i - 1);
    const Index a = order[static_cast<std::size_t>(i)], b = order[static_cast<std::size_t>(pick(rng))];
    w(a, b) = w(b, a) = wdist(rng);
  }
  std::bernoulli_distribution extra(extra_edge_p);
  for (Index a = 0; a < k; ++a)
    for (Index b = a + 1; b < k; ++b)
      if (w(a, b) == 0.0 && extra(rng)) w(a, b) = w(b, a) = wdist(rng);
  return expgraph::WeightedGraph(m, w);
}

inline VertexFunction random_vf(std::mt19937_64& rng, Index k, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  VertexFunction v(k);
  for (Index x = 0; x < k; ++x) v(x) = d(rng);
  return v;
}

}  // namespace oracle

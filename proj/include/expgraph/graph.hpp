#pragma once

// Finite connected weighted graphs, the graph Laplacian and discrete calculus.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace expgraph {

using Index = Eigen::Index;

/// One real value per vertex, aligned with the owning graph's vertex order.
using VertexFunction = Eigen::VectorXd;

struct Edge {
  Index u;
  Index v;
  double w;
};

namespace detail {

// Union-find over the positive-weight adjacency.
inline Index count_components(const Eigen::MatrixXd& weights) {
  const Index k = weights.rows();
  std::vector<Index> parent(static_cast<std::size_t>(k));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  Index components = k;
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) {
      if (weights(i, j) > 0.0) {
        Index a = find(i), b = find(j);
        if (a != b) {
          parent[a] = b;
          --components;
        }
      }
    }
  }
  return components;
}

}  // namespace detail

inline bool is_connected(const Eigen::MatrixXd& weights) {
  return weights.rows() >= 1 && detail::count_components(weights) == 1;
}

/// A finite connected graph with vertex measure m > 0 and symmetric edge
/// weights w >= 0 (w_xy > 0 iff x ~ y). Immutable after construction; the
/// vertex order fixed here is the alignment contract for every VertexFunction.
class WeightedGraph {
 public:
  WeightedGraph(Eigen::VectorXd measure, Eigen::MatrixXd weights,
                std::vector<std::string> ids = {})
      : measure_(std::move(measure)), weights_(std::move(weights)), ids_(std::move(ids)) {
    const Index k = measure_.size();
    if (k < 1) throw std::invalid_argument("graph must have at least one vertex");
    if (weights_.rows() != k || weights_.cols() != k)
      throw std::invalid_argument("weight matrix does not match vertex count");
    for (Index x = 0; x < k; ++x) {
      if (!std::isfinite(measure_(x)) || measure_(x) <= 0.0)
        throw std::invalid_argument("vertex measure must be positive and finite");
      if (weights_(x, x) != 0.0) throw std::invalid_argument("self-loops are not allowed");
      for (Index y = 0; y < k; ++y) {
        const double w = weights_(x, y);
        if (!std::isfinite(w) || w < 0.0)
          throw std::invalid_argument("edge weights must be finite and nonnegative");
        if (w != weights_(y, x)) throw std::invalid_argument("edge weights must be symmetric");
      }
    }
    if (!is_connected(weights_)) throw std::invalid_argument("graph is not connected");
    if (ids_.empty()) {
      for (Index x = 0; x < k; ++x) ids_.push_back(std::to_string(x));
    } else if (static_cast<Index>(ids_.size()) != k) {
      throw std::invalid_argument("vertex id list does not match vertex count");
    }
  }

  static WeightedGraph from_edges(Eigen::VectorXd measure, const std::vector<Edge>& edges,
                                  std::vector<std::string> ids = {}) {
    const Index k = measure.size();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, k);
    for (const Edge& e : edges) {
      if (e.u < 0 || e.v < 0 || e.u >= k || e.v >= k)
        throw std::invalid_argument("edge endpoint out of range");
      if (e.u == e.v) throw std::invalid_argument("self-loops are not allowed");
      if (!(e.w > 0.0)) throw std::invalid_argument("edge weight must be positive");
      w(e.u, e.v) = e.w;
      w(e.v, e.u) = e.w;
    }
    return WeightedGraph(std::move(measure), std::move(w), std::move(ids));
  }

  /// Unit-measure graph from edges.
  static WeightedGraph unit(Index k, const std::vector<Edge>& edges) {
    return from_edges(Eigen::VectorXd::Ones(k), edges);
  }

  Index size() const { return measure_.size(); }
  const Eigen::VectorXd& measure() const { return measure_; }
  double measure(Index x) const { return measure_(x); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  double weight(Index x, Index y) const { return weights_(x, y); }
  const std::vector<std::string>& ids() const { return ids_; }

  // |V| = sum of m(x).
  double volume() const { return measure_.sum(); }

  Eigen::VectorXd weighted_degree() const { return weights_.rowwise().sum(); }

  WeightedGraph with_scaled_weights(double s) const {
    if (!(s > 0.0)) throw std::invalid_argument("weight scale must be positive");
    return WeightedGraph(measure_, weights_ * s, ids_);
  }

 private:
  Eigen::VectorXd measure_;
  Eigen::MatrixXd weights_;
  std::vector<std::string> ids_;
};

inline void require_aligned(const WeightedGraph& g, const VertexFunction& u) {
  if (u.size() != g.size()) throw std::invalid_argument("vertex function is not aligned with graph");
}

// L = diag(sum_y w_xy) - W; equals -Delta when m == 1.
inline Eigen::MatrixXd laplacian_matrix(const WeightedGraph& g) {
  Eigen::MatrixXd l = -g.weights();
  l.diagonal() = g.weighted_degree();
  return l;
}

/// Delta u(x) = (1/m(x)) sum_y w_xy (u(y) - u(x)).
inline VertexFunction laplacian(const WeightedGraph& g, const VertexFunction& u) {
  require_aligned(g, u);
  VertexFunction out = g.weights() * u - g.weighted_degree().cwiseProduct(u);
  return out.cwiseQuotient(g.measure());
}

// Delta as a dense matrix acting on vertex functions.
inline Eigen::MatrixXd laplacian_operator(const WeightedGraph& g) {
  return -(g.measure().cwiseInverse().asDiagonal() * laplacian_matrix(g));
}

/// Gamma(u,v)(x) = 1/(2 m(x)) sum_y w_xy (u(y)-u(x)) (v(y)-v(x)).
inline VertexFunction gamma(const WeightedGraph& g, const VertexFunction& u, const VertexFunction& v) {
  require_aligned(g, u);
  require_aligned(g, v);
  const Index k = g.size();
  VertexFunction out(k);
  for (Index x = 0; x < k; ++x) {
    double s = 0.0;
    for (Index y = 0; y < k; ++y) s += g.weight(x, y) * (u(y) - u(x)) * (v(y) - v(x));
    out(x) = 0.5 * s / g.measure(x);
  }
  return out;
}

inline VertexFunction grad_norm(const WeightedGraph& g, const VertexFunction& u) {
  return gamma(g, u, u).cwiseMax(0.0).cwiseSqrt();
}

// Sum over V with the vertex measure: sum_x m(x) f(x).
inline double integrate(const WeightedGraph& g, const VertexFunction& f) {
  require_aligned(g, f);
  return g.measure().dot(f);
}

inline double average(const WeightedGraph& g, const VertexFunction& f) {
  return integrate(g, f) / g.volume();
}

/// l^p norm with the vertex measure; p = infinity gives the sup norm.
inline double lp_norm(const WeightedGraph& g, const VertexFunction& f, double p) {
  require_aligned(g, f);
  if (std::isnan(p) || p < 1.0) throw std::invalid_argument("p must lie in [1, inf]");
  if (std::isinf(p)) return f.cwiseAbs().maxCoeff();
  double s = 0.0;
  for (Index x = 0; x < f.size(); ++x) s += g.measure(x) * std::pow(std::abs(f(x)), p);
  return std::pow(s, 1.0 / p);
}

inline double w1p_norm(const WeightedGraph& g, const VertexFunction& f, double p) {
  return lp_norm(g, f, p) + lp_norm(g, grad_norm(g, f), p);
}

/// Solves Delta w = f - avg(f) with avg_m(w) = 0.
inline VertexFunction solve_poisson_mean_zero(const WeightedGraph& g, const VertexFunction& f) {
  require_aligned(g, f);
  const Index k = g.size();
  if (k == 1) return VertexFunction::Zero(1);
  // Bordered system [L m; m^T 0][w; lambda] = [-M (f - avg f); 0].
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k + 1, k + 1);
  a.topLeftCorner(k, k) = laplacian_matrix(g);
  a.block(0, k, k, 1) = g.measure();
  a.block(k, 0, 1, k) = g.measure().transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  const double mean = average(g, f);
  rhs.head(k) = -(g.measure().array() * (f.array() - mean)).matrix();
  Eigen::VectorXd sol = a.partialPivLu().solve(rhs);
  return sol.head(k);
}

/// Green operator G of Delta on m-mean-zero functions: column j is the
/// mean-zero solution of Delta w = e_j - avg(e_j).
inline Eigen::MatrixXd green_operator(const WeightedGraph& g) {
  const Index k = g.size();
  Eigen::MatrixXd green(k, k);
  for (Index j = 0; j < k; ++j) green.col(j) = solve_poisson_mean_zero(g, VertexFunction::Unit(k, j));
  return green;
}

/// A constant C1 with max u - min u <= C1 max |Delta u| for every u. Taken as
/// twice the infinity-operator norm of the mean-zero Green operator; valid
/// but not claimed minimal.
inline double elliptic_constant(const WeightedGraph& g) {
  if (!is_connected(g.weights())) throw std::invalid_argument("graph is not connected");
  if (g.size() == 1) return 0.0;
  return 2.0 * green_operator(g).cwiseAbs().rowwise().sum().maxCoeff();
}

// max_x sum_y w_xy / m(x): bounds -Delta u(x) <= C u(x) - ... for u >= 0.
inline double max_weighted_degree(const WeightedGraph& g) {
  return g.weighted_degree().cwiseQuotient(g.measure()).maxCoeff();
}

inline double oscillation(const VertexFunction& u) { return u.maxCoeff() - u.minCoeff(); }

}  // namespace expgraph

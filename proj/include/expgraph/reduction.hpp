#pragma once

// Elimination of vertices where every coefficient f_i vanishes. On such a
// vertex the equation is linear, so the unknowns there can be solved for in
// terms of the rest by a Schur complement of the Laplacian matrix.

#include "expgraph/graph.hpp"
#include "expgraph/nonlinearity.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace expgraph {

/// A structural invariant failed on data that passed validation.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Partition {
  std::vector<Index> kept;
  std::vector<Index> removed;
};

inline Partition partition(const WeightedGraph& g, const ExpNonlinearity& eq) {
  require_aligned(g, eq);
  Partition p;
  for (Index x = 0; x < g.size(); ++x) (eq.inert(x) ? p.removed : p.kept).push_back(x);
  if (p.kept.empty()) throw std::invalid_argument("every coefficient vanishes everywhere; nothing to reduce to");
  return p;
}

namespace detail {

inline Eigen::MatrixXd take(const Eigen::MatrixXd& a, const std::vector<Index>& rows,
                            const std::vector<Index>& cols) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = a(rows[i], cols[j]);
  return out;
}

inline VertexFunction take(const VertexFunction& f, const std::vector<Index>& idx) {
  VertexFunction out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = f(idx[i]);
  return out;
}

}  // namespace detail

struct ReductionDiagnostics {
  double r_min_eigenvalue = std::numeric_limits<double>::infinity();
  // Smallest entry of R^{-1}; NaN when not checked (|removed| >= 50).
  double r_inverse_min = std::numeric_limits<double>::quiet_NaN();
  double column_sum_error = 0.0;  // max |colsum(Q^T R^{-1}) + 1|
  double row_sum_error = 0.0;     // max |row sum of the reduced matrix|
  double min_reduced_weight = 0.0;
  double source_conservation_error = 0.0;
  bool connected = true;
  int snapped_weights = 0;
};

/// Result of eliminating the removed vertices. The full system multiplied
/// by m reads L u = m (sum f_i e^{iu} + f0); with L split as [P Q^T; Q R]
/// the kept block becomes (P - Q^T R^{-1} Q) u1 = m1 (sum f_i e^{iu1}) + m1 f0~.
class ReducedSystem {
 public:
  ReducedSystem(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& f0)
      : part_(partition(g, eq)), full_measure_(g.measure()) {
    require_aligned(g, f0);
    const auto& kept = part_.kept;
    const auto& removed = part_.removed;
    const Eigen::MatrixXd l = laplacian_matrix(g);
    const VertexFunction m1 = detail::take(g.measure(), kept);
    const VertexFunction m2 = detail::take(g.measure(), removed);
    f0_kept_ = detail::take(f0, kept);
    f0_removed_ = detail::take(f0, removed);
    p_ = detail::take(l, kept, kept);
    q_ = detail::take(l, removed, kept);
    r_ = detail::take(l, removed, removed);

    std::vector<VertexFunction> coeffs;
    for (int i = 1; i <= eq.degree(); ++i) coeffs.push_back(detail::take(eq.coeff(i), kept));

    std::vector<std::string> ids;
    for (Index x : kept) ids.push_back(g.ids()[static_cast<std::size_t>(x)]);

    Eigen::MatrixXd reduced = p_;
    VertexFunction weighted_source = m1.cwiseProduct(f0_kept_);
    const double total_source = g.measure().dot(f0);
    if (!removed.empty()) {
      llt_.compute(r_);
      if (llt_.info() != Eigen::Success) throw InvariantError("eliminated block R is not positive definite");
      if (removed.size() < 50) {
        diag_.r_min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r_, Eigen::EigenvaluesOnly)
                                     .eigenvalues()
                                     .minCoeff();
        diag_.r_inverse_min = llt_.solve(Eigen::MatrixXd::Identity(r_.rows(), r_.cols())).minCoeff();
      }
      qt_rinv_ = llt_.solve(q_).transpose();
      diag_.column_sum_error = (qt_rinv_.colwise().sum().array() + 1.0).abs().maxCoeff();
      reduced -= qt_rinv_ * q_;
      weighted_source -= qt_rinv_ * m2.cwiseProduct(f0_removed_);
    } else {
      qt_rinv_ = Eigen::MatrixXd::Zero(p_.rows(), 0);
    }
    reduced_matrix_ = 0.5 * (reduced + reduced.transpose());
    diag_.row_sum_error = reduced_matrix_.rowwise().sum().cwiseAbs().maxCoeff();

    // Reduced weights: negated off-diagonals, tiny fill snapped to zero.
    const Index r = reduced_matrix_.rows();
    Eigen::MatrixXd w = -reduced_matrix_;
    w.diagonal().setZero();
    const double scale = w.cwiseAbs().maxCoeff();
    diag_.min_reduced_weight = r > 1 ? w.minCoeff() : 0.0;
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < r; ++j) {
        if (i != j && std::abs(w(i, j)) <= 1e-12 * scale && w(i, j) != 0.0) {
          w(i, j) = 0.0;
          ++diag_.snapped_weights;
        }
      }
    }
    if (diag_.min_reduced_weight < -1e-12 * std::max(scale, 1.0))
      throw InvariantError("reduced graph has a negative edge weight");
    w = w.cwiseMax(0.0);
    diag_.connected = is_connected(w);
    if (!diag_.connected) throw InvariantError("reduced graph is not connected");

    f0_tilde_ = weighted_source.cwiseQuotient(m1);
    diag_.source_conservation_error = std::abs(m1.dot(f0_tilde_) - total_source);

    graph_ = std::make_shared<WeightedGraph>(m1, w, std::move(ids));
    eq_ = std::make_shared<ExpNonlinearity>(std::move(coeffs), 0.0);
  }

  const Partition& part() const { return part_; }
  const WeightedGraph& graph() const { return *graph_; }
  /// Restricted coefficients with constant term 0; the source lives in f0_tilde().
  const ExpNonlinearity& equation() const { return *eq_; }
  const VertexFunction& f0_tilde() const { return f0_tilde_; }
  const Eigen::MatrixXd& p() const { return p_; }
  const Eigen::MatrixXd& q() const { return q_; }
  const Eigen::MatrixXd& r() const { return r_; }
  const Eigen::MatrixXd& qt_rinv() const { return qt_rinv_; }
  const Eigen::MatrixXd& reduced_matrix() const { return reduced_matrix_; }
  const ReductionDiagnostics& diagnostics() const { return diag_; }
  bool identity() const { return part_.removed.empty(); }

  double det_r() const {
    if (identity()) return 1.0;
    const double d = llt_.matrixLLT().diagonal().prod();
    return d * d;
  }

  /// Constant-term form of the reduced equation: the variable source f0~ is
  /// absorbed by normalize_f0. A reduced solution w lifts as w + shift.
  NormalizedSource reduced_instance() const { return normalize_f0(*graph_, f0_tilde_, *eq_); }

  /// u = (u1, R^{-1}(m2 f0_2 - Q u1)) in the original vertex order.
  VertexFunction lift(const VertexFunction& u1) const {
    if (u1.size() != static_cast<Index>(part_.kept.size()))
      throw std::invalid_argument("reduced solution has the wrong length");
    VertexFunction u(full_measure_.size());
    for (std::size_t i = 0; i < part_.kept.size(); ++i) u(part_.kept[i]) = u1(static_cast<Index>(i));
    if (!identity()) {
      const VertexFunction m2 = detail::take(full_measure_, part_.removed);
      const VertexFunction u2 = llt_.solve(m2.cwiseProduct(f0_removed_) - q_ * u1);
      for (std::size_t i = 0; i < part_.removed.size(); ++i) u(part_.removed[i]) = u2(static_cast<Index>(i));
    }
    return u;
  }

 private:
  Partition part_;
  VertexFunction full_measure_;
  VertexFunction f0_kept_, f0_removed_, f0_tilde_;
  Eigen::MatrixXd p_, q_, r_, qt_rinv_, reduced_matrix_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  ReductionDiagnostics diag_;
  std::shared_ptr<WeightedGraph> graph_;
  std::shared_ptr<ExpNonlinearity> eq_;
};

/// Source f0 is the full variable constant term; eq.constant() is added to it.
inline ReducedSystem schur_reduce(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& f0) {
  require_aligned(g, eq);
  return ReducedSystem(g, eq, f0 + VertexFunction::Constant(g.size(), eq.constant()));
}

inline ReducedSystem schur_reduce(const WeightedGraph& g, const ExpNonlinearity& eq) {
  return ReducedSystem(g, eq, VertexFunction::Constant(g.size(), eq.constant()));
}

inline VertexFunction lift_solution(const ReducedSystem& rs, const VertexFunction& u1) { return rs.lift(u1); }

/// Residual of -Delta u = sum f_i e^{iu} + c + f0 written as Delta u + ... .
inline VertexFunction residual(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& u,
                               const VertexFunction& f0) {
  require_aligned(g, f0);
  return residual(g, eq, u) + f0;
}

}  // namespace expgraph

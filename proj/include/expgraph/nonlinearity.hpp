#pragma once

// The exponential nonlinearity F_n(x, y) = sum_{i=1}^n f_i(x) e^{i y} + c,
// the residual map u -> Delta u + F_n(., u), its Jacobian, the energy
// functional, and the case classifiers built from the leading coefficient.

#include "expgraph/graph.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace expgraph {

/// Raised when an exponential would be evaluated with i*u above the guard.
class OverflowError : public std::range_error {
 public:
  using std::range_error::range_error;
};

inline constexpr double kExpGuard = 700.0;

class ExpNonlinearity {
 public:
  /// coeffs[i-1] holds f_i. Trailing identically-zero coefficients are
  /// dropped (n is kept >= 1); truncated() reports whether that happened.
  ExpNonlinearity(std::vector<VertexFunction> coeffs, double c) : coeffs_(std::move(coeffs)), c_(c) {
    if (coeffs_.empty()) throw std::invalid_argument("nonlinearity needs at least f_1");
    const Index k = coeffs_.front().size();
    for (const auto& f : coeffs_) {
      if (f.size() != k) throw std::invalid_argument("coefficient functions differ in length");
      if (!f.allFinite()) throw std::invalid_argument("coefficient functions must be finite");
    }
    if (!std::isfinite(c_)) throw std::invalid_argument("constant term must be finite");
    while (coeffs_.size() > 1 && coeffs_.back().isZero(0.0)) {
      coeffs_.pop_back();
      truncated_ = true;
    }
  }

  int degree() const { return static_cast<int>(coeffs_.size()); }
  Index size() const { return coeffs_.front().size(); }

  /// f_i for 1 <= i <= n.
  const VertexFunction& coeff(int i) const {
    if (i < 1 || i > degree()) throw std::out_of_range("coefficient index out of range");
    return coeffs_[static_cast<std::size_t>(i - 1)];
  }
  double coeff(int i, Index x) const { return coeff(i)(x); }
  const std::vector<VertexFunction>& coeffs() const { return coeffs_; }
  double constant() const { return c_; }
  bool truncated() const { return truncated_; }

  ExpNonlinearity with_constant(double c) const {
    ExpNonlinearity out = *this;
    out.c_ = c;
    return out;
  }

  void check_exponent(double y) const {
    if (static_cast<double>(degree()) * y > kExpGuard)
      throw OverflowError("exponential argument above guard: n*u = " + std::to_string(degree() * y));
  }

  double evaluate(Index x, double y) const {
    check_exponent(y);
    double s = c_;
    for (int i = degree(); i >= 1; --i) s += coeffs_[static_cast<std::size_t>(i - 1)](x) * std::exp(i * y);
    return s;
  }

  // d/dy F_n(x, y) = sum i f_i e^{iy}.
  double derivative(Index x, double y) const {
    check_exponent(y);
    double s = 0.0;
    for (int i = 1; i <= degree(); ++i) s += i * coeffs_[static_cast<std::size_t>(i - 1)](x) * std::exp(i * y);
    return s;
  }

  // sum (1/i) f_i e^{iy} + c y, an antiderivative of F_n in y.
  double primitive(Index x, double y) const {
    check_exponent(y);
    double s = c_ * y;
    for (int i = 1; i <= degree(); ++i) s += coeffs_[static_cast<std::size_t>(i - 1)](x) * std::exp(i * y) / i;
    return s;
  }

  // True when every f_i vanishes at x.
  bool inert(Index x) const {
    for (const auto& f : coeffs_)
      if (f(x) != 0.0) return false;
    return true;
  }

 private:
  std::vector<VertexFunction> coeffs_;
  double c_;
  bool truncated_ = false;
};

inline void require_aligned(const WeightedGraph& g, const ExpNonlinearity& eq) {
  if (eq.size() != g.size()) throw std::invalid_argument("nonlinearity is not aligned with graph");
}

inline VertexFunction evaluate(const ExpNonlinearity& eq, const VertexFunction& u) {
  VertexFunction out(u.size());
  for (Index x = 0; x < u.size(); ++x) out(x) = eq.evaluate(x, u(x));
  return out;
}

/// H(u) = Delta u + F_n(., u). Zero exactly at solutions.
inline VertexFunction residual(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& u) {
  require_aligned(g, eq);
  return laplacian(g, u) + evaluate(eq, u);
}

/// D H(u) = Delta + diag(sum_i i f_i e^{iu}).
inline Eigen::MatrixXd jacobian(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& u) {
  require_aligned(g, eq);
  require_aligned(g, u);
  Eigen::MatrixXd jac = laplacian_operator(g);
  for (Index x = 0; x < u.size(); ++x) jac(x, x) += eq.derivative(x, u(x));
  return jac;
}

/// Hessian of the energy: L - diag(m sum_i i f_i e^{iu}) = -M DH(u).
/// Symmetric; its determinant sign is the local index used for the degree.
inline Eigen::MatrixXd energy_hessian(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& u) {
  require_aligned(g, eq);
  require_aligned(g, u);
  Eigen::MatrixXd h = laplacian_matrix(g);
  for (Index x = 0; x < u.size(); ++x) h(x, x) -= g.measure(x) * eq.derivative(x, u(x));
  return h;
}

/// J(u) = sum_V ( |grad u|^2 / 2 - sum_i f_i e^{iu} / i - c u ).
inline double functional(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& u) {
  require_aligned(g, eq);
  const VertexFunction gam = gamma(g, u, u);
  double s = 0.0;
  for (Index x = 0; x < u.size(); ++x) s += g.measure(x) * (0.5 * gam(x) - eq.primitive(x, u(x)));
  return s;
}

// Gradient of J in the coordinates u(x): -m * H(u).
inline VertexFunction functional_gradient(const WeightedGraph& g, const ExpNonlinearity& eq,
                                          const VertexFunction& u) {
  return -g.measure().cwiseProduct(residual(g, eq, u));
}

// ---------------------------------------------------------------------------
// Classifiers

struct LeadingProfile {
  VertexFunction d;
  std::vector<int> leading_index;  // 0 where every f_i vanishes
  bool q_finite = true;            // q(F_n) < +inf  <=>  d <= 0 everywhere
};

inline LeadingProfile leading_profile(const ExpNonlinearity& eq) {
  LeadingProfile p;
  p.d = VertexFunction::Zero(eq.size());
  p.leading_index.assign(static_cast<std::size_t>(eq.size()), 0);
  for (Index x = 0; x < eq.size(); ++x) {
    for (int i = eq.degree(); i >= 1; --i) {
      if (eq.coeff(i, x) != 0.0) {
        p.d(x) = eq.coeff(i, x);
        p.leading_index[static_cast<std::size_t>(x)] = i;
        break;
      }
    }
  }
  p.q_finite = (p.d.array() <= 0.0).all();
  return p;
}

enum class Structural { a_star, b_star, c_star };
enum class Regime { degree_nonzero, existence_a, existence_b, no_solution };
// The refined four-way split for n == 2.
enum class QuadraticCase { a, b, c, d };

struct CaseLabel {
  Structural structural;
  Regime regime;
  std::optional<QuadraticCase> quadratic;
};

inline std::string to_string(Structural s) {
  switch (s) {
    case Structural::a_star: return "a*";
    case Structural::b_star: return "b*";
    case Structural::c_star: return "c*";
  }
  return "?";
}

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::degree_nonzero: return "degree-nonzero";
    case Regime::existence_a: return "A*";
    case Regime::existence_b: return "B*";
    case Regime::no_solution: return "no-solution";
  }
  return "?";
}

inline std::string to_string(QuadraticCase q) {
  switch (q) {
    case QuadraticCase::a: return "a";
    case QuadraticCase::b: return "b";
    case QuadraticCase::c: return "c";
    case QuadraticCase::d: return "d";
  }
  return "?";
}

// Relative tolerance under which the average of f_1 counts as zero.
inline constexpr double kZeroAverageTol = 1e-12;

inline double f1_average(const WeightedGraph& g, const ExpNonlinearity& eq) {
  return average(g, eq.coeff(1));
}

// Sign of avg(f_1) with the zero band |avg| <= 1e-12 max|f_1|.
inline int f1_average_sign(const WeightedGraph& g, const ExpNonlinearity& eq) {
  const double avg = f1_average(g, eq);
  const double scale = eq.coeff(1).cwiseAbs().maxCoeff();
  if (std::abs(avg) <= kZeroAverageTol * scale || avg == 0.0) return 0;
  return avg > 0.0 ? 1 : -1;
}

inline Structural structural_case(const ExpNonlinearity& eq) {
  const LeadingProfile p = leading_profile(eq);
  if (!p.q_finite) return Structural::a_star;
  for (const auto& f : eq.coeffs())
    if ((f.array() > 0.0).any()) return Structural::c_star;
  return Structural::b_star;
}

inline QuadraticCase quadratic_case(const ExpNonlinearity& eq) {
  if (eq.degree() != 2) throw std::invalid_argument("quadratic case split needs n == 2");
  const auto& f2 = eq.coeff(2);
  const auto& f1 = eq.coeff(1);
  if ((f2.array() > 0.0).any()) return QuadraticCase::a;
  if ((f1.array() <= 0.0).all()) return QuadraticCase::b;
  for (Index x = 0; x < f2.size(); ++x)
    if (f2(x) == 0.0 && f1(x) > 0.0) return QuadraticCase::c;
  return QuadraticCase::d;
}

/// Predicted degree: +1 if q < inf and (c > 0 or c = 0, avg f_1 > 0);
/// -1 if q = inf and (c < 0 or c = 0, avg f_1 < 0); 0 otherwise.
/// Undefined when c = 0 and avg f_1 = 0.
inline std::optional<int> predicted_degree(const WeightedGraph& g, const ExpNonlinearity& eq) {
  require_aligned(g, eq);
  const double c = eq.constant();
  const int s1 = f1_average_sign(g, eq);
  if (c == 0.0 && s1 == 0) return std::nullopt;
  const bool q_finite = leading_profile(eq).q_finite;
  const int sign = c != 0.0 ? (c > 0.0 ? 1 : -1) : s1;
  if (q_finite && sign > 0) return 1;
  if (!q_finite && sign < 0) return -1;
  return 0;
}

inline CaseLabel classify(const WeightedGraph& g, const ExpNonlinearity& eq) {
  CaseLabel label{structural_case(eq), Regime::degree_nonzero, std::nullopt};
  if (eq.degree() == 2) label.quadratic = quadratic_case(eq);
  const auto predicted = predicted_degree(g, eq);
  const double c = eq.constant();
  if (predicted && *predicted != 0) {
    label.regime = Regime::degree_nonzero;
  } else if (label.structural == Structural::b_star) {
    // c > 0 in b* always has degree 1, so only c <= 0 lands here.
    label.regime = Regime::no_solution;
  } else if (label.structural == Structural::a_star) {
    label.regime = Regime::existence_a;
  } else {
    label.regime = c > 0.0 ? Regime::degree_nonzero : Regime::existence_b;
  }
  return label;
}

/// Moves a variable source f0 into the unknown: with -Delta v = f0 - avg(f0)
/// and avg_m(v) = 0, u solves -Delta u = sum f_i e^{iu} + f0 iff w = u - v
/// solves -Delta w = sum f_i e^{iv} e^{iw} + avg(f0).
struct NormalizedSource {
  ExpNonlinearity equation;
  VertexFunction shift;  // v; original solution is w + v
};

inline NormalizedSource normalize_f0(const WeightedGraph& g, const VertexFunction& f0,
                                     const ExpNonlinearity& eq) {
  require_aligned(g, f0);
  require_aligned(g, eq);
  // Delta v = -(f0 - avg f0)
  VertexFunction v = solve_poisson_mean_zero(g, -f0);
  std::vector<VertexFunction> coeffs;
  for (int i = 1; i <= eq.degree(); ++i)
    coeffs.push_back(eq.coeff(i).cwiseProduct((static_cast<double>(i) * v).array().exp().matrix()));
  return {ExpNonlinearity(std::move(coeffs), average(g, f0)), std::move(v)};
}

}  // namespace expgraph

#pragma once

// Hypotheses of the uniform a-priori bound: coefficient size at most K,
// |c| >= 1/K (or c = 0 and |avg f_1| >= 1/K), and a witness vertex whose
// leading coefficient is at least 1/K in absolute value.

#include "expgraph/graph.hpp"
#include "expgraph/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>

namespace expgraph {

enum class BoundBranch { positive_leading, negative_leading };

// Refined witness condition for n == 2.
enum class QuadraticBound { a, b, c };

struct BoundednessHypothesis {
  double k = 0.0;
  Index witness = 0;
  BoundBranch branch = BoundBranch::positive_leading;
  std::optional<QuadraticBound> quadratic;
};

struct HypothesisViolation {
  std::string reason;
};

using HypothesisCheck = std::variant<BoundednessHypothesis, HypothesisViolation>;

inline double coefficient_size(const ExpNonlinearity& eq) {
  double s = std::abs(eq.constant());
  for (const auto& f : eq.coeffs()) s += f.cwiseAbs().maxCoeff();
  return s;
}

namespace detail {

inline bool all_nonpositive_at(const ExpNonlinearity& eq, Index x) {
  for (const auto& f : eq.coeffs())
    if (f(x) > 0.0) return false;
  return true;
}

inline std::optional<QuadraticBound> quadratic_bound(const ExpNonlinearity& eq, Index x0, double k) {
  if (eq.degree() != 2) return std::nullopt;
  const auto& f2 = eq.coeff(2);
  const auto& f1 = eq.coeff(1);
  if (f2(x0) >= 1.0 / k) return QuadraticBound::a;
  if ((f2.array() > 0.0).any()) return std::nullopt;
  if (f2(x0) == 0.0 && f1(x0) >= 1.0 / k) return QuadraticBound::b;
  if (f2(x0) <= -1.0 / k) {
    for (Index x = 0; x < f2.size(); ++x)
      if (!(f1(x) <= 0.0 || f2(x) <= -1.0 / k)) return std::nullopt;
    return QuadraticBound::c;
  }
  return std::nullopt;
}

}  // namespace detail

inline HypothesisCheck check_bound_hypothesis(const WeightedGraph& g, const ExpNonlinearity& eq, double k) {
  require_aligned(g, eq);
  if (!(k > 0.0)) return HypothesisViolation{"K must be positive"};
  if (coefficient_size(eq) > k) return HypothesisViolation{"sum of max |f_i| plus |c| exceeds K"};
  const double c = eq.constant();
  if (c != 0.0) {
    if (std::abs(c) < 1.0 / k) return HypothesisViolation{"|c| < 1/K"};
  } else if (std::abs(f1_average(g, eq)) < 1.0 / k) {
    return HypothesisViolation{"c = 0 and |avg f_1| < 1/K"};
  }
  const LeadingProfile p = leading_profile(eq);
  Index best = 0;
  p.d.maxCoeff(&best);
  if (p.d(best) >= 1.0 / k)
    return BoundednessHypothesis{k, best, BoundBranch::positive_leading, detail::quadratic_bound(eq, best, k)};
  Index low = 0;
  p.d.minCoeff(&low);
  if (p.d(low) > -1.0 / k) return HypothesisViolation{"no vertex with |D| >= 1/K"};
  for (Index x = 0; x < g.size(); ++x) {
    if (!(detail::all_nonpositive_at(eq, x) || p.d(x) <= -1.0 / k))
      return HypothesisViolation{"vertex " + g.ids()[static_cast<std::size_t>(x)] +
                                 " has a positive coefficient and D > -1/K"};
  }
  return BoundednessHypothesis{k, low, BoundBranch::negative_leading, detail::quadratic_bound(eq, low, k)};
}

/// Smallest K for which check_bound_hypothesis passes, if any.
inline std::optional<double> minimal_bound_constant(const WeightedGraph& g, const ExpNonlinearity& eq) {
  require_aligned(g, eq);
  double k = coefficient_size(eq);
  const double c = eq.constant();
  if (c != 0.0) {
    k = std::max(k, 1.0 / std::abs(c));
  } else {
    if (f1_average_sign(g, eq) == 0) return std::nullopt;
    k = std::max(k, 1.0 / std::abs(f1_average(g, eq)));
  }
  const LeadingProfile p = leading_profile(eq);
  double witness = std::numeric_limits<double>::infinity();
  if (p.d.maxCoeff() > 0.0) witness = 1.0 / p.d.maxCoeff();
  // Negative branch: every vertex carrying a positive coefficient needs D < 0.
  double negative = p.d.minCoeff() < 0.0 ? 1.0 / -p.d.minCoeff() : std::numeric_limits<double>::infinity();
  for (Index x = 0; x < g.size() && std::isfinite(negative); ++x) {
    if (detail::all_nonpositive_at(eq, x)) continue;
    negative = p.d(x) < 0.0 ? std::max(negative, 1.0 / -p.d(x)) : std::numeric_limits<double>::infinity();
  }
  witness = std::min(witness, negative);
  if (!std::isfinite(witness)) return std::nullopt;
  return std::max(k, witness);
}

}  // namespace expgraph

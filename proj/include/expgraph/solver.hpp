#pragma once

// Damped Newton, deflated multistart enumeration of H^{-1}(0) in a box, and
// minimization of the energy between an ordered sub/supersolution pair.

#include "expgraph/graph.hpp"
#include "expgraph/nonlinearity.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace expgraph {

struct SolverConfig {
  double tol = 1e-10;
  int max_iter = 200;
  double damping = 0.5;
  double box_radius = 20.0;
  int budget = 500;
  double deflation_radius = 1e-3;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (max_iter <= 0) throw std::invalid_argument("max_iter must be positive");
    if (!(damping > 0.0 && damping < 1.0)) throw std::invalid_argument("damping must lie in (0, 1)");
    if (!(box_radius > 0.0)) throw std::invalid_argument("box radius must be positive");
    if (budget <= 0) throw std::invalid_argument("budget must be positive");
    if (!(deflation_radius > 0.0)) throw std::invalid_argument("deflation radius must be positive");
    if (!(deflation_radius < box_radius)) throw std::invalid_argument("deflation radius must be below the box radius");
  }
};

struct Solution {
  VertexFunction u;
  double residual_norm = std::numeric_limits<double>::infinity();
  int jac_sign = 0;
  bool certified = false;
};

struct SolutionSet {
  std::vector<Solution> solutions;
  bool exhaustive = false;
  int starts_used = 0;
  int last_discovery = -1;  // index of the start that produced the last new root
  int overflow_events = 0;
  int outside_box = 0;  // roots found with |u|_inf > R, excluded from solutions

  std::size_t size() const { return solutions.size(); }
  bool empty() const { return solutions.empty(); }
};

inline double inf_norm(const VertexFunction& u) { return u.size() ? u.cwiseAbs().maxCoeff() : 0.0; }

/// Sign of det of the energy Hessian L - diag(m sum i f_i e^{iu}); 0 when
/// |det| <= 1e-12 |S|_inf^k, evaluated in logs from the LU factors.
inline int hessian_sign(const Eigen::MatrixXd& s) {
  const Index k = s.rows();
  if (k == 0) return 1;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(s);
  const Eigen::VectorXd diag = lu.matrixLU().diagonal();
  double log_det = 0.0;
  int sign = static_cast<int>(lu.permutationP().determinant());
  for (Index i = 0; i < k; ++i) {
    if (diag(i) == 0.0 || !std::isfinite(diag(i))) return 0;
    log_det += std::log(std::abs(diag(i)));
    if (diag(i) < 0.0) sign = -sign;
  }
  const double norm = s.cwiseAbs().rowwise().sum().maxCoeff();
  if (!(norm > 0.0)) return 0;
  if (log_det <= std::log(1e-12) + static_cast<double>(k) * std::log(norm)) return 0;
  return sign;
}

inline int jacobian_sign(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& u) {
  return hessian_sign(energy_hessian(g, eq, u));
}

namespace detail {

inline std::optional<VertexFunction> safe_residual(const WeightedGraph& g, const ExpNonlinearity& eq,
                                                   const VertexFunction& u) {
  try {
    VertexFunction h = residual(g, eq, u);
    if (!h.allFinite()) return std::nullopt;
    return h;
  } catch (const OverflowError&) {
    return std::nullopt;
  }
}

inline double half_sq(const VertexFunction& h) { return 0.5 * h.squaredNorm(); }

inline constexpr double kStepCap = 10.0;
inline constexpr double kArmijo = 1e-4;

// Newton direction, capped in the sup norm. A singular Jacobian gets the
// minimum-norm least-squares step instead.
inline std::optional<VertexFunction> newton_direction(const WeightedGraph& g, const ExpNonlinearity& eq,
                                                      const VertexFunction& u, const VertexFunction& h) {
  const Eigen::MatrixXd jac = jacobian(g, eq, u);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
  VertexFunction d = lu.isInvertible() ? VertexFunction(lu.solve(-h))
                                       : VertexFunction(jac.completeOrthogonalDecomposition().solve(-h));
  if (d.squaredNorm() == 0.0) return std::nullopt;
  if (!d.allFinite()) return std::nullopt;
  const double big = inf_norm(d);
  if (big > kStepCap) d *= kStepCap / big;
  return d;
}

inline Solution finish(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& u, double res,
                       double tol) {
  Solution s;
  s.u = u;
  s.residual_norm = res;
  s.certified = res <= tol;
  try {
    s.jac_sign = jacobian_sign(g, eq, u);
  } catch (const OverflowError&) {
    s.jac_sign = 0;
    s.certified = false;
  }
  return s;
}

}  // namespace detail

/// Damped Newton with Armijo backtracking on |H|^2 / 2. Empty on failure.
inline std::optional<Solution> newton_solve(const WeightedGraph& g, const ExpNonlinearity& eq,
                                            const VertexFunction& u0, const SolverConfig& cfg) {
  require_aligned(g, eq);
  require_aligned(g, u0);
  cfg.validate();
  VertexFunction u = u0;
  auto h = detail::safe_residual(g, eq, u);
  if (!h) return std::nullopt;
  for (int it = 0; it <= cfg.max_iter; ++it) {
    const double res = inf_norm(*h);
    if (res <= cfg.tol) return detail::finish(g, eq, u, res, cfg.tol);
    if (it == cfg.max_iter) break;
    std::optional<VertexFunction> d;
    try {
      d = detail::newton_direction(g, eq, u, *h);
    } catch (const OverflowError&) {
      return std::nullopt;
    }
    if (!d) return std::nullopt;
    const double phi = detail::half_sq(*h);
    double alpha = 1.0;
    bool moved = false;
    while (alpha > 1e-12) {
      const VertexFunction trial = u + alpha * *d;
      auto ht = detail::safe_residual(g, eq, trial);
      if (ht && detail::half_sq(*ht) <= (1.0 - 2.0 * detail::kArmijo * alpha) * phi) {
        u = trial;
        h = std::move(ht);
        moved = true;
        break;
      }
      alpha *= cfg.damping;
    }
    if (!moved) {
      // Stalled at roundoff level near a root: accept what we have if it is close.
      if (res <= 10.0 * cfg.tol) return detail::finish(g, eq, u, res, cfg.tol);
      return std::nullopt;
    }
  }
  return std::nullopt;
}

namespace detail {

// Deflation operator M(u) = prod_j (|u - r_j|_2^{-2} + 1); returns grad log M.
inline VertexFunction deflation_log_gradient(const VertexFunction& u, const std::vector<VertexFunction>& roots,
                                             double* log_m) {
  VertexFunction grad = VertexFunction::Zero(u.size());
  double lm = 0.0;
  for (const auto& r : roots) {
    const VertexFunction diff = u - r;
    const double d2 = diff.squaredNorm();
    if (d2 == 0.0) {
      lm = std::numeric_limits<double>::infinity();
      continue;
    }
    const double factor = 1.0 / d2 + 1.0;
    lm += std::log(factor);
    grad += (-2.0 / (d2 * d2) / factor) * diff;
  }
  if (log_m) *log_m = lm;
  return grad;
}

// Newton on the deflated map M(u) H(u); converges to roots not yet in `roots`.
inline std::optional<VertexFunction> deflated_newton(const WeightedGraph& g, const ExpNonlinearity& eq,
                                                     const VertexFunction& u0,
                                                     const std::vector<VertexFunction>& roots,
                                                     const SolverConfig& cfg) {
  VertexFunction u = u0;
  auto h = safe_residual(g, eq, u);
  if (!h) return std::nullopt;
  // Loose target; the undeflated polish tightens it.
  const double target = std::max(cfg.tol, 1e-8);
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (inf_norm(*h) <= target) return u;
    std::optional<VertexFunction> dh;
    try {
      dh = newton_direction(g, eq, u, *h);
    } catch (const OverflowError&) {
      return std::nullopt;
    }
    if (!dh) return std::nullopt;
    double log_m = 0.0;
    const VertexFunction glm = deflation_log_gradient(u, roots, &log_m);
    if (!std::isfinite(log_m)) return std::nullopt;
    const double denom = 1.0 - glm.dot(*dh);
    VertexFunction d = *dh;
    if (std::abs(denom) > 1e-14) d /= denom;
    const double big = inf_norm(d);
    if (!std::isfinite(big)) return std::nullopt;
    if (big > kStepCap) d *= kStepCap / big;
    // Merit log |M H|_2, compared in logs.
    const double merit = log_m + std::log(std::max(h->norm(), 1e-300));
    double alpha = 1.0;
    bool moved = false;
    while (alpha > 1e-10) {
      const VertexFunction trial = u + alpha * d;
      auto ht = safe_residual(g, eq, trial);
      if (ht) {
        double lt = 0.0;
        deflation_log_gradient(trial, roots, &lt);
        const double mt = lt + std::log(std::max(ht->norm(), 1e-300));
        if (std::isfinite(mt) && mt <= merit + std::log1p(-kArmijo * alpha)) {
          u = trial;
          h = std::move(ht);
          moved = true;
          break;
        }
      }
      alpha *= cfg.damping;
    }
    if (!moved) return std::nullopt;
  }
  return std::nullopt;
}

inline bool lex_less(const VertexFunction& a, const VertexFunction& b) {
  for (Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

inline std::vector<VertexFunction> start_points(Index k, const SolverConfig& cfg) {
  std::vector<VertexFunction> starts;
  starts.push_back(VertexFunction::Zero(k));
  for (double base = 0.01; base <= cfg.box_radius; base *= std::sqrt(10.0)) {
    starts.push_back(VertexFunction::Constant(k, base));
    starts.push_back(VertexFunction::Constant(k, -base));
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double radii[3] = {cfg.box_radius, cfg.box_radius / 4.0, cfg.box_radius / 16.0};
  int i = 0;
  while (static_cast<int>(starts.size()) < cfg.budget) {
    VertexFunction u(k);
    for (Index x = 0; x < k; ++x) u(x) = radii[i % 3] * unit(rng);
    starts.push_back(std::move(u));
    ++i;
  }
  starts.resize(static_cast<std::size_t>(cfg.budget), VertexFunction::Zero(k));
  return starts;
}

}  // namespace detail

/// Deflated multistart over the box |u|_inf <= R. Heuristic: `exhaustive`
/// means no new root turned up in the second half of the starts.
inline SolutionSet multistart_enumerate(const WeightedGraph& g, const ExpNonlinearity& eq, const SolverConfig& cfg,
                                        const std::vector<VertexFunction>& extra_starts = {}) {
  require_aligned(g, eq);
  cfg.validate();
  SolutionSet out;
  std::vector<VertexFunction> roots;  // every root found, inside the box or not
  std::vector<VertexFunction> starts = extra_starts;
  for (auto& s : detail::start_points(g.size(), cfg)) starts.push_back(std::move(s));
  const auto is_new = [&](const VertexFunction& u) {
    for (const auto& r : roots)
      if (inf_norm(u - r) < cfg.deflation_radius) return false;
    return true;
  };
  int index = 0;
  for (const auto& start : starts) {
    if (!detail::safe_residual(g, eq, start)) {
      ++out.overflow_events;
      ++index;
      continue;
    }
    // Keep deflating from the same start until it stops producing roots.
    for (int round = 0; round < 8; ++round) {
      auto found = detail::deflated_newton(g, eq, start, roots, cfg);
      if (!found) break;
      auto polished = newton_solve(g, eq, *found, cfg);
      if (!polished) break;
      if (!is_new(polished->u)) break;
      roots.push_back(polished->u);
      if (inf_norm(polished->u) <= cfg.box_radius) {
        out.solutions.push_back(std::move(*polished));
        out.last_discovery = index;
      } else {
        ++out.outside_box;
      }
    }
    ++index;
  }
  out.starts_used = index;
  out.exhaustive = out.last_discovery < index / 2;
  std::sort(out.solutions.begin(), out.solutions.end(), [](const Solution& a, const Solution& b) {
    const double ma = a.u.minCoeff(), mb = b.u.minCoeff();
    if (ma != mb) return ma < mb;
    return detail::lex_less(a.u, b.u);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Sub- and supersolutions

namespace detail {

// Sign-tolerant comparison of -Delta phi against F(phi): returns H = Delta phi + F
// together with the per-vertex slack, or nothing on overflow.
struct Comparison {
  VertexFunction h;
  VertexFunction slack;
};

inline std::optional<Comparison> compare(const WeightedGraph& g, const ExpNonlinearity& eq,
                                         const VertexFunction& phi) {
  require_aligned(g, eq);
  require_aligned(g, phi);
  try {
    const VertexFunction lhs = -laplacian(g, phi);
    const VertexFunction rhs = evaluate(eq, phi);
    if (!rhs.allFinite()) return std::nullopt;
    Comparison c{rhs - lhs, 1e-12 * (VertexFunction::Ones(phi.size()) + lhs.cwiseAbs() + rhs.cwiseAbs())};
    return c;
  } catch (const OverflowError&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// -Delta phi <= F(phi) pointwise, up to slack 1e-12 (1 + |lhs| + |rhs|).
inline bool check_sub(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& phi) {
  auto c = detail::compare(g, eq, phi);
  return c && (c->h.array() >= -c->slack.array()).all();
}

/// -Delta phi >= F(phi) pointwise, up to the same slack.
inline bool check_super(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& phi) {
  auto c = detail::compare(g, eq, phi);
  return c && (c->h.array() <= c->slack.array()).all();
}

struct OrderedPairCheck {
  bool ordered = false;
  bool sub = false;
  bool super = false;
  bool ok() const { return ordered && sub && super; }
};

inline OrderedPairCheck check_ordered_pair(const WeightedGraph& g, const ExpNonlinearity& eq,
                                           const VertexFunction& phi1, const VertexFunction& phi2) {
  require_aligned(g, phi1);
  require_aligned(g, phi2);
  return {(phi1.array() <= phi2.array()).all(), check_sub(g, eq, phi1), check_super(g, eq, phi2)};
}

/// Smallest M = 2^j >= 1 (with n M <= 700) such that -M is a subsolution.
inline std::optional<double> constant_subsolution(const WeightedGraph& g, const ExpNonlinearity& eq,
                                                  double at_least = 1.0) {
  for (double m = std::max(1.0, at_least); eq.degree() * m <= kExpGuard; m *= 2.0)
    if (check_sub(g, eq, VertexFunction::Constant(g.size(), -m))) return m;
  return std::nullopt;
}

/// Smallest M = 2^j >= 1 (with n M <= 700) such that +M is a supersolution.
inline std::optional<double> constant_supersolution(const WeightedGraph& g, const ExpNonlinearity& eq,
                                                    double at_least = 1.0) {
  for (double m = std::max(1.0, at_least); eq.degree() * m <= kExpGuard; m *= 2.0)
    if (check_super(g, eq, VertexFunction::Constant(g.size(), m))) return m;
  return std::nullopt;
}

/// Minimizes J over {phi1 <= u <= phi2} by diagonally scaled projected
/// gradient with Armijo search, trying a Newton polish every 50 steps.
/// Throws std::invalid_argument when the pair fails its pre-check and
/// std::domain_error when the iterate stalls on the boundary with a nonzero
/// residual.
inline Solution minimize_boxed(const WeightedGraph& g, const ExpNonlinearity& eq, const VertexFunction& phi1,
                               const VertexFunction& phi2, const SolverConfig& cfg, int max_steps = 20000) {
  cfg.validate();
  const OrderedPairCheck pre = check_ordered_pair(g, eq, phi1, phi2);
  if (!pre.ordered) throw std::invalid_argument("lower barrier exceeds upper barrier");
  if (!pre.sub) throw std::invalid_argument("lower barrier is not a subsolution");
  if (!pre.super) throw std::invalid_argument("upper barrier is not a supersolution");

  const auto clamp = [&](const VertexFunction& u) { return u.cwiseMax(phi1).cwiseMin(phi2); };
  const auto inside = [&](const VertexFunction& u) {
    const double slack = 1e-8;
    return (u.array() >= phi1.array() - slack).all() && (u.array() <= phi2.array() + slack).all();
  };
  const VertexFunction degree = g.weighted_degree();

  VertexFunction u = clamp(0.5 * (phi1 + phi2));
  double step = 1.0;
  for (int it = 0; it < max_steps; ++it) {
    const VertexFunction h = residual(g, eq, u);
    if (inf_norm(h) <= cfg.tol) return detail::finish(g, eq, u, inf_norm(h), cfg.tol);
    if (it > 0 && it % 50 == 0) {
      auto polished = newton_solve(g, eq, u, cfg);
      if (polished && inside(polished->u)) {
        polished->u = clamp(polished->u);
        polished->residual_norm = inf_norm(residual(g, eq, polished->u));
        polished->certified = polished->residual_norm <= cfg.tol;
        if (polished->certified) return *polished;
      }
    }
    // grad J = -m H; scale by a positive diagonal bound on the Hessian.
    VertexFunction scale(u.size());
    for (Index x = 0; x < u.size(); ++x)
      scale(x) = degree(x) + g.measure(x) * (1.0 + std::abs(eq.derivative(x, u(x))));
    const VertexFunction grad = -g.measure().cwiseProduct(h);
    const VertexFunction direction = -grad.cwiseQuotient(scale);
    const VertexFunction full = clamp(u + direction) - u;
    if (inf_norm(full) <= 1e-15 * (1.0 + inf_norm(u))) {
      throw std::domain_error("minimizer pinned to the barrier with nonzero residual");
    }
    const double j0 = functional(g, eq, u);
    step = std::min(1.0, 2.0 * step);
    bool moved = false;
    while (step > 1e-14) {
      const VertexFunction trial = clamp(u + step * direction);
      const double jt = functional(g, eq, trial);
      if (jt <= j0 + detail::kArmijo * grad.dot(trial - u)) {
        u = trial;
        moved = true;
        break;
      }
      step *= cfg.damping;
    }
    if (!moved) {
      auto polished = newton_solve(g, eq, u, cfg);
      if (polished && inside(polished->u)) return *polished;
      throw std::domain_error("projected gradient stalled before reaching a solution");
    }
  }
  throw std::domain_error("projected gradient did not converge within the step limit");
}

}  // namespace expgraph

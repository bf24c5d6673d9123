#pragma once

// Constructive existence: small-c barriers, the auxiliary equation
// -Delta u = H e^u and the threshold functions built from it, scanning the
// solvability threshold in c, multiplicity search and nonexistence
// certificates.

#include "expgraph/graph.hpp"
#include "expgraph/hypothesis.hpp"
#include "expgraph/nonlinearity.hpp"
#include "expgraph/solver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace expgraph {

// ---------------------------------------------------------------------------
// Small-c barrier  phi = a v + ln a  with  -Delta v = sum a^{i-1} (f_i - avg f_i)

enum class ExistenceCase { a, b };  // a: avg f_1 < 0, supersolution; b: avg f_1 > 0, subsolution

struct SmallCBarrier {
  ExistenceCase kind = ExistenceCase::a;
  VertexFunction phi;
  double a = 1.0;
  int halvings = 0;
  // Admissible constants: (lo, hi) with lo < hi; one endpoint is 0.
  double c_lo = 0.0;
  double c_hi = 0.0;
  bool verified = false;  // barrier check passed at the middle of the range

  double c_mid() const { return 0.5 * (c_lo + c_hi); }
};

inline SmallCBarrier build_small_c_supersolution(const WeightedGraph& g, const ExpNonlinearity& eq, double a = 1.0) {
  require_aligned(g, eq);
  if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("a must lie in (0, 1]");
  const int sign = f1_average_sign(g, eq);
  if (sign == 0) throw std::invalid_argument("avg f_1 must be nonzero");
  const double f1bar = f1_average(g, eq);
  SmallCBarrier out;
  out.kind = sign < 0 ? ExistenceCase::a : ExistenceCase::b;
  const int n = eq.degree();
  for (int halvings = 0; halvings <= 60; ++halvings, a *= 0.5) {
    VertexFunction h = VertexFunction::Zero(g.size());
    for (int i = 1; i <= n; ++i) h += std::pow(a, i - 1) * eq.coeff(i);
    // Delta v = -(h - avg h)
    const VertexFunction v = solve_poisson_mean_zero(g, -h);
    VertexFunction e = VertexFunction::Zero(g.size());
    for (int i = 1; i <= n; ++i) {
      const double ai = std::pow(a, i - 1);
      e += ai * eq.coeff(i).cwiseProduct(((i * a) * v).array().exp().matrix() - VertexFunction::Ones(g.size()));
      if (i >= 2) e.array() += ai * average(g, eq.coeff(i));
    }
    if (inf_norm(e) > 0.5 * std::abs(f1bar)) continue;
    out.a = a;
    out.halvings = halvings;
    out.phi = (a * v).array() + std::log(a);
    const double edge = -0.5 * a * f1bar;
    out.c_lo = std::min(0.0, edge);
    out.c_hi = std::max(0.0, edge);
    const ExpNonlinearity at_mid = eq.with_constant(out.c_mid());
    out.verified = out.kind == ExistenceCase::a ? check_super(g, at_mid, out.phi) : check_sub(g, at_mid, out.phi);
    return out;
  }
  throw std::runtime_error("barrier condition not met after 60 halvings of a");
}

/// Solves eq at constant c between the small-c barrier and a constant
/// barrier on the other side. Returns nothing if no constant barrier exists.
inline std::optional<Solution> solve_between_barriers(const WeightedGraph& g, const ExpNonlinearity& eq,
                                                      const VertexFunction& barrier, ExistenceCase kind,
                                                      const SolverConfig& cfg) {
  if (kind == ExistenceCase::a) {
    const auto m = constant_subsolution(g, eq, std::max(1.0, -barrier.minCoeff() + 1.0));
    if (!m) return std::nullopt;
    return minimize_boxed(g, eq, VertexFunction::Constant(g.size(), -*m), barrier, cfg);
  }
  const auto m = constant_supersolution(g, eq, std::max(1.0, barrier.maxCoeff() + 1.0));
  if (!m) return std::nullopt;
  return minimize_boxed(g, eq, barrier, VertexFunction::Constant(g.size(), *m), cfg);
}

// ---------------------------------------------------------------------------
// Auxiliary equation -Delta u = H e^u

struct AuxKWProblem {
  VertexFunction h;
  VertexFunction u_star;
  double bound = std::numeric_limits<double>::quiet_NaN();  // realized |u*|_inf
  bool solved = false;
};

inline AuxKWProblem solve_aux_kw(const WeightedGraph& g, const VertexFunction& h, const SolverConfig& cfg = {}) {
  require_aligned(g, h);
  if (!((h.array() > 0.0).any() && (h.array() < 0.0).any())) throw std::invalid_argument("H must change sign");
  if (!(average(g, h) < 0.0)) throw std::invalid_argument("avg H must be negative");
  AuxKWProblem out;
  out.h = h;
  const ExpNonlinearity eq({h}, 0.0);
  SolverConfig c = cfg;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const SolutionSet set = multistart_enumerate(g, eq, c);
    for (const auto& s : set.solutions) {
      if (!s.certified) continue;
      if (!out.solved || s.u.minCoeff() > out.u_star.minCoeff()) {
        out.u_star = s.u;
        out.solved = true;
      }
    }
    if (out.solved) break;
    c.box_radius *= 2.0;
    c.budget *= 2;
  }
  if (out.solved) out.bound = inf_norm(out.u_star);
  return out;
}

/// H = f1 + max f1 / (2 m) at the maximizer x0 of f1 and
/// f1 - (sum m f1 + max f1) / ((k - 1) m) elsewhere; sum m H = -max f1 / 2.
inline VertexFunction aux_weight_case_a(const WeightedGraph& g, const VertexFunction& f1) {
  require_aligned(g, f1);
  const Index k = g.size();
  if (k < 2) throw std::invalid_argument("needs at least two vertices");
  Index x0 = 0;
  const double top = f1.maxCoeff(&x0);
  const double total = integrate(g, f1);
  VertexFunction h(k);
  for (Index x = 0; x < k; ++x)
    h(x) = x == x0 ? f1(x) + top / (2.0 * g.measure(x))
                   : f1(x) - (total + top) / (static_cast<double>(k - 1) * g.measure(x));
  return h;
}

inline VertexFunction aux_weight_case_d(const VertexFunction& f1) {
  return f1.array() - 0.5 * f1.maxCoeff();
}

// H = f1 - g with g = 0 at x0 and a constant gamma elsewhere, chosen so that
// avg g exceeds avg f1.
inline VertexFunction aux_weight_case_c(const WeightedGraph& g, const VertexFunction& f1, Index x0) {
  require_aligned(g, f1);
  if (g.size() < 2) throw std::invalid_argument("needs at least two vertices");
  const double rest = g.volume() - g.measure(x0);
  const double gamma = std::max(0.0, 2.0 * integrate(g, f1) / rest) + f1.cwiseAbs().maxCoeff() + 1.0;
  VertexFunction h = f1.array() - gamma;
  h(x0) = f1(x0);
  return h;
}

enum class FStarRegime { a_star, b_star };

struct FStar {
  VertexFunction f_star;
  double epsilon0 = 0.0;
  double epsilon = 0.0;       // admissible |c| bound
  VertexFunction barrier;     // u* - k, a super (A*) or sub (B*) solution
};

/// f_j^* = e^{jk} e^{-(j-1)u*} (H -+ eps0 - sum_{i != j} f_i e^{-ik} e^{(i-1)u*}).
inline FStar build_fstar(const WeightedGraph& g, const ExpNonlinearity& eq, int j, double k, FStarRegime regime,
                         const AuxKWProblem& aux) {
  require_aligned(g, eq);
  if (!aux.solved) throw std::invalid_argument("auxiliary problem is not solved");
  const int n = eq.degree();
  if (regime == FStarRegime::a_star && (j < 2 || j > n)) throw std::invalid_argument("index must lie in [2, n]");
  if (regime == FStarRegime::b_star && (j < 2 || j > n - 1)) throw std::invalid_argument("index must lie in [2, n-1]");
  const VertexFunction& u = aux.u_star;
  const VertexFunction& h = aux.h;
  FStar out;
  double small = std::numeric_limits<double>::infinity();
  for (Index x = 0; x < h.size(); ++x)
    if (h(x) != 0.0) small = std::min(small, std::abs(h(x)));
  out.epsilon0 = 0.5 * small;
  out.epsilon = out.epsilon0 * std::exp(u.minCoeff());
  VertexFunction inner = h.array() + (regime == FStarRegime::a_star ? -out.epsilon0 : out.epsilon0);
  for (int i = 1; i <= n; ++i) {
    if (i == j) continue;
    inner -= std::exp(-i * k) * eq.coeff(i).cwiseProduct(((i - 1) * u).array().exp().matrix());
  }
  out.f_star = std::exp(j * k) * (-(j - 1) * u).array().exp() * inner.array();
  out.barrier = u.array() - k;
  return out;
}

// ---------------------------------------------------------------------------
// Nonexistence

enum class Verdict { no_solution_certified, unknown };

struct NonexistenceReport {
  Verdict verdict = Verdict::unknown;
  std::string reason;
  bool certified() const { return verdict == Verdict::no_solution_certified; }
};

/// sup over z > 0 of sum f_i z^i + c at vertex x (+inf when unbounded).
inline double polynomial_sup(const ExpNonlinearity& eq, Index x) {
  const int n = eq.degree();
  int top = 0;
  for (int i = n; i >= 1; --i)
    if (eq.coeff(i, x) != 0.0) {
      top = i;
      break;
    }
  const double c = eq.constant();
  if (top == 0) return c;
  if (eq.coeff(top, x) > 0.0) return std::numeric_limits<double>::infinity();
  if (top == 1) return c;
  if (top == 2) {
    const double f1 = eq.coeff(1, x), f2 = eq.coeff(2, x);
    return f1 > 0.0 ? c + f1 * f1 / (4.0 * -f2) : c;
  }
  // Critical points: positive real roots of sum i f_i z^{i-1}.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(top - 1, top - 1);
  const double lead = top * eq.coeff(top, x);
  for (int r = 0; r < top - 1; ++r) companion(0, r) = -((top - 1 - r) * eq.coeff(top - 1 - r, x)) / lead;
  for (int r = 1; r < top - 1; ++r) companion(r, r - 1) = 1.0;
  const Eigen::VectorXcd roots = Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues();
  double best = c;
  for (Index r = 0; r < roots.size(); ++r) {
    const std::complex<double> z = roots(r);
    if (std::abs(z.imag()) > 1e-9 * (1.0 + std::abs(z)) || z.real() <= 0.0) continue;
    double val = c, zp = 1.0;
    for (int i = 1; i <= top; ++i) {
      zp *= z.real();
      val += eq.coeff(i, x) * zp;
    }
    best = std::max(best, val);
  }
  return best;
}

/// Sound, incomplete nonexistence test by sign arguments on the data.
inline NonexistenceReport nonexistence_check(const WeightedGraph& g, const ExpNonlinearity& eq) {
  require_aligned(g, eq);
  const double c = eq.constant();
  const int n = eq.degree();
  // Every term nonpositive and some strictly negative: sum m F(u) < 0.
  bool all_nonpositive = c <= 0.0;
  bool some_negative = c < 0.0;
  for (const auto& f : eq.coeffs()) {
    all_nonpositive = all_nonpositive && (f.array() <= 0.0).all();
    some_negative = some_negative || (f.array() < 0.0).any();
  }
  if (all_nonpositive && some_negative)
    return {Verdict::no_solution_certified, "all coefficients and c are nonpositive, some negative"};

  // Pointwise bound: F(x, .) <= sup_x <= 0 everywhere and < 0 somewhere.
  // Closed form for n <= 2; the companion-matrix route for larger n keeps a margin.
  const double margin = n <= 2 ? 0.0 : 1e-9 * (1.0 + coefficient_size(eq));
  bool bounded = true, strict = false;
  for (Index x = 0; x < g.size() && bounded; ++x) {
    const double sup = polynomial_sup(eq, x);
    bounded = sup <= -margin;
    strict = strict || sup < -margin;
  }
  if (bounded && strict)
    return {Verdict::no_solution_certified, "sum_i f_i e^{iu} + c is bounded above by a nonpositive, somewhere negative function"};

  // c = 0: multiply by e^{-u}; sum m (sum_{i>=2} f_i e^{(i-1)u} + f_1) <= 0 is impossible
  // when f_i >= 0 for i >= 2 and avg f_1 > 0.
  if (c == 0.0 && f1_average_sign(g, eq) > 0) {
    bool higher_nonneg = true;
    for (int i = 2; i <= n; ++i) higher_nonneg = higher_nonneg && (eq.coeff(i).array() >= 0.0).all();
    if (higher_nonneg)
      return {Verdict::no_solution_certified, "c = 0, f_i >= 0 for i >= 2 and avg f_1 > 0"};
  }
  return {Verdict::unknown, "no certificate applies"};
}

// ---------------------------------------------------------------------------
// Threshold scan

/// Informational bounds for n = 2 with the realized constant C2 = max_x sum_y w / m.
struct ThresholdBounds {
  std::optional<double> case_d;      // max over f2 != 0 of f1^2 / (4 f2_-); rigorous
  std::optional<double> case_a_info;
  std::optional<double> case_c_info;
  double c2 = 0.0;
};

inline ThresholdBounds threshold_bounds(const WeightedGraph& g, const ExpNonlinearity& eq) {
  ThresholdBounds b;
  b.c2 = max_weighted_degree(g);
  if (eq.degree() != 2) return b;
  const VertexFunction& f2 = eq.coeff(2);
  const VertexFunction& f1 = eq.coeff(1);
  const QuadraticCase q = quadratic_case(eq);
  if (q == QuadraticCase::d) {
    double best = 0.0;
    for (Index x = 0; x < f2.size(); ++x)
      if (f2(x) != 0.0) best = std::max(best, f1(x) * f1(x) / (4.0 * std::max(-f2(x), 0.0)));
    b.case_d = best;
  } else if (q == QuadraticCase::a) {
    const VertexFunction f1m = (-f1).cwiseMax(0.0);
    double eps = 0.0;
    if (f1.minCoeff() < 0.0) eps = f2.maxCoeff() / f1m.cwiseAbs2().maxCoeff();
    const VertexFunction h = f2 - 0.5 * eps * f1m.cwiseAbs2();
    if (h.maxCoeff() > 0.0) b.case_a_info = b.c2 * h.cwiseAbs().maxCoeff() / h.maxCoeff() + (eps > 0.0 ? 1.0 / eps : 0.0);
  } else if (q == QuadraticCase::c) {
    for (Index x = 0; x < f2.size(); ++x) {
      if (f2(x) == 0.0 && f1(x) > 0.0) {
        const double num = f1.cwiseAbs2().maxCoeff() + (-f2).cwiseMax(0.0).maxCoeff();
        b.case_c_info = b.c2 * (std::log(num / (f1(x) * f1(x))) + 1.0);
        break;
      }
    }
  }
  return b;
}

struct CnProbe {
  double c = 0.0;
  int solutions = 0;
  double min_residual = std::numeric_limits<double>::infinity();
};

struct CnEstimate {
  double value = 0.0;       // |c| of the last solvable probe
  int direction = 1;        // +1: c > 0 side, -1: c < 0 side
  std::optional<double> upper_bound;
  double bracket_lo = 0.0;  // last solvable |c|
  double bracket_hi = std::numeric_limits<double>::infinity();  // first unsolvable |c|
  bool at_ceiling = false;
  bool endpoint_verified = false;
  ThresholdBounds bounds;
  std::vector<CnProbe> probes;
  VertexFunction endpoint_solution;
};

struct CnOptions {
  double c_max = 1e3;
  double relative_width = 1e-3;
  double start = 0.0;  // 0: choose from the small-c barrier
};

/// Bisection on |c| using monotone solvability. Raises std::domain_error
/// when no solvable c is found down to 1e-8.
inline CnEstimate estimate_cn(const WeightedGraph& g, const ExpNonlinearity& eq, const SolverConfig& cfg,
                              const CnOptions& opt = {}) {
  require_aligned(g, eq);
  const CaseLabel label = classify(g, eq);
  CnEstimate est;
  if (label.structural == Structural::a_star) est.direction = 1;
  else if (label.structural == Structural::c_star) est.direction = -1;
  else throw std::invalid_argument("threshold scan needs a case with a sign-changing structure");
  est.bounds = threshold_bounds(g, eq);
  est.upper_bound = est.bounds.case_d;

  std::optional<VertexFunction> last;
  const auto probe = [&](double mag) {
    const ExpNonlinearity e = eq.with_constant(est.direction * mag);
    CnProbe p{est.direction * mag, 0, std::numeric_limits<double>::infinity()};
    std::optional<Solution> found;
    if (last) {
      auto s = newton_solve(g, e, *last, cfg);
      if (s && s->certified) found = s;
    }
    if (!found && nonexistence_check(g, e).certified()) {
      est.probes.push_back(p);
      return false;
    }
    if (!found) {
      SolverConfig c = cfg;
      c.budget = std::min(cfg.budget, 200);
      const SolutionSet set = multistart_enumerate(g, e, c);
      p.solutions = static_cast<int>(set.size());
      for (const auto& s : set.solutions) {
        p.min_residual = std::min(p.min_residual, s.residual_norm);
        if (s.certified && !found) found = s;
      }
    } else {
      p.solutions = 1;
      p.min_residual = found->residual_norm;
    }
    est.probes.push_back(p);
    if (found) last = found->u;
    return found.has_value();
  };

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double mag = opt.start;
  if (!(mag > 0.0)) {
    mag = 1e-2;
    if (f1_average_sign(g, eq) != 0) {
      try {
        const SmallCBarrier b = build_small_c_supersolution(g, eq);
        if ((b.kind == ExistenceCase::a) == (est.direction > 0)) mag = std::abs(b.c_mid());
      } catch (const std::exception&) {
      }
    }
  }
  // Find a solvable starting point.
  while (!probe(mag)) {
    hi = mag;
    mag *= 0.1;
    if (mag < 1e-8) throw std::domain_error("no solvable c found down to 1e-8");
  }
  lo = mag;
  // Grow until unsolvable; the rigorous bound, when known, caps the search.
  if (!std::isfinite(hi)) {
    if (est.upper_bound && *est.upper_bound > lo) {
      const double cap = *est.upper_bound * (1.0 + 1e-9) + 1e-12;
      if (!probe(cap)) hi = cap;
      else lo = cap;
    }
    while (!std::isfinite(hi)) {
      const double next = std::min(2.0 * lo, opt.c_max);
      if (next <= lo) {
        est.at_ceiling = true;
        break;
      }
      if (probe(next)) lo = next;
      else hi = next;
      if (lo >= opt.c_max) {
        est.at_ceiling = true;
        break;
      }
    }
  }
  while (std::isfinite(hi) && hi - lo > opt.relative_width * lo) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid)) lo = mid;
    else hi = mid;
  }
  est.value = lo;
  est.bracket_lo = lo;
  est.bracket_hi = hi;
  // Closed interval: re-verify the endpoint itself.
  const ExpNonlinearity at_end = eq.with_constant(est.direction * lo);
  if (last) {
    auto s = newton_solve(g, at_end, *last, cfg);
    est.endpoint_verified = s && s->certified;
    if (est.endpoint_verified) est.endpoint_solution = s->u;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Multiplicity

struct MultiplicityReport {
  SolutionSet solutions;
  std::optional<std::size_t> local_minimum;  // index of the boxed minimizer
  int budget_used = 0;
  bool certified = false;  // at least two certified solutions
};

/// Deflated multistart plus a boxed minimizer below (A*) or above (B*) a
/// found root; the budget is raised to 2x and 4x before giving up.
inline MultiplicityReport multiplicity_search(const WeightedGraph& g, const ExpNonlinearity& eq,
                                              const SolverConfig& cfg) {
  require_aligned(g, eq);
  MultiplicityReport rep;
  const Structural s = structural_case(eq);
  for (int factor : {1, 2, 4}) {
    SolverConfig c = cfg;
    c.budget = cfg.budget * factor;
    c.seed = cfg.seed + static_cast<std::uint64_t>(factor);
    std::vector<VertexFunction> extra;
    SolutionSet first = multistart_enumerate(g, eq, c);
    std::optional<Solution> minimizer;
    if (!first.empty()) {
      try {
        if (s == Structural::a_star) {
          const VertexFunction& top = first.solutions.back().u;
          if (auto m = constant_subsolution(g, eq, std::max(1.0, -top.minCoeff() + 1.0)))
            minimizer = minimize_boxed(g, eq, VertexFunction::Constant(g.size(), -*m), top, c);
        } else {
          const VertexFunction& bottom = first.solutions.front().u;
          if (auto m = constant_supersolution(g, eq, std::max(1.0, bottom.maxCoeff() + 1.0)))
            minimizer = minimize_boxed(g, eq, bottom, VertexFunction::Constant(g.size(), *m), c);
        }
      } catch (const std::exception&) {
        minimizer.reset();
      }
    }
    if (minimizer) extra.push_back(minimizer->u);
    rep.solutions = extra.empty() ? std::move(first) : multistart_enumerate(g, eq, c, extra);
    rep.budget_used = c.budget;
    rep.local_minimum.reset();
    if (minimizer) {
      for (std::size_t i = 0; i < rep.solutions.size(); ++i)
        if (inf_norm(rep.solutions.solutions[i].u - minimizer->u) < cfg.deflation_radius) rep.local_minimum = i;
    }
    int certified = 0;
    for (const auto& sol : rep.solutions.solutions) certified += sol.certified ? 1 : 0;
    rep.certified = certified >= 2;
    if (rep.certified) break;
  }
  return rep;
}

}  // namespace expgraph

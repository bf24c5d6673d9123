#pragma once

// Empirical Brouwer degree as a signed count of solutions, homotopies that
// deform an equation into a canonical one with the same degree, and direct
// analysis of two-vertex graphs through a scalar equation.

#include "expgraph/graph.hpp"
#include "expgraph/hypothesis.hpp"
#include "expgraph/nonlinearity.hpp"
#include "expgraph/solver.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace expgraph {

struct DegreeReport {
  std::optional<int> empirical;  // empty when uncertified
  std::optional<int> predicted;
  int sign_sum = 0;
  SolutionSet solutions;
  bool certified = false;
};

inline DegreeReport empirical_degree(const WeightedGraph& g, const ExpNonlinearity& eq, const SolverConfig& cfg) {
  DegreeReport rep;
  rep.predicted = predicted_degree(g, eq);
  rep.solutions = multistart_enumerate(g, eq, cfg);
  bool ok = rep.solutions.exhaustive && rep.solutions.overflow_events == 0;
  for (const auto& s : rep.solutions.solutions) {
    rep.sign_sum += s.jac_sign;
    ok = ok && s.certified && s.jac_sign != 0;
  }
  rep.certified = ok;
  if (ok) rep.empirical = rep.sign_sum;
  return rep;
}

// ---------------------------------------------------------------------------
// Homotopies

/// Raw coefficient data (f_1..f_n, c) without truncation, so that paths can
/// interpolate between equations of the same nominal degree.
struct Coefficients {
  std::vector<VertexFunction> f;
  double c = 0.0;

  static Coefficients of(const ExpNonlinearity& eq) { return {eq.coeffs(), eq.constant()}; }
  ExpNonlinearity equation() const { return ExpNonlinearity(f, c); }
};

class GuardViolation : public std::runtime_error {
 public:
  GuardViolation(double t, const std::string& what)
      : std::runtime_error("guard fails at t = " + std::to_string(t) + ": " + what), t_(t) {}
  double t() const { return t_; }

 private:
  double t_;
};

/// Piecewise-linear path through waypoints; leg j covers t in [j/L, (j+1)/L].
class HomotopyPath {
 public:
  HomotopyPath(std::vector<Coefficients> waypoints, std::string description)
      : waypoints_(std::move(waypoints)), description_(std::move(description)) {
    if (waypoints_.size() < 2) throw std::invalid_argument("a path needs at least two waypoints");
  }

  ExpNonlinearity at(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw std::out_of_range("homotopy parameter outside [0, 1]");
    const double legs = static_cast<double>(waypoints_.size() - 1);
    const std::size_t j = std::min(static_cast<std::size_t>(t * legs), waypoints_.size() - 2);
    const double s = t * legs - static_cast<double>(j);
    const Coefficients& a = waypoints_[j];
    const Coefficients& b = waypoints_[j + 1];
    std::vector<VertexFunction> f;
    for (std::size_t i = 0; i < a.f.size(); ++i) f.push_back((1.0 - s) * a.f[i] + s * b.f[i]);
    return ExpNonlinearity(std::move(f), (1.0 - s) * a.c + s * b.c);
  }

  const std::vector<Coefficients>& waypoints() const { return waypoints_; }
  const std::string& description() const { return description_; }

  /// Smallest K for which every sampled t passes the a-priori hypothesis.
  /// Throws GuardViolation at the first failing sample.
  double check_guard(const WeightedGraph& g, int samples = 64) const {
    double k = 0.0;
    for (int s = 0; s < samples; ++s) {
      const double t = samples == 1 ? 0.0 : static_cast<double>(s) / (samples - 1);
      const auto ks = minimal_bound_constant(g, at(t));
      if (!ks) throw GuardViolation(t, "no K satisfies the bound hypothesis");
      k = std::max(k, *ks);
    }
    return k;
  }

 private:
  std::vector<Coefficients> waypoints_;
  std::string description_;
};

namespace detail {

inline int leading_index_at(const std::vector<VertexFunction>& f, Index x) {
  for (int i = static_cast<int>(f.size()); i >= 1; --i)
    if (f[static_cast<std::size_t>(i - 1)](x) != 0.0) return i;
  return 0;
}

inline Coefficients zero_like(const Coefficients& a) {
  Coefficients z = a;
  for (auto& f : z.f) f.setZero();
  return z;
}

// Every vertex with D < 0 gets its leading coefficient sent to -1; all other
// coefficients with index >= `from` go to 0.
inline Coefficients negative_leading_endpoint(const Coefficients& a, int from) {
  Coefficients e = a;
  const Index k = a.f.front().size();
  for (Index x = 0; x < k; ++x) {
    const int j = leading_index_at(a.f, x);
    for (int i = from; i <= static_cast<int>(a.f.size()); ++i) {
      double& v = e.f[static_cast<std::size_t>(i - 1)](x);
      v = (i == j && a.f[static_cast<std::size_t>(i - 1)](x) < 0.0) ? -1.0 : 0.0;
    }
  }
  return e;
}

// Single-witness endpoint: f_j(x0) = value, everything else zero.
inline Coefficients witness_endpoint(const Coefficients& a, Index x0, int j, double value) {
  Coefficients e = zero_like(a);
  e.f[static_cast<std::size_t>(j - 1)](x0) = value;
  return e;
}

}  // namespace detail

/// Deforms eq to a canonical endpoint with the same degree, following the
/// case split by the leading coefficient. Requires a defined predicted degree.
inline HomotopyPath canonical_homotopy(const WeightedGraph& g, const ExpNonlinearity& eq) {
  require_aligned(g, eq);
  if (!predicted_degree(g, eq)) throw std::invalid_argument("degree undefined: c = 0 and avg f_1 = 0");
  const Coefficients start = Coefficients::of(eq);
  const LeadingProfile p = leading_profile(eq);
  const Structural s = structural_case(eq);
  const int n = eq.degree();
  const Index k = g.size();
  const double c = eq.constant();

  // Witness with positive leading coefficient, preferring the highest index.
  const auto positive_witness = [&]() {
    Index best = -1;
    for (Index x = 0; x < k; ++x) {
      if (p.d(x) <= 0.0) continue;
      if (best < 0 || p.leading_index[x] > p.leading_index[best] ||
          (p.leading_index[x] == p.leading_index[best] && p.d(x) > p.d(best)))
        best = x;
    }
    return best;
  };
  const auto negative_witness = [&](const Coefficients& a) {
    Index best = -1;
    int bj = 0;
    for (Index x = 0; x < k; ++x) {
      const int j = detail::leading_index_at(a.f, x);
      if (j == 0 || a.f[static_cast<std::size_t>(j - 1)](x) >= 0.0) continue;
      if (best < 0 || j > bj) {
        best = x;
        bj = j;
      }
    }
    return std::make_pair(best, bj);
  };

  if (c != 0.0) {
    if (s == Structural::a_star) {
      const Index x0 = positive_witness();
      const int j = p.leading_index[x0];
      return HomotopyPath({start, detail::witness_endpoint(start, x0, j, 1.0)},
                          "positive leading coefficient at " + g.ids()[x0] + " sent to e^{" +
                              std::to_string(j) + "u}");
    }
    Coefficients mid = start;
    std::string what;
    if (s == Structural::c_star) {
      mid = detail::negative_leading_endpoint(start, 1);
      what = "negative leading coefficients sent to -1, then ";
    }
    const auto [x0, j] = negative_witness(mid);
    const Coefficients end = detail::witness_endpoint(mid, x0, j, -1.0);
    std::vector<Coefficients> pts{start};
    if (s == Structural::c_star) pts.push_back(mid);
    pts.push_back(end);
    return HomotopyPath(std::move(pts), what + "single witness " + g.ids()[x0] + " with -e^{" +
                                            std::to_string(j) + "u}");
  }

  const int sign = f1_average_sign(g, eq);
  if (s == Structural::b_star) return HomotopyPath({start, start}, "constant path");

  if (s == Structural::a_star) {
    const Index x0 = positive_witness();
    const int j = p.leading_index[x0];
    Coefficients end = detail::zero_like(start);
    if (j >= 2) {
      end.f[static_cast<std::size_t>(j - 1)](x0) = 1.0;
      end.f[0].setConstant(static_cast<double>(sign));
      return HomotopyPath({start, end}, "witness " + g.ids()[x0] + " with e^{" + std::to_string(j) +
                                            "u}, f_1 sent to " + std::to_string(sign));
    }
    end.f[0](x0) = 1.0;
    if (sign < 0) {
      if (k < 2) throw std::invalid_argument("negative average on a single vertex");
      const Index x1 = x0 == 0 ? 1 : 0;
      end.f[0](x1) = -std::exp(1.0) * g.measure(x0) / g.measure(x1);
    }
    return HomotopyPath({start, end}, "f_1 concentrated at " + g.ids()[x0]);
  }

  // c*: indices >= 2 as in the c != 0 case; f_1 pushed towards sign(avg f_1)
  // off the set where f_n = ... = f_2 = 0.
  Coefficients end = detail::negative_leading_endpoint(start, 2);
  for (Index x = 0; x < k; ++x) {
    bool upper_zero = true;
    for (int i = 2; i <= n; ++i) upper_zero = upper_zero && start.f[static_cast<std::size_t>(i - 1)](x) == 0.0;
    end.f[0](x) = upper_zero ? 0.0 : static_cast<double>(sign);
  }
  return HomotopyPath({start, end}, "negative leading coefficients sent to -1, f_1 sent to " +
                                        std::to_string(sign) + " off the linear set");
}

enum class TrackStatus { constant, not_established, violated };

inline std::string to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::constant: return "constant";
    case TrackStatus::not_established: return "not-established";
    case TrackStatus::violated: return "violated";
  }
  return "?";
}

struct TrackSample {
  double t = 0.0;
  DegreeReport report;
  bool refined = false;  // inserted where the solution count changed
};

struct HomotopyTrack {
  std::vector<TrackSample> samples;
  TrackStatus status = TrackStatus::not_established;
  std::optional<int> degree;
  double k_uniform = 0.0;
};

/// Empirical degree along the path. Constancy is judged on the regular grid;
/// refined samples only localize changes in the number of solutions.
inline HomotopyTrack track_homotopy(const WeightedGraph& g, const HomotopyPath& path, const SolverConfig& cfg,
                                    int samples = 64, int refine_levels = 3) {
  if (samples < 2) throw std::invalid_argument("need at least two samples");
  HomotopyTrack track;
  track.k_uniform = path.check_guard(g, samples);
  std::vector<TrackSample> grid;
  for (int s = 0; s < samples; ++s) {
    const double t = static_cast<double>(s) / (samples - 1);
    grid.push_back({t, empirical_degree(g, path.at(t), cfg), false});
  }
  bool all_certified = true;
  bool same = true;
  for (const auto& smp : grid) {
    all_certified = all_certified && smp.report.certified;
    if (smp.report.empirical && grid.front().report.empirical)
      same = same && *smp.report.empirical == *grid.front().report.empirical;
  }
  std::vector<TrackSample> refined;
  std::vector<std::pair<TrackSample, TrackSample>> pending;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (grid[i].report.solutions.size() != grid[i + 1].report.solutions.size()) pending.emplace_back(grid[i], grid[i + 1]);
  for (int level = 0; level < refine_levels && !pending.empty(); ++level) {
    std::vector<std::pair<TrackSample, TrackSample>> next;
    for (const auto& [a, b] : pending) {
      const double t = 0.5 * (a.t + b.t);
      TrackSample mid{t, empirical_degree(g, path.at(t), cfg), true};
      refined.push_back(mid);
      if (mid.report.solutions.size() != a.report.solutions.size()) next.emplace_back(a, mid);
      if (mid.report.solutions.size() != b.report.solutions.size()) next.emplace_back(mid, b);
    }
    pending = std::move(next);
  }
  track.samples = std::move(grid);
  track.samples.insert(track.samples.end(), refined.begin(), refined.end());
  std::sort(track.samples.begin(), track.samples.end(),
            [](const TrackSample& a, const TrackSample& b) { return a.t < b.t; });
  if (!all_certified) {
    track.status = same ? TrackStatus::not_established : TrackStatus::violated;
  } else {
    track.status = same ? TrackStatus::constant : TrackStatus::violated;
    if (same) track.degree = track.samples.front().report.empirical;
  }
  return track;
}

// ---------------------------------------------------------------------------
// Two-vertex graphs

struct TwoVertexAnalysis {
  SolutionSet solutions;
  std::vector<double> roots;  // scalar roots in u_1
  int degree = 0;
  bool certified = false;
};

namespace detail {

// Scalar reduction on two vertices. With w the edge weight, the first
// equation gives u2 = u1 - m1 F_1(u1) / w and the second becomes
// phi(u1) = m1 F_1(u1) + m2 F_2(u2) = 0. Overflow saturates to +-inf with
// the sign of the dominating term.
class TwoVertexScalar {
 public:
  TwoVertexScalar(const WeightedGraph& g, const ExpNonlinearity& eq) : g_(g), eq_(eq) {
    if (g.size() != 2) throw std::invalid_argument("two-vertex analysis needs |V| = 2");
    w_ = g.weight(0, 1);
  }

  double u2(double u1) const { return u1 - g_.measure(0) * eq_.evaluate(0, u1) / w_; }

  double operator()(double u1) const {
    double a = 0.0;
    try {
      a = g_.measure(0) * eq_.evaluate(0, u1);
    } catch (const OverflowError&) {
      // a is +-inf with the sign of D(0); for a -> -inf, u2 -> +inf and F_2 takes over.
      return sign_of(0) > 0 ? kInf : dominated_by_second(-kInf);
    }
    const double v = u1 - a / w_;
    if (!std::isfinite(v)) return a > 0.0 ? kInf : dominated_by_second(-kInf);
    try {
      return a + g_.measure(1) * eq_.evaluate(1, v);
    } catch (const OverflowError&) {
      return dominated_by_second(a);
    }
  }

  /// Rounding bound for operator(): the sum of absolute terms, inflated by
  /// the error u2 inherits from u1.
  double noise(double u1) const {
    const auto magnitude = [&](Index x, double u) {
      double s = std::abs(eq_.constant());
      for (int i = 1; i <= eq_.degree(); ++i) s += std::abs(eq_.coeff(i, x)) * std::exp(i * u);
      return g_.measure(x) * s;
    };
    const double v = u2(u1);
    if (!std::isfinite(v) || eq_.degree() * std::max(u1, v) > kExpGuard) return 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    return 16.0 * eps * eq_.degree() * (1.0 + std::abs(u1) + std::abs(v)) * (magnitude(0, u1) + magnitude(1, v));
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  int sign_of(Index x) const {
    const double d = leading_profile(eq_).d(x);
    return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
  }
  // u2 -> +inf: F_2 grows doubly exponentially unless every f_i(x2) vanishes.
  double dominated_by_second(double fallback) const {
    const int s = sign_of(1);
    if (s == 0) return fallback;
    return s > 0 ? kInf : -kInf;
  }

  const WeightedGraph& g_;
  const ExpNonlinearity& eq_;
  double w_;
};

inline std::vector<std::pair<double, double>> sign_brackets(const TwoVertexScalar& phi, double lo, double hi,
                                                            int points) {
  // Samples whose magnitude is below the rounding bound carry no sign.
  const auto sample = [&](double x) {
    const double f = phi(x);
    return std::isnan(f) || std::abs(f) <= phi.noise(x) ? std::numeric_limits<double>::quiet_NaN() : f;
  };
  std::vector<std::pair<double, double>> out;
  double x0 = lo, f0 = sample(lo);
  for (int i = 1; i <= points; ++i) {
    const double x1 = lo + (hi - lo) * i / points;
    const double f1 = sample(x1);
    if (std::isnan(f1)) continue;
    if (!std::isnan(f0) && ((f0 < 0.0 && f1 > 0.0) || (f0 > 0.0 && f1 < 0.0))) out.emplace_back(x0, x1);
    x0 = x1;
    f0 = f1;
  }
  return out;
}

}  // namespace detail

/// All solutions on a two-vertex graph via the scalar reduction in u_1 over
/// [-range, range]. Certified when the root count is stable under two grid
/// doublings and every root is simple.
inline TwoVertexAnalysis two_vertex_analyze(const WeightedGraph& g2, const ExpNonlinearity& eq,
                                            const SolverConfig& cfg = {}, double range = 60.0) {
  require_aligned(g2, eq);
  detail::TwoVertexScalar phi(g2, eq);
  const double lo = -range, hi = std::min(range, kExpGuard / eq.degree());
  auto br = detail::sign_brackets(phi, lo, hi, 6000);
  const auto br2 = detail::sign_brackets(phi, lo, hi, 12000);
  const auto br4 = detail::sign_brackets(phi, lo, hi, 24000);
  TwoVertexAnalysis out;
  bool stable = br.size() == br2.size() && br2.size() == br4.size();
  std::vector<VertexFunction> starts;
  for (const auto& [a, b] : br4) {
    double root = a;
    if (a != b) {
      const double fa = phi(a), fb = phi(b);
      boost::math::tools::eps_tolerance<double> tol(52);
      std::uintmax_t iters = 200;
      std::pair<double, double> r;
      if (std::isfinite(fa) && std::isfinite(fb)) {
        r = boost::math::tools::toms748_solve(phi, a, b, fa, fb, tol, iters);
      } else {
        r = boost::math::tools::bisect(phi, a, b, tol, iters);
      }
      root = 0.5 * (r.first + r.second);
    }
    out.roots.push_back(root);
    starts.push_back((VertexFunction(2) << root, phi.u2(root)).finished());
  }
  for (const auto& s0 : starts) {
    auto sol = newton_solve(g2, eq, s0, cfg);
    if (!sol) {
      stable = false;
      continue;
    }
    if (sol->jac_sign == 0 || !sol->certified) stable = false;
    bool dup = false;
    for (const auto& s : out.solutions.solutions) dup = dup || inf_norm(s.u - sol->u) < cfg.deflation_radius;
    if (dup) {
      stable = false;
      continue;
    }
    out.degree += sol->jac_sign;
    out.solutions.solutions.push_back(std::move(*sol));
  }
  out.solutions.exhaustive = stable;
  out.certified = stable;
  std::sort(out.solutions.solutions.begin(), out.solutions.solutions.end(),
            [](const Solution& a, const Solution& b) { return a.u.minCoeff() < b.u.minCoeff(); });
  return out;
}

}  // namespace expgraph

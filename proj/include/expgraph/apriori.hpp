#pragma once

// A-priori bounds as experiments: the trichotomy classifier for parameter
// families, the two-vertex blow-up and nonexistence families, and random
// sweeps over instances that satisfy the bound hypothesis.

#include "expgraph/degree.hpp"
#include "expgraph/existence.hpp"
#include "expgraph/graph.hpp"
#include "expgraph/hypothesis.hpp"
#include "expgraph/nonlinearity.hpp"
#include "expgraph/solver.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace expgraph {

struct SequenceEntry {
  double param = 0.0;
  ExpNonlinearity eq;
  std::vector<Solution> solutions;
  std::optional<double> t;          // scalar root of the example's reduction
  double identity_residual = 0.0;   // reduction identities evaluated at the polished solution
  std::optional<NonexistenceReport> verdict;
};

struct ParamSequence {
  std::string kind;
  WeightedGraph graph = WeightedGraph::unit(1, {});
  std::vector<SequenceEntry> entries;
  std::optional<ExpNonlinearity> limit;
};

// ---------------------------------------------------------------------------
// Trichotomy

enum class Trichotomy { bounded, to_minus_infinity, to_plus_infinity, undecided };

inline std::string to_string(Trichotomy t) {
  switch (t) {
    case Trichotomy::bounded: return "bounded";
    case Trichotomy::to_minus_infinity: return "to-minus-infinity";
    case Trichotomy::to_plus_infinity: return "to-plus-infinity";
    case Trichotomy::undecided: return "undecided";
  }
  return "?";
}

/// Margin used by classify_trichotomy: max(2 log10(param ratio), 1).
inline double trichotomy_margin(const ParamSequence& seq) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& e : seq.entries) {
    const double p = std::abs(e.param);
    if (p > 0.0) {
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
  }
  const double ratio = hi > 0.0 && std::isfinite(lo) ? hi / lo : 1.0;
  return std::max(2.0 * std::log10(ratio), 1.0);
}

/// Entries are read in sequence order (towards the limit); each contributes
/// its first solution. Divergence needs strict monotone movement of the
/// extreme value by at least the margin.
inline Trichotomy classify_trichotomy(const ParamSequence& seq) {
  std::vector<double> lows, highs;
  for (const auto& e : seq.entries) {
    if (e.solutions.empty()) continue;
    lows.push_back(e.solutions.front().u.minCoeff());
    highs.push_back(e.solutions.front().u.maxCoeff());
  }
  if (lows.size() < 4) return Trichotomy::undecided;
  const double margin = trichotomy_margin(seq);
  bool down = true, up = true;
  for (std::size_t i = 1; i < lows.size(); ++i) {
    down = down && highs[i] < highs[i - 1];
    up = up && lows[i] > lows[i - 1];
  }
  if (down && highs.front() - highs.back() >= margin) return Trichotomy::to_minus_infinity;
  if (up && lows.back() - lows.front() >= margin) return Trichotomy::to_plus_infinity;
  const auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
  };
  if (spread(lows) < margin && spread(highs) < margin) return Trichotomy::bounded;
  return Trichotomy::undecided;
}

// ---------------------------------------------------------------------------
// Two-vertex example families on m = 1, w = 1

enum class ExampleKind { ex34, ex35, ex36, ex51, ex52, ex53 };

inline std::string to_string(ExampleKind k) {
  switch (k) {
    case ExampleKind::ex34: return "ex34";
    case ExampleKind::ex35: return "ex35";
    case ExampleKind::ex36: return "ex36";
    case ExampleKind::ex51: return "ex51";
    case ExampleKind::ex52: return "ex52";
    case ExampleKind::ex53: return "ex53";
  }
  return "?";
}

inline ExampleKind parse_example_kind(const std::string& s) {
  for (ExampleKind k : {ExampleKind::ex34, ExampleKind::ex35, ExampleKind::ex36, ExampleKind::ex51,
                        ExampleKind::ex52, ExampleKind::ex53})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown example kind: " + s);
}

inline WeightedGraph two_vertex_unit_graph() { return WeightedGraph::unit(2, {{0, 1, 1.0}}); }

/// Coefficients of each family at parameter p (epsilon for ex34-36, the f_2
/// weight for ex51/52, K for ex53). a, b only enter ex53.
inline ExpNonlinearity example_equation(ExampleKind kind, double p, double a = 2.0, double b = 1.0) {
  const auto vf = [](double x, double y) { return (VertexFunction(2) << x, y).finished(); };
  switch (kind) {
    case ExampleKind::ex34: return ExpNonlinearity({vf(1.0, -1.0), vf(1.0, -2.0 - p)}, 0.0);
    case ExampleKind::ex35: return ExpNonlinearity({vf(1.0, -1.0), vf(0.0, -1.0 - p)}, 0.0);
    case ExampleKind::ex36: return ExpNonlinearity({vf(-1.0 - p, 1.0 + p), vf(0.0, -1.0)}, 0.0);
    case ExampleKind::ex51: return ExpNonlinearity({vf(1.0, -0.5), vf(p, 0.0)}, 0.0);
    case ExampleKind::ex52: return ExpNonlinearity({vf(1.0, -0.5), vf(0.0, -p)}, 0.0);
    case ExampleKind::ex53: return ExpNonlinearity({vf(-a, b), vf(0.0, -p)}, 0.0);
  }
  throw std::invalid_argument("unknown example kind");
}

namespace detail {

struct ScalarReduction {
  std::function<double(double)> g;  // root in t
  double lo, hi;                    // bracket for t
  std::function<std::pair<double, double>(double)> xy;  // (x, y) from t
};

inline ScalarReduction example_reduction(ExampleKind kind, double eps) {
  switch (kind) {
    case ExampleKind::ex34: {
      // t = x - y; e^y = (1 - e^t) / (e^{2t} - 2 - eps) and (2 + eps) e^{2y} + e^y = t.
      const auto ey = [eps](double t) { return (1.0 - std::exp(t)) / (std::exp(2.0 * t) - 2.0 - eps); };
      return {[eps, ey](double t) {
                const double y = ey(t);
                return (2.0 + eps) * y * y + y - t;
              },
              1e-300, 0.5 * std::log(2.0 + eps) * (1.0 - 1e-12),
              [ey](double t) {
                const double y = std::log(ey(t));
                return std::make_pair(y + t, y);
              }};
    }
    case ExampleKind::ex35:
      // t = x - y; 1 + eps = (e^t - 1) e^t / t, x = ln t.
      return {[eps](double t) { return std::expm1(t) * std::exp(t) / t - 1.0 - eps; }, 1e-300, 1.0 + std::log1p(eps),
              [](double t) { return std::make_pair(std::log(t), std::log(t) - t); }};
    case ExampleKind::ex36:
      // t = y - x; (1 + eps)^2 = t e^{2t} / (e^t - 1), x = ln(t / (1 + eps)).
      return {[eps](double t) { return t * std::exp(2.0 * t) / std::expm1(t) - (1.0 + eps) * (1.0 + eps); }, 1e-300,
              1.0 + 2.0 * std::log1p(eps),
              [eps](double t) {
                const double x = std::log(t / (1.0 + eps));
                return std::make_pair(x, x + t);
              }};
    default: break;
  }
  throw std::invalid_argument("no blow-up reduction for this kind");
}

inline double example_identity_residual(ExampleKind kind, double eps, double x, double y) {
  switch (kind) {
    case ExampleKind::ex34: {
      const double t = x - y;
      const double r1 = std::exp(y) - (1.0 - std::exp(t)) / (std::exp(2.0 * t) - 2.0 - eps);
      const double r2 = (2.0 + eps) * std::exp(2.0 * y) + std::exp(y) - t;
      return std::max(std::abs(r1) / std::exp(y), std::abs(r2) / t);
    }
    case ExampleKind::ex35: {
      const double t = x - y;
      return std::abs(std::expm1(t) * std::exp(t) / t - 1.0 - eps) / (1.0 + eps);
    }
    case ExampleKind::ex36: {
      const double t = y - x;
      return std::abs(t * std::exp(2.0 * t) / std::expm1(t) - (1.0 + eps) * (1.0 + eps)) / ((1.0 + eps) * (1.0 + eps));
    }
    default: break;
  }
  return 0.0;
}

}  // namespace detail

/// ex53 certificate: a root needs e^t > a/b, where the left side is at least
/// (K/a) ln(a/b) and the right side at most b^2 / (4a).
inline NonexistenceReport ex53_certificate(double k, double a, double b) {
  if ((k / a) * std::log(a / b) > b * b / (4.0 * a))
    return {Verdict::no_solution_certified, "(K/a) ln(a/b) exceeds the maximum b^2/(4a) of (b e^t - a) e^{-2t}"};
  return {Verdict::unknown, "K below the scalar certificate"};
}

/// Scalar roots t > 0 of (K/a) t = (b e^t - a) e^{-2t} on (0, 50], by a dense
/// sign scan and toms748 per bracket.
inline std::vector<double> ex53_roots(double k, double a, double b) {
  const auto h = [=](double t) { return (b * std::exp(t) - a) * std::exp(-2.0 * t) - (k / a) * t; };
  std::vector<double> roots;
  const int points = 50000;
  double prev_t = 1e-12, prev = h(prev_t);
  for (int i = 1; i <= points; ++i) {
    const double t = 50.0 * i / points;
    const double cur = h(t);
    if (cur == 0.0) roots.push_back(t);
    else if ((prev < 0.0) != (cur < 0.0) && prev != 0.0) {
      boost::math::tools::eps_tolerance<double> tol(52);
      std::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(h, prev_t, t, prev, cur, tol, iters);
      roots.push_back(0.5 * (r.first + r.second));
    }
    prev_t = t;
    prev = cur;
  }
  return roots;
}

inline ParamSequence blowup_family(ExampleKind kind, const std::vector<double>& params, double a = 2.0,
                                   double b = 1.0, const SolverConfig& cfg = {}) {
  ParamSequence seq;
  seq.kind = to_string(kind);
  seq.graph = two_vertex_unit_graph();
  const WeightedGraph& g = seq.graph;
  if (kind == ExampleKind::ex53 && !(a > b && b > 0.0)) throw std::invalid_argument("ex53 needs a > b > 0");
  for (double p : params) {
    const bool positive = kind == ExampleKind::ex51 ? p >= 0.0 : p > 0.0;
    if (!positive || !std::isfinite(p)) throw std::invalid_argument("parameter out of range for " + seq.kind);
    SequenceEntry e{p, example_equation(kind, p, a, b), {}, std::nullopt, 0.0, std::nullopt};
    switch (kind) {
      case ExampleKind::ex34:
      case ExampleKind::ex35:
      case ExampleKind::ex36: {
        const auto red = detail::example_reduction(kind, p);
        boost::math::tools::eps_tolerance<double> tol(60);
        std::uintmax_t iters = 500;
        const auto r = boost::math::tools::bisect(red.g, red.lo, red.hi, tol, iters);
        const double t = 0.5 * (r.first + r.second);
        e.t = t;
        const auto [x, y] = red.xy(t);
        auto sol = newton_solve(g, e.eq, (VertexFunction(2) << x, y).finished(), cfg);
        if (sol) {
          e.identity_residual = detail::example_identity_residual(kind, p, sol->u(0), sol->u(1));
          e.solutions.push_back(std::move(*sol));
        }
        break;
      }
      case ExampleKind::ex51:
      case ExampleKind::ex52:
      case ExampleKind::ex53: {
        e.verdict = kind == ExampleKind::ex53 ? ex53_certificate(p, a, b) : nonexistence_check(g, e.eq);
        if (!e.verdict->certified()) {
          const TwoVertexAnalysis an = two_vertex_analyze(g, e.eq, cfg);
          e.solutions = an.solutions.solutions;
          if (kind == ExampleKind::ex53) {
            const auto ts = ex53_roots(p, a, b);
            if (!ts.empty()) e.t = ts.front();
          }
        }
        break;
      }
    }
    seq.entries.push_back(std::move(e));
  }
  // Limits as the parameter goes to zero (ex34-36) or the last value otherwise.
  if (kind == ExampleKind::ex34 || kind == ExampleKind::ex35 || kind == ExampleKind::ex36)
    seq.limit = example_equation(kind, 0.0);
  else if (!params.empty())
    seq.limit = example_equation(kind, params.back(), a, b);
  return seq;
}

// ---------------------------------------------------------------------------
// Boundedness sweeps

/// Random n = 2 instance passing check_bound_hypothesis at K on the given
/// branch: coefficient size at most 0.8 K, |c| and the witness coefficient in
/// [1/K, 1.2/K].
inline ExpNonlinearity random_bounded_instance(const WeightedGraph& g, double k, BoundBranch branch,
                                               std::mt19937_64& rng) {
  if (!(k > 0.0)) throw std::invalid_argument("K must be positive");
  const Index n = g.size();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double lead = (1.0 + 0.2 * unit(rng)) / k;
    const double spread = std::max(0.0, 0.8 * k - 2.0 * lead) / 2.0;
    VertexFunction f2(n), f1(n);
    for (Index x = 0; x < n; ++x) {
      f1(x) = spread * (2.0 * unit(rng) - 1.0);
      f2(x) = branch == BoundBranch::positive_leading ? spread * (2.0 * unit(rng) - 1.0)
                                                       : -lead - (spread - lead > 0.0 ? (spread - lead) * unit(rng) : 0.0);
    }
    if (branch == BoundBranch::positive_leading) f2(pick(rng)) = lead;
    const double c = (unit(rng) < 0.5 ? -1.0 : 1.0) * (1.0 + 0.2 * unit(rng)) / k;
    ExpNonlinearity eq({f1, f2}, c);
    const HypothesisCheck h = check_bound_hypothesis(g, eq, k);
    if (const auto* ok = std::get_if<BoundednessHypothesis>(&h); ok && ok->branch == branch) return eq;
  }
  throw std::runtime_error("could not sample an instance for this K and branch");
}

struct SweepReport {
  double k = 0.0;
  int trials = 0;
  int instances_with_solutions = 0;
  int solutions = 0;
  int overflow_events = 0;
  int hypothesis_failures = 0;  // resampled instances that did not pass; stays 0 by construction
  double radius = 0.0;          // max |u|_inf over every solution found
  std::vector<double> per_trial_radius;
};

inline SweepReport empirical_boundedness_sweep(const WeightedGraph& g, double k, BoundBranch branch, int trials,
                                               const SolverConfig& cfg, std::uint64_t seed) {
  SweepReport rep;
  rep.k = k;
  if (trials <= 0) return rep;
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    const ExpNonlinearity eq = random_bounded_instance(g, k, branch, rng);
    if (!std::holds_alternative<BoundednessHypothesis>(check_bound_hypothesis(g, eq, k))) ++rep.hypothesis_failures;
    SolverConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(t);
    const SolutionSet set = multistart_enumerate(g, eq, c);
    ++rep.trials;
    rep.overflow_events += set.overflow_events;
    double r = 0.0;
    for (const auto& s : set.solutions) r = std::max(r, inf_norm(s.u));
    rep.per_trial_radius.push_back(r);
    if (!set.empty()) ++rep.instances_with_solutions;
    rep.solutions += static_cast<int>(set.size());
    rep.radius = std::max(rep.radius, r);
  }
  return rep;
}

}  // namespace expgraph

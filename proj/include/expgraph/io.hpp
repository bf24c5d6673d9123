#pragma once

// Instance files and JSON reports.
//
// Instance layout:
//   {"vertices": [{"id": "a", "m": 1.0}, ...],
//    "edges":    [{"u": "a", "v": "b", "w": 1.0}, ...],
//    "n": 2, "c": -0.5, "f": {"1": [...], "2": [...]},
//    "f0": [...],            optional variable source
//    "config": {...}}        optional SolverConfig fields

#include "expgraph/degree.hpp"
#include "expgraph/existence.hpp"
#include "expgraph/graph.hpp"
#include "expgraph/nonlinearity.hpp"
#include "expgraph/reduction.hpp"
#include "expgraph/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace expgraph {

using json = nlohmann::json;

/// Schema or value error in an instance file.
class MalformedInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Instance {
  WeightedGraph graph = WeightedGraph::unit(1, {});
  ExpNonlinearity eq{{VertexFunction::Zero(1)}, 0.0};
  std::optional<VertexFunction> f0;
  json config = json::object();
};

namespace detail {

inline double finite_number(const json& j, const std::string& what) {
  if (!j.is_number()) throw MalformedInstance(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw MalformedInstance(what + " must be finite");
  return v;
}

inline VertexFunction vertex_function(const json& j, Index k, const std::string& what) {
  if (!j.is_array()) throw MalformedInstance(what + " must be an array");
  if (static_cast<Index>(j.size()) != k)
    throw MalformedInstance(what + " has " + std::to_string(j.size()) + " entries, expected " + std::to_string(k));
  VertexFunction f(k);
  for (Index i = 0; i < k; ++i) f(i) = finite_number(j[static_cast<std::size_t>(i)], what);
  return f;
}

inline const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw MalformedInstance(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

}  // namespace detail

inline json to_json(const VertexFunction& f) {
  json a = json::array();
  for (Index i = 0; i < f.size(); ++i) a.push_back(f(i));
  return a;
}

inline WeightedGraph parse_graph(const json& j) {
  const json& vs = detail::field(j, "vertices");
  if (!vs.is_array() || vs.empty()) throw MalformedInstance("\"vertices\" must be a nonempty array");
  std::vector<std::string> ids;
  std::map<std::string, Index> index;
  VertexFunction m(static_cast<Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const json& v = vs[i];
    if (!v.is_object()) throw MalformedInstance("vertex entries must be objects");
    const json& id = detail::field(v, "id");
    const std::string s = id.is_string() ? id.get<std::string>() : id.dump();
    if (!index.emplace(s, static_cast<Index>(i)).second) throw MalformedInstance("duplicate vertex id " + s);
    ids.push_back(s);
    m(static_cast<Index>(i)) = detail::finite_number(detail::field(v, "m"), "vertex measure");
    if (!(m(static_cast<Index>(i)) > 0.0)) throw MalformedInstance("vertex " + s + " has nonpositive measure");
  }
  const json& es = detail::field(j, "edges");
  if (!es.is_array()) throw MalformedInstance("\"edges\" must be an array");
  std::map<std::pair<Index, Index>, double> seen;
  std::vector<Edge> edges;
  for (const json& e : es) {
    if (!e.is_object()) throw MalformedInstance("edge entries must be objects");
    const auto endpoint = [&](const char* key) {
      const json& id = detail::field(e, key);
      const std::string s = id.is_string() ? id.get<std::string>() : id.dump();
      const auto it = index.find(s);
      if (it == index.end()) throw MalformedInstance("edge refers to unknown vertex " + s);
      return it->second;
    };
    const Index u = endpoint("u"), v = endpoint("v");
    const double w = detail::finite_number(detail::field(e, "w"), "edge weight");
    if (u == v) throw MalformedInstance("self-loop at vertex " + ids[static_cast<std::size_t>(u)]);
    if (!(w > 0.0)) throw MalformedInstance("edge weights must be positive");
    const auto key = std::minmax(u, v);
    const auto [it, fresh] = seen.emplace(key, w);
    if (!fresh) {
      if (it->second != w) throw MalformedInstance("edge listed twice with different weights");
      continue;
    }
    edges.push_back({u, v, w});
  }
  try {
    return WeightedGraph::from_edges(std::move(m), edges, std::move(ids));
  } catch (const std::invalid_argument& ex) {
    throw MalformedInstance(ex.what());
  }
}

inline SolverConfig parse_config(const json& j, SolverConfig cfg = {}) {
  if (!j.is_object()) throw MalformedInstance("\"config\" must be an object");
  for (const auto& [key, val] : j.items()) {
    if (key == "tol") cfg.tol = detail::finite_number(val, key);
    else if (key == "max_iter") cfg.max_iter = static_cast<int>(detail::finite_number(val, key));
    else if (key == "damping") cfg.damping = detail::finite_number(val, key);
    else if (key == "box_radius") cfg.box_radius = detail::finite_number(val, key);
    else if (key == "budget") cfg.budget = static_cast<int>(detail::finite_number(val, key));
    else if (key == "deflation_radius") cfg.deflation_radius = detail::finite_number(val, key);
    else if (key == "seed") {
      if (!val.is_number_integer() || (!val.is_number_unsigned() && val.get<long long>() < 0))
        throw MalformedInstance("seed must be a nonnegative integer");
      cfg.seed = val.get<std::uint64_t>();
    } else throw MalformedInstance("unknown config field \"" + key + "\"");
  }
  return cfg;
}

inline json to_json(const SolverConfig& c) {
  return {{"tol", c.tol},
          {"max_iter", c.max_iter},
          {"damping", c.damping},
          {"box_radius", c.box_radius},
          {"budget", c.budget},
          {"deflation_radius", c.deflation_radius},
          {"seed", c.seed}};
}

/// Parses an instance. Trailing zero coefficients are truncated by
/// ExpNonlinearity; callers can report that through eq.truncated().
inline Instance parse_instance(const json& j) {
  if (!j.is_object()) throw MalformedInstance("instance must be a JSON object");
  Instance inst;
  inst.graph = parse_graph(j);
  const Index k = inst.graph.size();
  const json& nj = detail::field(j, "n");
  if (!nj.is_number_integer() || nj.get<long long>() < 1) throw MalformedInstance("\"n\" must be a positive integer");
  const int n = nj.get<int>();
  const json& fj = detail::field(j, "f");
  if (!fj.is_object()) throw MalformedInstance("\"f\" must be an object keyed by exponent");
  for (const auto& [key, val] : fj.items()) {
    int i = 0;
    try {
      std::size_t used = 0;
      i = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw MalformedInstance("coefficient key \"" + key + "\" is not an integer");
    }
    if (i < 1 || i > n) throw MalformedInstance("coefficient key " + key + " outside 1..n");
  }
  std::vector<VertexFunction> coeffs;
  for (int i = 1; i <= n; ++i) {
    const std::string key = std::to_string(i);
    coeffs.push_back(fj.contains(key) ? detail::vertex_function(fj.at(key), k, "f_" + key) : VertexFunction::Zero(k));
  }
  const double c = j.contains("c") ? detail::finite_number(j.at("c"), "c") : 0.0;
  inst.eq = ExpNonlinearity(std::move(coeffs), c);
  if (j.contains("f0")) inst.f0 = detail::vertex_function(j.at("f0"), k, "f0");
  if (j.contains("config")) {
    parse_config(j.at("config"));
    inst.config = j.at("config");
  }
  return inst;
}

inline json to_json(const WeightedGraph& g) {
  json vs = json::array(), es = json::array();
  for (Index x = 0; x < g.size(); ++x) vs.push_back({{"id", g.ids()[static_cast<std::size_t>(x)]}, {"m", g.measure(x)}});
  for (Index x = 0; x < g.size(); ++x)
    for (Index y = x + 1; y < g.size(); ++y)
      if (g.weight(x, y) > 0.0)
        es.push_back({{"u", g.ids()[static_cast<std::size_t>(x)]}, {"v", g.ids()[static_cast<std::size_t>(y)]}, {"w", g.weight(x, y)}});
  return {{"vertices", vs}, {"edges", es}};
}

inline json to_json(const WeightedGraph& g, const ExpNonlinearity& eq, const std::optional<VertexFunction>& f0 = {}) {
  json j = to_json(g);
  j["n"] = eq.degree();
  j["c"] = eq.constant();
  json f = json::object();
  for (int i = 1; i <= eq.degree(); ++i) f[std::to_string(i)] = to_json(eq.coeff(i));
  j["f"] = f;
  if (f0) j["f0"] = to_json(*f0);
  return j;
}

inline json to_json(const Instance& inst) {
  json j = to_json(inst.graph, inst.eq, inst.f0);
  if (!inst.config.empty()) j["config"] = inst.config;
  return j;
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInstance("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw MalformedInstance(std::string("invalid JSON: ") + e.what());
  }
  return parse_instance(j);
}

inline void save_instance(const std::string& path, const Instance& inst) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(inst).dump(2) << "\n";
}

/// FNV-1a over the canonical dump; object keys are sorted, so the digest
/// ignores key order in the source file.
inline std::string digest(const json& j) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const Solution& s) {
  return {{"u", to_json(s.u)}, {"residual_norm", s.residual_norm}, {"jac_sign", s.jac_sign}, {"certified", s.certified}};
}

inline json to_json(const SolutionSet& set) {
  json sols = json::array();
  for (const auto& s : set.solutions) sols.push_back(to_json(s));
  return {{"solutions", sols},
          {"count", set.size()},
          {"exhaustive", set.exhaustive},
          {"starts_used", set.starts_used},
          {"last_discovery", set.last_discovery},
          {"overflow_events", set.overflow_events},
          {"outside_box", set.outside_box}};
}

inline json optional_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }
inline json optional_double(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const DegreeReport& r) {
  return {{"empirical", optional_int(r.empirical)},
          {"predicted", optional_int(r.predicted)},
          {"sign_sum", r.sign_sum},
          {"certified", r.certified},
          {"solutions", to_json(r.solutions)}};
}

inline json to_json(const HomotopyTrack& tr) {
  json samples = json::array();
  for (const auto& s : tr.samples)
    samples.push_back({{"t", s.t},
                       {"refined", s.refined},
                       {"empirical", optional_int(s.report.empirical)},
                       {"certified", s.report.certified},
                       {"solutions", s.report.solutions.size()}});
  return {{"status", to_string(tr.status)}, {"degree", optional_int(tr.degree)}, {"k_uniform", tr.k_uniform}, {"samples", samples}};
}

inline json to_json(const CnEstimate& e) {
  json probes = json::array();
  for (const auto& p : e.probes)
    probes.push_back({{"c", p.c}, {"solutions", p.solutions}, {"min_residual", std::isfinite(p.min_residual) ? json(p.min_residual) : json(nullptr)}});
  return {{"value", e.value},
          {"direction", e.direction},
          {"upper_bound", optional_double(e.upper_bound)},
          {"bracket", {e.bracket_lo, std::isfinite(e.bracket_hi) ? json(e.bracket_hi) : json(nullptr)}},
          {"at_ceiling", e.at_ceiling},
          {"endpoint_verified", e.endpoint_verified},
          {"informational_bounds",
           {{"c2", e.bounds.c2},
            {"case_a", optional_double(e.bounds.case_a_info)},
            {"case_c", optional_double(e.bounds.case_c_info)}}},
          {"probes", probes}};
}

inline json to_json(const ReductionDiagnostics& d) {
  const auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"r_min_eigenvalue", num(d.r_min_eigenvalue)},
          {"r_inverse_min", num(d.r_inverse_min)},
          {"column_sum_error", d.column_sum_error},
          {"row_sum_error", d.row_sum_error},
          {"min_reduced_weight", d.min_reduced_weight},
          {"source_conservation_error", d.source_conservation_error},
          {"connected", d.connected},
          {"snapped_weights", d.snapped_weights}};
}

inline json to_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < a.cols(); ++j) r.push_back(a(i, j));
    rows.push_back(r);
  }
  return rows;
}

/// Reduced instance (variable source kept in "f0") plus the lift metadata.
inline json to_json(const ReducedSystem& rs, const WeightedGraph& full) {
  json j = to_json(rs.graph(), rs.equation(), rs.f0_tilde());
  json kept = json::array(), removed = json::array();
  for (Index x : rs.part().kept) kept.push_back(full.ids()[static_cast<std::size_t>(x)]);
  for (Index x : rs.part().removed) removed.push_back(full.ids()[static_cast<std::size_t>(x)]);
  json lift = {{"kept", kept}, {"removed", removed}, {"det_r", rs.det_r()}};
  if (rs.part().removed.size() <= 50) {
    lift["q"] = to_json(rs.q());
    lift["r"] = to_json(rs.r());
  }
  j["lift"] = lift;
  j["diagnostics"] = to_json(rs.diagnostics());
  return j;
}

}  // namespace expgraph

// expgraph: solve, degree, reduce, scan, examples and verify on instance files.
//
// Exit codes: 0 completed run, 1 verify found failures, 2 malformed input,
// 3 contradictory configuration, 4 internal invariant breach.

#include "expgraph/expgraph.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace expgraph;

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string file;
  std::string format = "json";
  std::string output;
  std::optional<double> tol, box;
  std::optional<int> budget;
  std::optional<std::uint64_t> seed;
};

std::uint64_t default_seed() {
  if (const char* s = std::getenv("EXPGRAPH_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ConfigError(std::string("EXPGRAPH_SEED is not an integer: ") + s);
    }
  }
  return 0;
}

SolverConfig make_config(const Common& o, const Instance* inst) {
  SolverConfig cfg;
  cfg.seed = default_seed();
  if (inst) cfg = parse_config(inst->config, cfg);
  if (o.tol) cfg.tol = *o.tol;
  if (o.box) cfg.box_radius = *o.box;
  if (o.budget) cfg.budget = *o.budget;
  if (o.seed) cfg.seed = *o.seed;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

void emit(const Common& o, const std::string& text) {
  if (o.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(o.output);
  if (!out) throw std::runtime_error("cannot write " + o.output);
  out << text;
}

json run_report(const std::string& command, const json& instance, const SolverConfig& cfg, json results,
                double seconds) {
  return {{"command", command},
          {"instance_digest", instance.is_null() ? json(nullptr) : json(digest(instance))},
          {"config", to_json(cfg)},
          {"seed", cfg.seed},
          {"version", kVersion},
          {"results", std::move(results)},
          {"timings", {{"seconds", seconds}}}};
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
  return s + "\n";
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_plot_script(const std::string& path, const std::string& csv, const std::string& xlabel,
                       const std::string& ylabel, int xcol, int ycol) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "set datafile separator ','\n"
      << "set key off\nset xlabel '" << xlabel << "'\nset ylabel '" << ylabel << "'\n"
      << "plot '" << csv << "' every ::1 using " << xcol << ":" << ycol << " with linespoints\n";
}

// --------------------------------------------------------------------------

int cmd_solve(const Common& o, const std::string& from) {
  const auto t0 = std::chrono::steady_clock::now();
  const Instance inst = load_instance(o.file);
  const SolverConfig cfg = make_config(o, &inst);
  const WeightedGraph& g = inst.graph;

  // Variable source: solve the constant-term form and shift back.
  ExpNonlinearity eq = inst.eq;
  VertexFunction shift = VertexFunction::Zero(g.size());
  if (inst.f0) {
    const VertexFunction full = *inst.f0 + VertexFunction::Constant(g.size(), inst.eq.constant());
    NormalizedSource ns = normalize_f0(g, full, inst.eq);
    eq = ns.equation;
    shift = ns.shift;
  }
  std::vector<VertexFunction> extra;
  if (!from.empty()) {
    std::ifstream in(from);
    if (!in) throw MalformedInstance("cannot open " + from);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw MalformedInstance(std::string("invalid JSON in --from: ") + e.what());
    }
    if (j.is_object() && j.contains("u")) j = j.at("u");
    extra.push_back(detail::vertex_function(j, g.size(), "initial guess") - shift);
  }
  SolutionSet set = multistart_enumerate(g, eq, cfg, extra);
  for (auto& s : set.solutions) {
    s.u += shift;
    if (inst.f0) {
      const VertexFunction r = residual(g, inst.eq, s.u, *inst.f0);
      s.residual_norm = inf_norm(r);
      s.certified = s.certified && s.residual_norm <= std::max(cfg.tol, 1e-9);
    }
  }
  if (o.format == "csv") {
    std::string out = "index,vertex,u,residual_norm,jac_sign,certified\n";
    for (std::size_t i = 0; i < set.size(); ++i)
      for (Index x = 0; x < g.size(); ++x)
        out += csv_row({std::to_string(i), g.ids()[static_cast<std::size_t>(x)], num(set.solutions[i].u(x)),
                        num(set.solutions[i].residual_norm), std::to_string(set.solutions[i].jac_sign),
                        set.solutions[i].certified ? "true" : "false"});
    emit(o, out);
    return 0;
  }
  json res = to_json(set);
  res["truncated_degree"] = inst.eq.truncated();
  emit(o, run_report("solve", to_json(inst), cfg, res, elapsed(t0)).dump(2) + "\n");
  return 0;
}

int cmd_degree(const Common& o, bool predict_only, bool homotopy, int samples, const std::string& plot) {
  const auto t0 = std::chrono::steady_clock::now();
  if (predict_only && homotopy) throw ConfigError("--predict-only and --homotopy exclude each other");
  if (samples < 2) throw ConfigError("--samples must be at least 2");
  const Instance inst = load_instance(o.file);
  const SolverConfig cfg = make_config(o, &inst);
  if (inst.f0) throw ConfigError("degree runs on constant-term instances; reduce or normalize f0 first");
  const WeightedGraph& g = inst.graph;
  const CaseLabel label = classify(g, inst.eq);
  json res = {{"structural", to_string(label.structural)},
              {"regime", to_string(label.regime)},
              {"predicted", optional_int(predicted_degree(g, inst.eq))}};
  if (label.quadratic) res["quadratic_case"] = to_string(*label.quadratic);
  if (!predict_only && !homotopy) res["report"] = to_json(empirical_degree(g, inst.eq, cfg));
  if (homotopy) {
    HomotopyPath path = [&] {
      try {
        return canonical_homotopy(g, inst.eq);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }();
    HomotopyTrack tr;
    try {
      tr = track_homotopy(g, path, cfg, samples);
    } catch (const GuardViolation& e) {
      throw ConfigError(e.what());
    }
    res["homotopy"] = to_json(tr);
    res["homotopy"]["description"] = path.description();
    if (o.format == "csv" || !plot.empty()) {
      std::string csv = "t,degree,solutions,certified\n";
      for (const auto& s : tr.samples)
        csv += csv_row({num(s.t), s.report.empirical ? std::to_string(*s.report.empirical) : "",
                        std::to_string(s.report.solutions.size()), s.report.certified ? "true" : "false"});
      if (o.format == "csv") {
        emit(o, csv);
        if (!plot.empty()) write_plot_script(plot, o.output.empty() ? "track.csv" : o.output, "t", "degree", 1, 2);
        return 0;
      }
      if (!plot.empty()) {
        const std::string csv_path = plot + ".csv";
        std::ofstream(csv_path) << csv;
        write_plot_script(plot, csv_path, "t", "degree", 1, 2);
      }
    }
  }
  emit(o, run_report("degree", to_json(inst), cfg, res, elapsed(t0)).dump(2) + "\n");
  return 0;
}

int cmd_reduce(const Common& o) {
  const Instance inst = load_instance(o.file);
  const VertexFunction f0 = inst.f0 ? *inst.f0 : VertexFunction::Zero(inst.graph.size());
  ReducedSystem rs = [&] {
    try {
      return schur_reduce(inst.graph, inst.eq, f0);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  emit(o, to_json(rs, inst.graph).dump(2) + "\n");
  return 0;
}

int cmd_scan(const Common& o, const std::string& direction, double c_max, double bracket_tol, const std::string& plot) {
  const auto t0 = std::chrono::steady_clock::now();
  const Instance inst = load_instance(o.file);
  const SolverConfig cfg = make_config(o, &inst);
  if (inst.f0) throw ConfigError("scan runs on constant-term instances");
  if (!(c_max > 0.0) || !(bracket_tol > 0.0)) throw ConfigError("--c-max and --bracket-tol must be positive");
  const Structural s = structural_case(inst.eq);
  const int natural = s == Structural::a_star ? 1 : -1;
  if (direction != "auto") {
    const int d = direction == "+" || direction == "+1" || direction == "1" ? 1 : (direction == "-" || direction == "-1" ? -1 : 0);
    if (d == 0) throw ConfigError("--direction must be auto, +1 or -1");
    if (d != natural) throw ConfigError("requested direction contradicts the instance's case");
  }
  CnEstimate est;
  try {
    est = estimate_cn(inst.graph, inst.eq, cfg, {c_max, bracket_tol, 0.0});
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    json res = {{"hypothesis_violation", e.what()}};
    emit(o, run_report("scan", to_json(inst), cfg, res, elapsed(t0)).dump(2) + "\n");
    return 0;
  }
  std::string csv = "c,solutions,min_residual\n";
  for (const auto& p : est.probes)
    csv += csv_row({num(p.c), std::to_string(p.solutions), std::isfinite(p.min_residual) ? num(p.min_residual) : ""});
  if (!plot.empty()) {
    const std::string csv_path = o.format == "csv" && !o.output.empty() ? o.output : plot + ".csv";
    if (o.format != "csv" || o.output.empty()) std::ofstream(csv_path) << csv;
    write_plot_script(plot, csv_path, "c", "solutions", 1, 2);
  }
  if (o.format == "csv") {
    emit(o, csv);
    return 0;
  }
  emit(o, run_report("scan", to_json(inst), cfg, to_json(est), elapsed(t0)).dump(2) + "\n");
  return 0;
}

int cmd_examples(const Common& o, const std::string& kind, const std::vector<double>& params, double a, double b) {
  const auto t0 = std::chrono::steady_clock::now();
  const SolverConfig cfg = make_config(o, nullptr);
  ExampleKind k;
  try {
    k = parse_example_kind(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (params.empty()) throw ConfigError("--params needs at least one value");
  ParamSequence seq;
  try {
    seq = blowup_family(k, params, a, b, cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const Trichotomy tri = classify_trichotomy(seq);
  if (o.format == "csv") {
    std::string csv = "param,min_u,max_u,verdict\n";
    for (const auto& e : seq.entries) {
      const std::string verdict = e.verdict ? (e.verdict->certified() ? "no-solution" : "unknown") : "solved";
      if (e.solutions.empty()) csv += csv_row({num(e.param), "", "", verdict});
      for (const auto& s : e.solutions) csv += csv_row({num(e.param), num(s.u.minCoeff()), num(s.u.maxCoeff()), verdict});
    }
    emit(o, csv);
    return 0;
  }
  json entries = json::array();
  for (const auto& e : seq.entries) {
    json sols = json::array();
    for (const auto& s : e.solutions) sols.push_back(to_json(s));
    json je = {{"param", e.param}, {"t", optional_double(e.t)}, {"identity_residual", e.identity_residual}, {"solutions", sols}};
    if (e.verdict) je["verdict"] = {{"certified", e.verdict->certified()}, {"reason", e.verdict->reason}};
    entries.push_back(je);
  }
  json res = {{"kind", seq.kind}, {"trichotomy", to_string(tri)}, {"margin", trichotomy_margin(seq)}, {"entries", entries}};
  emit(o, run_report("examples", nullptr, cfg, res, elapsed(t0)).dump(2) + "\n");
  return 0;
}

// --------------------------------------------------------------------------
// verify: bundled instances with "expect" blocks plus fixed reproduction checks

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Check> verify_instance(const fs::path& path, const SolverConfig& base) {
  std::vector<Check> out;
  std::ifstream in(path);
  const json j = json::parse(in);
  const Instance inst = parse_instance(j);
  const SolverConfig cfg = parse_config(inst.config, base);
  const std::string stem = path.stem().string();
  const json expect = j.value("expect", json::object());
  if (expect.contains("predicted_degree")) {
    const auto p = predicted_degree(inst.graph, inst.eq);
    const bool ok = expect["predicted_degree"].is_null() ? !p : (p && *p == expect["predicted_degree"].get<int>());
    out.push_back({stem + ": predicted degree", ok, p ? std::to_string(*p) : "undefined"});
  }
  if (expect.contains("degree")) {
    const DegreeReport r = empirical_degree(inst.graph, inst.eq, cfg);
    const bool ok = r.certified && r.empirical && *r.empirical == expect["degree"].get<int>();
    out.push_back({stem + ": empirical degree", ok,
                   r.empirical ? std::to_string(*r.empirical) + " from " + std::to_string(r.solutions.size()) + " solutions"
                               : "uncertified"});
  }
  if (expect.contains("solutions")) {
    const SolutionSet s = multistart_enumerate(inst.graph, inst.eq, cfg);
    out.push_back({stem + ": solution count", static_cast<int>(s.size()) == expect["solutions"].get<int>(),
                   std::to_string(s.size())});
  }
  if (expect.contains("no_solution")) {
    const NonexistenceReport r = nonexistence_check(inst.graph, inst.eq);
    out.push_back({stem + ": nonexistence", r.certified() == expect["no_solution"].get<bool>(), r.reason});
  }
  if (expect.contains("reduced_vertices")) {
    const VertexFunction f0 = inst.f0 ? *inst.f0 : VertexFunction::Zero(inst.graph.size());
    const ReducedSystem rs = schur_reduce(inst.graph, inst.eq, f0);
    const auto& d = rs.diagnostics();
    const bool ok = static_cast<int>(rs.graph().size()) == expect["reduced_vertices"].get<int>() &&
                    d.row_sum_error <= 1e-10 && d.source_conservation_error <= 1e-10 && d.column_sum_error <= 1e-10;
    out.push_back({stem + ": reduction invariants", ok, std::to_string(rs.graph().size()) + " kept"});
  }
  return out;
}

std::vector<Check> verify_builtin(const SolverConfig& cfg) {
  std::vector<Check> out;
  // Blow-up families: identities and the downward trend.
  for (ExampleKind k : {ExampleKind::ex34, ExampleKind::ex35, ExampleKind::ex36}) {
    const ParamSequence seq = blowup_family(k, {1e-1, 1e-2, 1e-3, 1e-4}, 2.0, 1.0, cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < 2; ++i) worst = std::max(worst, seq.entries[i].identity_residual);
    out.push_back({to_string(k) + ": scalar identity", worst <= 1e-10, "residual " + num(worst)});
    out.push_back({to_string(k) + ": trichotomy", classify_trichotomy(seq) == Trichotomy::to_minus_infinity,
                   to_string(classify_trichotomy(seq))});
  }
  const ParamSequence s53 = blowup_family(ExampleKind::ex53, {100.0, 0.1}, 2.0, 1.0, cfg);
  out.push_back({"ex53: K = 100 certified", s53.entries[0].verdict->certified(), s53.entries[0].verdict->reason});
  out.push_back({"ex53: K = 0.1 solvable", !s53.entries[1].solutions.empty(),
                 std::to_string(s53.entries[1].solutions.size()) + " solutions"});
  // Series elimination on a 3-path.
  const WeightedGraph p3 = WeightedGraph::unit(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const ExpNonlinearity eq({(VertexFunction(3) << 1.0, 0.0, -2.0).finished()}, 0.5);
  const ReducedSystem rs = schur_reduce(p3, eq);
  out.push_back({"reduction: series weight 1/2", std::abs(rs.graph().weight(0, 1) - 0.5) <= 1e-14,
                 num(rs.graph().weight(0, 1))});
  // Unique solution of the reduced case-(d) system.
  const WeightedGraph p2 = two_vertex_unit_graph();
  const ExpNonlinearity ed({VertexFunction::Ones(2), VertexFunction::Constant(2, -1.0)}, 0.0);
  const SolutionSet sd = multistart_enumerate(p2, ed, cfg);
  out.push_back({"case (d) endpoint: unique zero solution", sd.size() == 1 && inf_norm(sd.solutions[0].u) <= 1e-8,
                 std::to_string(sd.size()) + " solutions"});
  return out;
}

int cmd_verify(const Common& o, const std::string& data_dir) {
  const SolverConfig cfg = make_config(o, nullptr);
  std::vector<Check> checks = verify_builtin(cfg);
  if (!data_dir.empty()) {
    if (!fs::is_directory(data_dir)) throw MalformedInstance("no such directory: " + data_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(data_dir))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto c = verify_instance(f, cfg);
      checks.insert(checks.end(), c.begin(), c.end());
    }
  }
  int failed = 0;
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.pass ? "PASS  " : "FAIL  ") << c.name << "  (" << c.detail << ")\n";
    failed += c.pass ? 0 : 1;
  }
  os << checks.size() - failed << "/" << checks.size() << " passed\n";
  emit(o, os.str());
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential nonlinearities on weighted graphs"};
  app.require_subcommand(1);
  Common o;
  const auto add_common = [&](CLI::App* sub, bool needs_file) {
    if (needs_file) sub->add_option("file", o.file, "instance file")->required()->check(CLI::ExistingFile);
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("-o,--output", o.output, "write to file instead of stdout");
  };
  const auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--tol", o.tol, "residual target");
    sub->add_option("--budget", o.budget, "number of starts");
    sub->add_option("--box", o.box, "search radius");
    sub->add_option("--seed", o.seed, "RNG seed (default: EXPGRAPH_SEED or 0)");
  };

  std::string from;
  auto* solve = app.add_subcommand("solve", "enumerate solutions");
  add_common(solve, true);
  add_solver(solve);
  solve->add_option("--from", from, "initial guess file (array or {\"u\": [...]})")->check(CLI::ExistingFile);

  bool predict_only = false, homotopy = false;
  int samples = 64;
  std::string plot;
  auto* degree = app.add_subcommand("degree", "predicted and empirical degree");
  add_common(degree, true);
  add_solver(degree);
  degree->add_flag("--predict-only", predict_only, "classify only, no solving");
  degree->add_flag("--homotopy", homotopy, "track the canonical homotopy");
  degree->add_option("--samples", samples, "homotopy samples");
  degree->add_option("--plot", plot, "write a gnuplot script");

  auto* reduce = app.add_subcommand("reduce", "eliminate vertices with vanishing coefficients");
  add_common(reduce, true);

  std::string direction = "auto";
  double c_max = 1e3, bracket_tol = 1e-3;
  auto* scan = app.add_subcommand("scan", "bisect the solvability threshold in c");
  add_common(scan, true);
  add_solver(scan);
  scan->add_option("--direction", direction, "auto, +1 or -1");
  scan->add_option("--c-max", c_max, "scan ceiling for |c|");
  scan->add_option("--bracket-tol", bracket_tol, "relative bracket width");
  scan->add_option("--plot", plot, "write a gnuplot script");

  std::string kind;
  std::vector<double> params;
  double a = 2.0, b = 1.0;
  auto* examples = app.add_subcommand("examples", "two-vertex example families");
  add_common(examples, false);
  add_solver(examples);
  examples->add_option("--kind", kind, "ex34, ex35, ex36, ex51, ex52 or ex53")->required();
  examples->add_option("--params", params, "parameter grid")->delimiter(',')->required();
  examples->add_option("--a", a, "ex53: a");
  examples->add_option("--b", b, "ex53: b");

  std::string data_dir;
  auto* verify = app.add_subcommand("verify", "reproduction checks with a pass/fail matrix");
  add_common(verify, false);
  add_solver(verify);
  verify->add_option("--data", data_dir, "directory of instance files with \"expect\" blocks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*solve) return cmd_solve(o, from);
    if (*degree) return cmd_degree(o, predict_only, homotopy, samples, plot);
    if (*reduce) return cmd_reduce(o);
    if (*scan) return cmd_scan(o, direction, c_max, bracket_tol, plot);
    if (*examples) return cmd_examples(o, kind, params, a, b);
    if (*verify) return cmd_verify(o, data_dir);
  } catch (const MalformedInstance& e) {
    std::cerr << "malformed input: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "malformed input: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 3;
  } catch (const InvariantError& e) {
    std::cerr << "invariant breach: " << e.what() << "\n";
    if (!o.file.empty()) {
      try {
        std::cerr << "instance: " << to_json(load_instance(o.file)).dump() << "\n";
      } catch (const std::exception&) {
      }
    }
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

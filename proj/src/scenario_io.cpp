#include "netheat/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "netheat/analysis.hpp"
#include "netheat/error.hpp"
#include "netheat/oracle.hpp"
#include "netheat/spectral.hpp"

namespace netheat {

namespace {

using json = nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::schema, path + ": " + what);
}

// Object reader that remembers which keys were looked at, so that anything
// left over can be reported as an unknown field.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) schema_error(path_, "expected object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) schema_error(at(key), "missing required field");
    return *v;
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!fallback) schema_error(at(key), "missing required field");
      return *fallback;
    }
    return as_number(*v, at(key));
  }

  std::size_t count(const std::string& key, std::optional<std::size_t> fallback = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!fallback) schema_error(at(key), "missing required field");
      return *fallback;
    }
    return as_count(*v, at(key));
  }

  bool flag(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) schema_error(at(key), "expected boolean");
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!fallback) schema_error(at(key), "missing required field");
      return *fallback;
    }
    if (!v->is_string()) schema_error(at(key), "expected string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) schema_error(at(key), "unknown field");
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) schema_error(path, "expected number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_error(path, "expected finite number");
    return d;
  }

  static std::size_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() < 0) schema_error(path, "expected nonnegative integer");
    return static_cast<std::size_t>(v.get<long long>());
  }

  static std::vector<double> as_numbers(const json& v, const std::string& path) {
    if (!v.is_array()) schema_error(path, "expected array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

double json_infinity_or_number(const json& v, const std::string& path) {
  if (v.is_null()) return kInfiniteHorizon;
  return Section::as_number(v, path);
}

CoefficientProfile parse_profile(const json& v, const std::string& path) {
  if (v.is_number()) return CoefficientProfile::constant(Section::as_number(v, path));
  Section s(v, path);
  const std::string kind = s.text("kind");
  try {
    CoefficientProfile out = [&] {
      if (kind == "constant") return CoefficientProfile::constant(s.number("value"));
      if (kind == "affine") {
        const double v0 = s.number("v0");
        const double slope = s.number("slope");
        const json* lo = s.find("lo");
        const json* hi = s.find("hi");
        return CoefficientProfile::affine(
            v0, slope, lo ? Section::as_number(*lo, s.at("lo")) : -kInfiniteHorizon,
            hi ? Section::as_number(*hi, s.at("hi")) : kInfiniteHorizon);
      }
      if (kind == "piecewise_linear")
        return CoefficientProfile::piecewise_linear(Section::as_numbers(s.require("times"), s.at("times")),
                                                    Section::as_numbers(s.require("values"), s.at("values")));
      if (kind == "exp")
        return CoefficientProfile::exp_approach(s.number("a"), s.number("b"), s.number("rate"));
      schema_error(s.at("kind"), "unknown profile kind '" + kind + "'");
    }();
    s.finish();
    return out;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) schema_error(path, e.what());
    throw;
  }
}

MetricGraph parse_graph(const json& v) {
  Section s(v, "graph");
  const std::size_t n = s.count("vertices");
  const json& edges = s.require("edges");
  if (!edges.is_array()) schema_error("graph.edges", "expected array of [tail, head] pairs");
  std::vector<Edge> list;
  for (std::size_t j = 0; j < edges.size(); ++j) {
    const auto p = indexed("graph.edges", j);
    if (!edges[j].is_array() || edges[j].size() != 2) schema_error(p, "expected [tail, head]");
    const std::size_t a = Section::as_count(edges[j][0], p + "[0]");
    const std::size_t b = Section::as_count(edges[j][1], p + "[1]");
    if (a < 1 || b < 1) schema_error(p, "vertex ids start at 1");
    list.push_back({a - 1, b - 1});
  }
  const bool strict = s.flag("strict", false);
  s.finish();
  return MetricGraph::build(n, list, strict);
}

std::vector<std::vector<double>> parse_per_edge(const json& v, const std::string& path, std::size_t m,
                                                std::size_t min_len) {
  if (!v.is_array()) schema_error(path, "expected one array per edge");
  if (v.size() != m)
    schema_error(path, "expected " + std::to_string(m) + " entries (one per edge), got " +
                           std::to_string(v.size()));
  std::vector<std::vector<double>> out;
  for (std::size_t j = 0; j < m; ++j) {
    out.push_back(Section::as_numbers(v[j], indexed(path, j)));
    if (out.back().size() < min_len)
      schema_error(indexed(path, j), "expected at least " + std::to_string(min_len) + " values");
  }
  return out;
}

InitialSpec parse_initial(const json& v, std::size_t m) {
  Section s(v, "initial");
  const std::string kind = s.text("kind");
  InitialSpec out;
  if (kind == "constant") {
    out.kind = InitialSpec::Constant{s.number("value", 1.0)};
  } else if (kind == "eigenmode") {
    const std::size_t k = s.count("k");
    if (k < 1) schema_error("initial.k", "eigenmodes are counted from 1");
    out.kind = InitialSpec::Eigenmode{k, s.number("scale", 1.0)};
  } else if (kind == "bump") {
    const std::size_t e = s.count("edge");
    if (e < 1 || e > m) schema_error("initial.edge", "edge ids run from 1 to " + std::to_string(m));
    InitialSpec::Bump b{e - 1, s.number("center", 0.5), s.number("width", 0.5), s.number("height", 1.0),
                        s.number("base", 0.0)};
    if (!(b.width > 0.0)) schema_error("initial.width", "must be positive");
    out.kind = b;
  } else if (kind == "polynomial") {
    out.kind = InitialSpec::Polynomial{parse_per_edge(s.require("edges"), "initial.edges", m, 1)};
  } else if (kind == "nodal") {
    out.kind = InitialSpec::Nodal{parse_per_edge(s.require("edges"), "initial.edges", m, 2)};
  } else {
    schema_error("initial.kind", "unknown initial condition '" + kind + "'");
  }
  s.finish();
  return out;
}

std::vector<ForcingTerm> parse_forcing(const json& v, std::size_t m) {
  if (v.is_string()) {
    if (v.get<std::string>() != "none") schema_error("forcing", "expected \"none\" or an object");
    return {};
  }
  Section s(v, "forcing");
  const json& terms = s.require("terms");
  s.finish();
  if (!terms.is_array()) schema_error("forcing.terms", "expected array");
  std::vector<ForcingTerm> out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto path = indexed("forcing.terms", i);
    Section t(terms[i], path);
    ForcingTerm term;
    if (const json* e = t.find("edges")) {
      if (!e->is_array()) schema_error(t.at("edges"), "expected array of edge ids");
      for (std::size_t k = 0; k < e->size(); ++k) {
        const std::size_t id = Section::as_count((*e)[k], indexed(t.at("edges"), k));
        if (id < 1 || id > m) schema_error(indexed(t.at("edges"), k), "edge ids run from 1 to " + std::to_string(m));
        term.edges.push_back(id - 1);
      }
    }
    Section g(t.require("g"), t.at("g"));
    const std::string kind = g.text("kind");
    if (kind == "polynomial") {
      term.g = ForcingTerm::Polynomial{Section::as_numbers(g.require("coefficients"), g.at("coefficients"))};
    } else if (kind == "cosine") {
      term.g = ForcingTerm::Cosine{g.number("amplitude", 1.0), g.number("frequency", 1.0), g.number("phase", 0.0)};
    } else {
      schema_error(g.at("kind"), "unknown forcing shape '" + kind + "'");
    }
    g.finish();
    if (const json* p = t.find("psi")) term.psi = parse_profile(*p, t.at("psi"));
    t.finish();
    out.push_back(std::move(term));
  }
  return out;
}

double polynomial(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

double nodal(const std::vector<double>& s, double x) {
  const double pos = x * static_cast<double>(s.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), s.size() - 2);
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * s[i] + w * s[i + 1];
}

// Per-edge initial function for every kind except eigenmodes.
std::function<double(EdgeId, double)> initial_function(const InitialSpec& spec) {
  return std::visit(
      [](const auto& k) -> std::function<double(EdgeId, double)> {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, InitialSpec::Constant>) {
          return [v = k.value](EdgeId, double) { return v; };
        } else if constexpr (std::is_same_v<K, InitialSpec::Bump>) {
          return [k](EdgeId j, double x) {
            if (j != k.edge || std::abs(x - k.center) >= 0.5 * k.width) return k.base;
            const double c = std::cos(std::numbers::pi * (x - k.center) / k.width);
            return k.base + k.height * c * c;
          };
        } else if constexpr (std::is_same_v<K, InitialSpec::Polynomial>) {
          return [k](EdgeId j, double x) { return polynomial(k.edges[j], x); };
        } else if constexpr (std::is_same_v<K, InitialSpec::Nodal>) {
          return [k](EdgeId j, double x) { return nodal(k.edges[j], x); };
        } else {
          return {};
        }
      },
      spec.kind);
}

void check_initial_in_v(const MetricGraph& graph, const InitialSpec& spec) {
  const auto f = initial_function(spec);
  if (!f) return;
  std::vector<EndValues> ends;
  for (EdgeId j = 0; j < graph.edge_count(); ++j) ends.push_back({f(j, 0.0), f(j, 1.0)});
  if (!graph.continuity_trace(ends))
    throw Error(ErrorKind::invalid_argument,
                "initial not in V: edge values disagree at a shared vertex");
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

AnalysisSpec parse_analysis(const json& v, double t_end) {
  Section s(v, "analysis");
  AnalysisSpec a;
  if (const json* g = s.find("spectral_grid")) {
    if (g->is_array()) {
      a.spectral_times = Section::as_numbers(*g, "analysis.spectral_grid");
    } else {
      Section gs(*g, "analysis.spectral_grid");
      const double start = gs.number("start", 0.0);
      const double stop = gs.number("stop", t_end);
      const std::size_t count = gs.count("count", 21);
      gs.finish();
      if (count < 1 || !(stop >= start) || start < 0.0)
        schema_error("analysis.spectral_grid", "need count >= 1 and 0 <= start <= stop");
      a.spectral_times = linspace(start, stop, count);
    }
    for (std::size_t i = 0; i + 1 < a.spectral_times.size(); ++i)
      if (!(a.spectral_times[i] < a.spectral_times[i + 1]))
        schema_error("analysis.spectral_grid", "times must be strictly increasing");
    if (a.spectral_times.empty() || a.spectral_times.front() < 0.0)
      schema_error("analysis.spectral_grid", "times must be nonempty and nonnegative");
  } else {
    a.spectral_times = linspace(0.0, t_end, 21);
  }
  a.k = s.count("k", 4);
  if (a.k < 2) schema_error("analysis.k", "must be >= 2");
  if (const json* w = s.find("window"); w && !w->is_null()) {
    const auto vals = Section::as_numbers(*w, "analysis.window");
    if (vals.size() != 2 || !(vals[0] < vals[1])) schema_error("analysis.window", "expected [t_a, t_b] with t_a < t_b");
    a.window = std::make_pair(vals[0], vals[1]);
  }
  a.extend_to_limit = s.flag("extend_to_limit", true);
  a.settle_tol = s.number("settle_tol", 1e-6);
  if (!(a.settle_tol > 0.0)) schema_error("analysis.settle_tol", "must be positive");
  if (const json* r = s.find("refinement")) {
    if (!r->is_array()) schema_error("analysis.refinement", "expected array of N values");
    a.refinement.clear();
    for (std::size_t i = 0; i < r->size(); ++i)
      a.refinement.push_back(Section::as_count((*r)[i], indexed("analysis.refinement", i)));
  }
  if (const json* d = s.find("dts")) a.dts = Section::as_numbers(*d, "analysis.dts");
  s.finish();
  return a;
}

Scenario parse_json(const json& root) {
  Section top(root, "");
  const std::string name = top.text("name", std::string{});
  MetricGraph graph = parse_graph(top.require("graph"));
  const std::size_t m = graph.edge_count();

  SolverConfig solver;
  std::size_t interior = 31;
  std::string layout = "dof";
  std::size_t edge_points = 5;
  if (const json* v = top.find("solver")) {
    Section s(*v, "solver");
    interior = s.count("N", 31);
    if (interior < 1) schema_error("solver.N", "must be >= 1");
    solver.dt = s.number("dt", 0.01);
    solver.theta = s.number("theta", 1.0);
    solver.t_end = s.number("t_end", 1.0);
    solver.lumped = s.flag("lumped", false);
    solver.linear_tol = s.number("linear_tol", 1e-12);
    solver.output_stride = s.count("output_stride", 1);
    layout = s.text("csv_layout", std::string("dof"));
    if (layout != "dof" && layout != "edge") schema_error("solver.csv_layout", "expected \"dof\" or \"edge\"");
    edge_points = s.count("edge_points", 5);
    if (edge_points < 2) schema_error("solver.edge_points", "must be >= 2");
    s.finish();
  }
  try {
    solver.validate();
  } catch (const Error& e) {
    schema_error("solver", e.what());
  }

  CoefficientSet coeffs = CoefficientSet::uniform(m);
  double epsilon = 0.01;
  double horizon = solver.t_end;
  if (const json* v = top.find("coefficients")) {
    Section s(*v, "coefficients");
    epsilon = s.number("epsilon", 0.01);
    if (!(epsilon > 0.0 && epsilon < 1.0)) schema_error("coefficients.epsilon", "must lie in (0, 1)");
    if (const json* h = s.find("horizon")) horizon = json_infinity_or_number(*h, "coefficients.horizon");
    if (const json* e = s.find("edges")) {
      if (!e->is_array()) schema_error("coefficients.edges", "expected array");
      if (e->size() != m)
        throw Error(ErrorKind::schema, "coefficients.length: expected " + std::to_string(m) +
                                           " entries (one per edge), got " + std::to_string(e->size()));
      coeffs.mu.clear();
      coeffs.c.clear();
      for (std::size_t j = 0; j < m; ++j) {
        const auto path = indexed("coefficients.edges", j);
        Section es((*e)[j], path);
        coeffs.mu.push_back(parse_profile(es.require("mu"), es.at("mu")));
        coeffs.c.push_back(parse_profile(es.require("c"), es.at("c")));
        es.finish();
      }
    }
    s.finish();
  }
  if (horizon < solver.t_end) schema_error("coefficients.horizon", "must be >= solver.t_end");
  BoundsCertificate cert = certify_bounds(coeffs, epsilon, horizon);

  InitialSpec initial;
  if (const json* v = top.find("initial")) initial = parse_initial(*v, m);
  if (const auto* e = std::get_if<InitialSpec::Eigenmode>(&initial.kind)) {
    if (e->k > graph.vertex_count() + m * interior)
      schema_error("initial.k", "exceeds the number of degrees of freedom");
  }
  check_initial_in_v(graph, initial);

  std::vector<ForcingTerm> forcing;
  if (const json* v = top.find("forcing")) forcing = parse_forcing(*v, m);

  AnalysisSpec analysis;
  analysis.spectral_times = linspace(0.0, solver.t_end, 21);
  if (const json* v = top.find("analysis")) analysis = parse_analysis(*v, solver.t_end);
  for (double t : analysis.spectral_times)
    if (t > horizon) schema_error("analysis.spectral_grid", "times beyond coefficients.horizon");
  top.finish();

  return Scenario{.name = name,
                  .graph = std::move(graph),
                  .coefficients = std::move(coeffs),
                  .epsilon = epsilon,
                  .horizon = horizon,
                  .certificate = std::move(cert),
                  .initial = std::move(initial),
                  .forcing = std::move(forcing),
                  .interior_nodes = interior,
                  .solver = solver,
                  .csv_layout = layout,
                  .edge_points = edge_points,
                  .analysis = std::move(analysis)};
}

// Output helpers -----------------------------------------------------------

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

std::string csv_row(double first, const Vector& rest) {
  std::string line = format_number(first);
  for (Eigen::Index i = 0; i < rest.size(); ++i) {
    line += ',';
    line += format_number(rest[i]);
  }
  line += '\n';
  return line;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json array_of(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v[i]));
  return a;
}

json gronwall_json(const GronwallReport& g) {
  return {{"applicable", g.applicable},
          {"satisfied", g.satisfied},
          {"rate", g.rate},
          {"epsilon", g.epsilon},
          {"worst_ratio", g.worst_ratio},
          {"worst_margin", number_or_null(g.worst_margin)},
          {"violations", g.violations},
          {"first_violation", g.first_violation ? json(*g.first_violation) : json(nullptr)}};
}

SpectralTrack scenario_track(const Scenario& sc, const AssembledSystem& sys) {
  const std::size_t k = std::min(sc.analysis.k, sys.dimension());
  return sc.analysis.extend_to_limit
             ? track_spectrum_to_limit(sys, sc.analysis.spectral_times, k, sc.analysis.settle_tol)
             : track_spectrum(sys, sc.analysis.spectral_times, k);
}

std::string spectrum_csv(const SpectralTrack& track) {
  const auto k = track.eigenvalues.front().size();
  std::string out = "t";
  for (Eigen::Index i = 0; i < k; ++i) out += ",lambda_" + std::to_string(i + 1);
  out += '\n';
  for (std::size_t i = 0; i < track.times.size(); ++i) out += csv_row(track.times[i], track.eigenvalues[i]);
  if (track.limit_eigenvalues) out += csv_row(kInfiniteHorizon, *track.limit_eigenvalues);
  return out;
}

std::string trajectory_csv(const Scenario& sc, const Mesh& mesh, const Trajectory& traj) {
  std::string out = "t";
  if (sc.csv_layout == "dof") {
    for (std::size_t i = 0; i < mesh.total_dofs(); ++i) out += ",u" + std::to_string(i);
    out += '\n';
    for (std::size_t n = 0; n < traj.times.size(); ++n) out += csv_row(traj.times[n], traj.states[n]);
    return out;
  }
  const std::size_t p = sc.edge_points;
  for (EdgeId j = 0; j < mesh.edge_count(); ++j)
    for (std::size_t q = 0; q < p; ++q)
      out += ",e" + std::to_string(j + 1) + "@" +
             format_number(static_cast<double>(q) / static_cast<double>(p - 1));
  out += '\n';
  for (std::size_t n = 0; n < traj.times.size(); ++n) {
    Vector row(static_cast<Eigen::Index>(mesh.edge_count() * p));
    for (EdgeId j = 0; j < mesh.edge_count(); ++j) {
      const Vector s = edge_samples(mesh, traj.states[n], j);
      std::vector<double> samples(s.data(), s.data() + s.size());
      for (std::size_t q = 0; q < p; ++q)
        row[static_cast<Eigen::Index>(j * p + q)] =
            nodal(samples, static_cast<double>(q) / static_cast<double>(p - 1));
    }
    out += csv_row(traj.times[n], row);
  }
  return out;
}

json simulation_json(const Trajectory& traj, const AssembledSystem& sys) {
  double worst = 0.0;
  std::size_t refinements = 0;
  std::size_t cg_steps = 0;
  for (const auto& d : traj.diagnostics) {
    worst = std::max(worst, d.residual);
    refinements += d.refinements;
    if (d.cg_iterations > 0) ++cg_steps;
  }
  const auto mass = mass_series(traj, sys.mass());
  const auto pos = positivity_monitor(traj);
  return {{"steps", traj.diagnostics.size()},
          {"samples", traj.times.size()},
          {"final_time", traj.times.back()},
          {"max_linear_residual", worst},
          {"refinements", refinements},
          {"cg_fallback_steps", cg_steps},
          {"mass_drift", mass.relative_drift()},
          {"min_value", pos.min_value}};
}

// Eigenvalue `index` on graphs with a closed-form spectrum (path or cycle,
// mu == 1); nullopt otherwise.
std::optional<ClosedFormSpectrum> closed_form_family(const Scenario& sc) {
  for (const auto& mu : sc.coefficients.mu) {
    const auto* k = std::get_if<CoefficientProfile::Constant>(&mu.kind());
    if (!k || k->value != 1.0) return std::nullopt;
  }
  const auto& g = sc.graph;
  const std::size_t n = g.vertex_count();
  const std::size_t m = g.edge_count();
  std::size_t max_degree = 0;
  for (VertexId v = 0; v < n; ++v) max_degree = std::max(max_degree, g.degree(v));
  if (max_degree > 2) return std::nullopt;
  const auto len = static_cast<double>(m);
  if (m == n) return ClosedFormSpectrum::cycle(len);
  if (m + 1 == n) return ClosedFormSpectrum::interval(len);
  return std::nullopt;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Scenario parse_scenario_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::schema, std::string("scenario: invalid JSON: ") + e.what());
  }
  return parse_json(root);
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open scenario " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

SourceFunction make_source(const Scenario& sc) {
  if (sc.forcing.empty()) return {};
  return [terms = sc.forcing](EdgeId j, double t, double x) {
    double f = 0.0;
    for (const auto& term : terms) {
      if (!term.edges.empty() && std::find(term.edges.begin(), term.edges.end(), j) == term.edges.end())
        continue;
      const double g = std::visit(
          [x](const auto& shape) {
            using S = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<S, ForcingTerm::Polynomial>) {
              return polynomial(shape.coefficients, x);
            } else {
              return shape.amplitude * std::cos(std::numbers::pi * shape.frequency * x + shape.phase);
            }
          },
          term.g);
      f += g * term.psi.eval(t);
    }
    return f;
  };
}

Vector initial_state(const Scenario& sc, const AssembledSystem& sys) {
  if (const auto* e = std::get_if<InitialSpec::Eigenmode>(&sc.initial.kind)) {
    const auto dec = generalized_eigs(sys.stiffness(0.0), sys.mass(), e->k);
    return e->scale * dec.eigenvectors.col(static_cast<Eigen::Index>(e->k - 1));
  }
  const auto u = interpolate(sc.graph, sys.mesh(), initial_function(sc.initial));
  if (!u) throw Error(ErrorKind::invalid_argument, "initial not in V: edge values disagree at a shared vertex");
  return *u;
}

Command parse_command(std::string_view name) {
  if (name == "validate") return Command::validate;
  if (name == "spectrum") return Command::spectrum;
  if (name == "simulate") return Command::simulate;
  if (name == "analyze") return Command::analyze;
  if (name == "convergence") return Command::convergence;
  throw Error(ErrorKind::invalid_argument, "unknown command '" + std::string(name) + "'");
}

RunReport run(const Scenario& sc, Command command, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const AssembledSystem sys(sc.graph, sc.interior_nodes, sc.coefficients, sc.solver.lumped);
  const SourceFunction source = make_source(sc);
  const Vector u0 = initial_state(sc, sys);

  RunReport report;
  json j;
  j["name"] = sc.name;
  auto emit = [&](const std::string& file, const std::string& content) {
    write_file(out_dir / file, content);
    report.files.push_back(file);
  };

  switch (command) {
    case Command::validate: {
      j["command"] = "validate";
      j["valid"] = true;
      j["vertices"] = sc.graph.vertex_count();
      j["edges"] = sc.graph.edge_count();
      j["dofs"] = sys.dimension();
      j["epsilon"] = sc.epsilon;
      j["horizon"] = number_or_null(sc.horizon);
      j["beta"] = sc.certificate.beta;
      j["lipschitz_mu_max"] = sc.certificate.max_lipschitz_mu();
      break;
    }
    case Command::spectrum: {
      const SpectralTrack track = scenario_track(sc, sys);
      emit("spectrum.csv", spectrum_csv(track));
      const auto regime = classify_regime(sc.coefficients, track.lambda2_lower, sc.horizon);
      j["command"] = "spectrum";
      j["lambda2_lower"] = track.lambda2_lower;
      j["continuity_modulus"] = track.continuity_modulus;
      j["certified"] = track.certified;
      j["limit_eigenvalues"] = track.limit_eigenvalues ? array_of(*track.limit_eigenvalues) : json(nullptr);
      j["regime"] = regime.name();
      j["growth_rate"] = regime.growth_rate;
      break;
    }
    case Command::simulate: {
      const Trajectory traj = simulate(u0, source, sc.solver, sys);
      emit("trajectory.csv", trajectory_csv(sc, sys.mesh(), traj));
      j = simulation_json(traj, sys);
      j["name"] = sc.name;
      j["command"] = "simulate";
      break;
    }
    case Command::analyze: {
      const SpectralTrack track = scenario_track(sc, sys);
      const Trajectory traj = simulate(u0, source, sc.solver, sys);
      emit("spectrum.csv", spectrum_csv(track));
      emit("trajectory.csv", trajectory_csv(sc, sys.mesh(), traj));

      const auto regime = classify_regime(sc.coefficients, track.lambda2_lower, sc.horizon);
      const auto dec = decompose(traj, sys.mass());
      std::vector<double> f_norms;
      if (source)
        for (double t : traj.times) f_norms.push_back(source_norm(sys.mesh(), source, t));
      const auto gronwall = check_gronwall_bound(dec, regime, sc.certificate, track, f_norms);

      j = simulation_json(traj, sys);
      j["name"] = sc.name;
      j["command"] = "analyze";
      j["regime"] = regime.name();
      j["growth_rate"] = regime.growth_rate;
      j["lambda2_lower"] = track.lambda2_lower;
      j["beta"] = sc.certificate.beta;
      j["epsilon"] = 0.01 * track.lambda2_lower;

      bool decay_ok = false;
      try {
        std::optional<FitWindow> window;
        if (sc.analysis.window) window = FitWindow{sc.analysis.window->first, sc.analysis.window->second};
        const auto fit = fit_decay_rate(dec, regime, track.lambda2_lower, sc.certificate.beta, window);
        j["fitted_rate"] = fit.fitted_rate;
        j["predicted_rate"] = fit.predicted_rate;
        j["decay_window"] = {fit.window.t_a, fit.window.t_b};
        j["decay_samples"] = fit.samples;
        decay_ok = fit.bound_satisfied;
        j["decay_bound_satisfied"] = fit.bound_satisfied;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::insufficient_data) throw;
        j["fitted_rate"] = nullptr;
        j["predicted_rate"] = nullptr;
        j["decay_bound_satisfied"] = nullptr;
        j["decay_note"] = e.what();
        decay_ok = true;
      }
      j["gronwall"] = gronwall_json(gronwall);
      j["bound_satisfied"] = decay_ok && gronwall.satisfied;
      if (!source) {
        const auto weighted = check_weighted_energy_bound(
            dec, regime, sc.certificate, track,
            assemble_weighted_mass(sys.mesh(), sc.coefficients, 0.0, false));
        j["weighted_energy_bound"] = gronwall_json(weighted);
      } else {
        j["weighted_energy_bound"] = nullptr;
      }

      j["equilibrium_residual"] = nullptr;
      if (regime.regime == Regime::b_identity) {
        try {
          const auto eq = equilibrium_limit(traj, sys, source);
          j["equilibrium_residual"] = eq.mass_residual;
          j["equilibrium"] = {{"initial_mass", eq.initial_mass},
                              {"f_infinity", eq.f_infinity},
                              {"predicted", eq.predicted},
                              {"final_mass", eq.final_mass},
                              {"mass_residual", eq.mass_residual},
                              {"state_residual", eq.state_residual}};
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::no_convergence) throw;
          j["equilibrium_note"] = e.what();
        }
      }
      break;
    }
    case Command::convergence: {
      j["command"] = "convergence";
      const auto& ns = sc.analysis.refinement;
      std::string csv = "N,h,lambda_err,order\n";
      json spatial;
      if (const auto family = closed_form_family(sc)) {
        const auto study = refinement_study(*family, ns, 1);
        for (const auto& lvl : study.levels)
          csv += format_number(static_cast<double>(lvl.n)) + "," + format_number(lvl.h) + "," +
                 format_number(lvl.error) + "," + (std::isnan(lvl.order) ? "" : format_number(lvl.order)) +
                 "\n";
        spatial = {{"reference", "closed_form"}, {"observed_order", study.observed_order}};
      } else {
        if (ns.size() < 3) schema_error("analysis.refinement", "need at least 3 levels");
        std::vector<double> lambda2(ns.size());
        for (std::size_t i = 0; i < ns.size(); ++i) {
          const AssembledSystem s(sc.graph, ns[i], sc.coefficients);
          lambda2[i] = generalized_eigs(s.stiffness(0.0), s.mass(), 2).eigenvalues[1];
        }
        double prev = std::numeric_limits<double>::quiet_NaN();
        double order = prev;
        for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
          const double err = std::abs(lambda2[i] - lambda2[i + 1]);
          order = std::isnan(prev) ? prev : std::log2(prev / err);
          csv += format_number(static_cast<double>(ns[i])) + "," +
                 format_number(1.0 / static_cast<double>(ns[i] + 1)) + "," + format_number(err) + "," +
                 (std::isnan(order) ? "" : format_number(order)) + "\n";
          prev = err;
        }
        spatial = {{"reference", "successive_differences"}, {"observed_order", number_or_null(order)}};
      }
      emit("convergence.csv", csv);
      j["spatial"] = spatial;

      if (!sc.analysis.dts.empty()) {
        std::optional<Vector> exact;
        if (!source && sc.coefficients.time_independent() && sys.dimension() <= 2000 && !sc.solver.lumped)
          exact = dense_reference_evolution(sys, u0, sc.solver.t_end);
        const auto tc = convergence_study(u0, source, sys, sc.solver, sc.analysis.dts, sc.solver.t_end, exact);
        std::string tcsv = "dt,error,order\n";
        for (std::size_t i = 0; i < tc.errors.size(); ++i)
          tcsv += format_number(tc.dts[i]) + "," + format_number(tc.errors[i]) + "," +
                  (i == 0 ? "" : format_number(tc.orders[i - 1])) + "\n";
        emit("temporal_convergence.csv", tcsv);
        j["temporal"] = {{"reference", tc.exact_reference ? "spectral_oracle" : "successive_differences"},
                         {"observed_order", tc.observed_order}};
      } else {
        j["temporal"] = nullptr;
      }
      break;
    }
  }

  report.files.push_back("report.json");
  j["files"] = report.files;
  report.json = j.dump(2) + "\n";
  write_file(out_dir / "report.json", report.json);
  return report;
}

}  // namespace netheat

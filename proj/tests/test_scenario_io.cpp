#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "netheat/error.hpp"
#include "netheat/scenario_io.hpp"

using namespace netheat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kTriangle = R"({"graph": {"vertices": 3, "edges": [[1, 2], [2, 3], [3, 1]]}})";

std::string triangle_with(const std::string& extra) {
  return R"({"graph": {"vertices": 3, "edges": [[1, 2], [2, 3], [3, 1]]}, )" + extra + "}";
}

ErrorKind kind_of(const std::string& text, std::string* message = nullptr) {
  try {
    parse_scenario_text(text);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::schema;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("netheat_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("parse: minimal triangle with defaults") {
  const auto sc = parse_scenario_text(kTriangle);
  CHECK(sc.graph.vertex_count() == 3);
  CHECK(sc.graph.edge_count() == 3);
  CHECK(sc.graph.edges()[2].tail == 2);
  CHECK(sc.graph.edges()[2].head == 0);
  CHECK(sc.solver.theta == 1.0);
  CHECK(sc.solver.dt == 0.01);
  CHECK(sc.interior_nodes == 31);
  CHECK(sc.coefficients.mu.size() == 3);
  CHECK(sc.coefficients.eval_b(1, 0.5) == 1.0);
  CHECK(sc.forcing.empty());
  CHECK(sc.csv_layout == "dof");
  CHECK(sc.horizon == sc.solver.t_end);
}

TEST_CASE("parse: profiles and forcing") {
  const auto sc = parse_scenario_text(triangle_with(R"(
    "coefficients": {"epsilon": 0.3, "horizon": null, "edges": [
      {"mu": {"kind": "exp", "a": 1, "b": 1, "rate": 1}, "c": 1},
      {"mu": 2, "c": {"kind": "affine", "v0": 1, "slope": 0.5, "hi": 2}},
      {"mu": {"kind": "piecewise_linear", "times": [0, 1], "values": [1, 2]}, "c": 1}]},
    "forcing": {"terms": [{"edges": [2], "g": {"kind": "cosine", "amplitude": 2, "frequency": 1},
                           "psi": {"kind": "constant", "value": 0.5}}]})"));
  CHECK(std::isinf(sc.horizon));
  CHECK(sc.coefficients.mu[0].eval(0) == 2.0);
  CHECK(sc.coefficients.c[1].eval(4) == 2.0);
  CHECK(sc.coefficients.mu[2].eval(0.5) == doctest::Approx(1.5));
  const auto f = make_source(sc);
  REQUIRE(f);
  CHECK(f(0, 0, 0.0) == 0.0);
  CHECK(f(1, 0, 0.0) == doctest::Approx(1.0));
  CHECK(f(1, 3, 1.0) == doctest::Approx(-1.0));
}

TEST_CASE("parse: errors") {
  std::string msg;
  CHECK(kind_of(triangle_with(R"("coefficients": {"edges": [{"mu": 1, "c": 1}]})"), &msg) == ErrorKind::schema);
  CHECK(msg.find("coefficients.length") != std::string::npos);

  CHECK(kind_of(triangle_with(R"("initial": {"kind": "polynomial", "edges": [[0, 1], [0, 1], [0, 1]]})"), &msg) ==
        ErrorKind::invalid_argument);
  CHECK(msg.find("initial not in V") != std::string::npos);

  CHECK(kind_of(triangle_with(R"("solver": {"dt": 0.1, "tehta": 0.5})"), &msg) == ErrorKind::schema);
  CHECK(msg.find("solver.tehta") != std::string::npos);

  CHECK(kind_of(R"({"graph": {"vertices": 2, "edges": [[1, 3]]}})") == ErrorKind::invalid_graph);
  CHECK(kind_of(R"({"graph": {"vertices": 2, "edges": [[1, 2]]}, "solver": {"theta": 0.2}})") ==
        ErrorKind::schema);
  CHECK(kind_of(triangle_with(R"("coefficients": {"epsilon": 0.5, "edges": [{"mu": 1, "c": 1},
        {"mu": 0.2, "c": 1}, {"mu": 1, "c": 1}]})")) == ErrorKind::bounds_violation);
  CHECK(kind_of("{not json") == ErrorKind::schema);
  CHECK(kind_of(R"({"graph": {"vertices": 3, "edges": [[1, 2]]}, "name": 4})") == ErrorKind::schema);
  CHECK_THROWS_AS(parse_scenario("/nonexistent/scenario.json"), Error);
}

TEST_CASE("parse_command and format_number") {
  CHECK(parse_command("analyze") == Command::analyze);
  CHECK_THROWS_AS(parse_command("plot"), Error);
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("initial_state: kinds") {
  const auto eig = parse_scenario_text(triangle_with(R"("initial": {"kind": "eigenmode", "k": 2, "scale": 3})"));
  const AssembledSystem sys(eig.graph, eig.interior_nodes, eig.coefficients);
  const Vector u = initial_state(eig, sys);
  CHECK(std::sqrt(u.dot(sys.mass() * u)) == doctest::Approx(3.0));

  const auto bump = parse_scenario_text(
      triangle_with(R"("initial": {"kind": "bump", "edge": 1, "center": 0.5, "width": 0.5, "height": 2, "base": 1})"));
  const Vector b = initial_state(bump, sys);
  CHECK(b.maxCoeff() == doctest::Approx(3.0));
  CHECK(b.minCoeff() == 1.0);

  const auto nodal = parse_scenario_text(
      triangle_with(R"("initial": {"kind": "nodal", "edges": [[0, 4, 1], [1, 1], [1, 0.5, 0]]})"));
  const Vector n = initial_state(nodal, sys);
  CHECK(n.maxCoeff() == doctest::Approx(4.0));
}

TEST_CASE("run: spectrum on C3") {
  const auto sc = parse_scenario_text(kTriangle);
  const auto dir = scratch("spectrum");
  const auto rep = run(sc, Command::spectrum, dir);
  const auto j = json::parse(rep.json);
  CHECK(j["lambda2_lower"].get<double>() == doctest::Approx(4.3865).epsilon(1e-3));
  CHECK(j["regime"] == "b_identity");
  CHECK(fs::exists(dir / "spectrum.csv"));
  CHECK(slurp(dir / "spectrum.csv").rfind("t,lambda_1,lambda_2,lambda_3,lambda_4\n", 0) == 0);
  CHECK(rep.files == std::vector<std::string>{"spectrum.csv", "report.json"});
}

TEST_CASE("run: analyze on an identity scenario") {
  const auto sc = parse_scenario_text(triangle_with(R"(
    "initial": {"kind": "polynomial", "edges": [[0, 2, -1], [1, -3, 2], [0, 0.5, -0.5]]},
    "solver": {"N": 15, "dt": 0.002, "t_end": 2.5, "output_stride": 5})"));
  const auto dir = scratch("analyze");
  const auto j = json::parse(run(sc, Command::analyze, dir).json);
  CHECK(j["bound_satisfied"] == true);
  CHECK(j["gronwall"]["satisfied"] == true);
  CHECK(j["mass_drift"].get<double>() <= 1e-10);
  CHECK(j["fitted_rate"].get<double>() >= 0.95 * j["predicted_rate"].get<double>());
  CHECK(j["equilibrium_residual"].get<double>() <= 1e-8);
}

TEST_CASE("run: validate writes only the report; convergence writes its tables") {
  const auto sc = parse_scenario_text(triangle_with(R"("analysis": {"dts": [0.1, 0.05, 0.025]},
      "initial": {"kind": "eigenmode", "k": 2}, "solver": {"N": 15, "t_end": 0.5})"));
  const auto dir = scratch("validate");
  const auto v = run(sc, Command::validate, dir);
  CHECK(v.files == std::vector<std::string>{"report.json"});
  CHECK(json::parse(v.json)["valid"] == true);
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".csv");

  const auto c = json::parse(run(sc, Command::convergence, dir).json);
  CHECK(c["spatial"]["reference"] == "closed_form");
  CHECK(c["spatial"]["observed_order"].get<double>() == doctest::Approx(2.0).epsilon(0.1));
  CHECK(c["temporal"]["reference"] == "spectral_oracle");
  CHECK(c["temporal"]["observed_order"].get<double>() == doctest::Approx(1.0).epsilon(0.2));
  CHECK(slurp(dir / "convergence.csv").rfind("N,h,lambda_err,order\n", 0) == 0);
}

TEST_CASE("run: byte-identical repeat") {
  const auto sc = parse_scenario_text(triangle_with(R"(
    "coefficients": {"epsilon": 0.4, "edges": [{"mu": {"kind": "exp", "a": 1, "b": 1, "rate": 1}, "c": 1},
      {"mu": 1, "c": 1}, {"mu": 1.5, "c": 1}]},
    "initial": {"kind": "bump", "edge": 2},
    "solver": {"N": 9, "dt": 0.01, "t_end": 0.5, "csv_layout": "edge", "edge_points": 3})"));
  const auto a = scratch("repeat_a");
  const auto b = scratch("repeat_b");
  const auto ra = run(sc, Command::analyze, a);
  const auto rb = run(sc, Command::analyze, b);
  CHECK(ra.json == rb.json);
  for (const auto& f : ra.files) CHECK(slurp(a / f) == slurp(b / f));
  CHECK(slurp(a / "trajectory.csv").rfind("t,e1@0,e1@0.5,e1@1,e2@0", 0) == 0);
}

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "netheat/coefficients.hpp"
#include "netheat/fem_assembly.hpp"
#include "netheat/metric_graph.hpp"
#include "netheat/time_integrator.hpp"

namespace netheat {

struct InitialSpec {
  struct Constant {
    double value = 1.0;
  };
  /// k-th M-normalised eigenvector of (K(0), M), k counted from 1.
  struct Eigenmode {
    std::size_t k = 2;
    double scale = 1.0;
  };
  /// base + height * cos^2(pi (x - center) / width) on |x - center| < width/2 of one edge.
  struct Bump {
    EdgeId edge = 0;
    double center = 0.5;
    double width = 0.5;
    double height = 1.0;
    double base = 0.0;
  };
  /// Per-edge polynomial coefficients in x (constant term first).
  struct Polynomial {
    std::vector<std::vector<double>> edges;
  };
  /// Per-edge equally spaced samples on [0,1], interpolated linearly.
  struct Nodal {
    std::vector<std::vector<double>> edges;
  };
  std::variant<Constant, Eigenmode, Bump, Polynomial, Nodal> kind = Constant{};
};

/// g(x) * psi(t) on a set of edges.
struct ForcingTerm {
  struct Polynomial {
    std::vector<double> coefficients;
  };
  /// amplitude * cos(pi * frequency * x + phase)
  struct Cosine {
    double amplitude = 1.0;
    double frequency = 1.0;
    double phase = 0.0;
  };
  std::vector<EdgeId> edges;  // empty = every edge
  std::variant<Polynomial, Cosine> g;
  CoefficientProfile psi = CoefficientProfile::constant(1.0);
};

struct AnalysisSpec {
  std::vector<double> spectral_times;  // empty = 21 points on [0, t_end]
  std::size_t k = 4;
  std::optional<std::pair<double, double>> window;
  bool extend_to_limit = true;
  double settle_tol = 1e-6;
  std::vector<std::size_t> refinement{15, 31, 63};
  std::vector<double> dts;  // temporal study; empty = skipped
};

struct Scenario {
  std::string name;
  MetricGraph graph;
  CoefficientSet coefficients;
  double epsilon = 0.01;
  double horizon = 0.0;
  BoundsCertificate certificate;
  InitialSpec initial;
  std::vector<ForcingTerm> forcing;
  std::size_t interior_nodes = 31;
  SolverConfig solver;
  std::string csv_layout = "dof";  // "dof" or "edge"
  std::size_t edge_points = 5;
  AnalysisSpec analysis;
};

/// Parses and validates a scenario. Schema violations throw Error(schema)
/// with the JSON path of the offending field; certificate failures throw
/// Error(bounds_violation); initial data that is discontinuous at a vertex
/// throws Error(invalid_argument, "initial not in V ...").
Scenario parse_scenario(const std::filesystem::path& path);
Scenario parse_scenario_text(std::string_view text);

SourceFunction make_source(const Scenario& scenario);
Vector initial_state(const Scenario& scenario, const AssembledSystem& system);

enum class Command { validate, spectrum, simulate, analyze, convergence };

/// Throws Error(invalid_argument) for an unknown name.
Command parse_command(std::string_view name);

struct RunReport {
  std::string json;                 // contents of report.json
  std::vector<std::string> files;   // emitted file names, relative to the output directory
};

/// Executes the command and writes report.json plus the command's CSV files
/// into `out_dir` (created if missing). Outputs depend only on the scenario.
RunReport run(const Scenario& scenario, Command command, const std::filesystem::path& out_dir);

/// "%.17g" formatting; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double v);

}  // namespace netheat

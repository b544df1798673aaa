#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/SparseCholesky>

#include "netheat/fem_assembly.hpp"

namespace netheat {

struct SolverConfig {
  double dt = 0.01;
  double theta = 1.0;  // 1 backward Euler, 0.5 Crank-Nicolson
  double t_end = 1.0;
  double linear_tol = 1e-12;
  bool lumped = false;            // row-sum lumping of M_B
  std::size_t output_stride = 1;  // keep every stride-th state (the final state is always kept)

  /// Throws Error(invalid_argument) unless dt > 0, t_end >= dt,
  /// theta in [0.5, 1], linear_tol > 0 and output_stride >= 1.
  void validate() const;
};

struct StepDiagnostics {
  double t = 0.0;             // time reached by the step
  std::size_t refinements = 0;
  std::size_t cg_iterations = 0;  // nonzero only when the direct solve was abandoned
  double residual = 0.0;      // final ||rhs - A x|| / ||rhs||
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<StepDiagnostics> diagnostics;  // one per step
};

/// theta-method for M_B(t) u' + K(t) u = f(t):
///   [M_B(t+) + theta dt K(t+)] u+ = [M_B(t+) - (1-theta) dt K(t)] u + dt f_theta.
/// The solve is done for u+ - min(u) so constants are reproduced exactly
/// and lumped backward Euler keeps nonnegative data nonnegative. Factorisations
/// are reused while the coefficients are constant.
class ThetaStepper {
 public:
  ThetaStepper(const AssembledSystem& system, SolverConfig config, SourceFunction source = {});

  /// Advances u from t to t + dt. Throws Error(solve_failure) if the SPD
  /// solve fails and Error(non_finite) if the new state is not finite.
  Vector advance(const Vector& u, double t, double dt, StepDiagnostics* diag = nullptr);

 private:
  struct Factor {
    SparseMatrix a;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
    bool ok = false;
  };
  void factorize(Factor& f, const SparseMatrix& a);
  Vector solve(const Factor& f, const Vector& rhs, StepDiagnostics& diag) const;

  const AssembledSystem& system_;
  SolverConfig config_;
  SourceFunction source_;
  bool autonomous_;
  std::optional<SparseMatrix> mb_const_;
  std::optional<SparseMatrix> k_const_;
  std::map<double, Factor> cache_;  // autonomous only, keyed by dt
  Factor scratch_;
  bool pattern_ready_ = false;
};

/// One step from (u_n, t_n) with step size config.dt.
Vector step(const Vector& u_n, double t_n, const SolverConfig& config, const AssembledSystem& system,
            const SourceFunction& source = {});

/// Repeated steps at t_n = n dt up to t_end; the last step is shortened so
/// the final time is exactly t_end.
Trajectory simulate(const Vector& u0, const SourceFunction& source, const SolverConfig& config,
                    const AssembledSystem& system);

struct TemporalConvergence {
  std::vector<double> dts;
  std::vector<double> errors;  // M-norm errors at t_end (see convergence_study)
  std::vector<double> orders;  // log2 of successive error ratios
  double observed_order = 0.0; // last entry of orders
  bool exact_reference = false;
};

/// Runs the integrator for each dt (each half the previous one, at least
/// three). With an exact final state the errors are measured against it;
/// otherwise errors[i] is the difference between the runs with dts[i] and
/// dts[i+1]. Runs execute concurrently.
TemporalConvergence convergence_study(const Vector& u0, const SourceFunction& source,
                                      const AssembledSystem& system, const SolverConfig& base,
                                      std::span<const double> dts, double t_end,
                                      const std::optional<Vector>& exact = std::nullopt);

}  // namespace netheat

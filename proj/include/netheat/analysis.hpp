#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "netheat/coefficients.hpp"
#include "netheat/fem_assembly.hpp"
#include "netheat/spectral.hpp"
#include "netheat/time_integrator.hpp"

namespace netheat {

/// <u(t), e1>_M with e1 = 1/sqrt(m) the M-normalised constant.
struct MassSeries {
  std::vector<double> times;
  std::vector<double> values;

  /// max_n |values[n] - values[0]| relative to |values[0]| (absolute when that is 0).
  double relative_drift() const;
  /// max - min of the values sampled in [a, b].
  double oscillation(double a, double b) const;
};

MassSeries mass_series(const Trajectory& traj, const SymmetricMatrix& M);

/// u = u1 + utilde with u1 = <u, e1>_M e1.
struct Decomposition {
  std::vector<double> times;
  std::vector<double> mass;          // <u, e1>_M
  std::vector<Vector> u1;
  std::vector<Vector> utilde;
  std::vector<double> utilde_norm;   // ||utilde||_M
  std::vector<double> total_norm;    // ||u||_M
};

Decomposition decompose(const Trajectory& traj, const SymmetricMatrix& M);

struct FitWindow {
  double t_a;
  double t_b;
};

struct DecayReport {
  double fitted_rate;
  double predicted_rate;
  bool bound_satisfied;
  FitWindow window;
  std::size_t samples;
  double epsilon;                    // 0.01 * lambda2_lower
  double fit_tolerance = 0.05;       // relative
};

/// Least-squares slope of -log ||utilde||_M. Without a window the last half
/// of the samples above 1e3 * machine epsilon * ||u(0)||_M is used. The
/// predicted rate is lambda2 - eps (b == 1), (lambda2 - eps) beta (b
/// nonincreasing), (lambda2 - c - eps) beta (growth c) and 0 otherwise.
/// Throws Error(insufficient_data) when fewer than 10 samples qualify.
DecayReport fit_decay_rate(const Decomposition& dec, const RegimeClass& regime, double lambda2_lower,
                           double beta, std::optional<FitWindow> window = std::nullopt);

struct GronwallReport {
  bool applicable = true;        // false in the general regime
  bool satisfied = true;
  double rate = 0.0;             // exponent of the envelope
  double epsilon = 0.0;
  double worst_ratio = 0.0;      // max ||utilde|| / bound over samples
  double worst_margin = 0.0;     // min (bound + slack - ||utilde||)
  std::size_t violations = 0;
  std::optional<double> first_violation;
  std::vector<double> bound;     // per sample
};

/// Pointwise check of the regime's exponential envelope for ||utilde(t)||_M:
///   b == 1:       (||utilde0||^2 + I(t)/(2 eps))^{1/2} exp(-t (lambda2 - eps))
///   nonincreasing: (||u0||^2/beta^2 + I(t)/(2 eps beta))^{1/2} exp(-t (lambda2 - eps)/beta)
///   growth c:     same prefactor, exp(-t (lambda2 - c - eps) beta)
/// with I(t) = int_0^t ||F||^2 by the trapezoid rule on the sample grid and
/// eps = 0.01 lambda2. An absolute slack of 1e3 * machine epsilon * ||u0||
/// absorbs round-off once the solution reaches the noise floor.
GronwallReport check_gronwall_bound(const Decomposition& dec, const RegimeClass& regime,
                                    const BoundsCertificate& cert, const SpectralTrack& track,
                                    std::span<const double> f_norms);

/// Envelope from the B-weighted energy of u minus its B-weighted mean, valid
/// for F = 0 whenever b' <= 2 c b:
///   ||utilde(t)|| <= E(0)^{1/2} / beta * exp(-t (beta^2 (lambda2 - eps) - c)).
/// `weighted_mass0` is M_B(0) (consistent).
GronwallReport check_weighted_energy_bound(const Decomposition& dec, const RegimeClass& regime,
                                           const BoundsCertificate& cert, const SpectralTrack& track,
                                           const SymmetricMatrix& weighted_mass0);

/// u_n^T M_B(t_n) u_n along a trajectory.
std::vector<double> weighted_norm_series(const Trajectory& traj, const AssembledSystem& system,
                                         bool lumped);

struct PositivityReport {
  double min_value;
  double time_at_min;
  std::size_t dof_at_min;
  bool negative;  // min_value < -ptol
};

PositivityReport positivity_monitor(const Trajectory& traj, double ptol = 0.0);

struct EquilibriumReport {
  double initial_mass;    // <u0, e1>_M
  double f_infinity;      // int_0^T <F, e1> dt (trapezoid)
  double predicted;       // initial_mass + f_infinity
  double final_mass;      // <u(T), e1>_M
  double mass_residual;   // |final_mass - predicted|
  double state_residual;  // ||u(T) - predicted e1||_M
};

/// Predicted limit <u0, e1> + F_inf of the b == 1 regime against the final
/// sample. Throws Error(no_convergence) when the forcing integral over the
/// last quarter of the horizon exceeds tail_tol * max(1, |F_inf|).
EquilibriumReport equilibrium_limit(const Trajectory& traj, const AssembledSystem& system,
                                    const SourceFunction& source, double tail_tol = 1e-6);

}  // namespace netheat

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netheat/coefficients.hpp"
#include "netheat/fem_assembly.hpp"

namespace netheat {

enum class EigenMethod { automatic, dense, shift_invert };

struct EigenOptions {
  double rtol = 1e-10;              // relative residual tolerance
  EigenMethod method = EigenMethod::automatic;
  std::size_t dense_limit = 1500;   // automatic: dense solve up to this dimension
  std::size_t max_iterations = 1000;
  double cluster_rtol = 1e-8;       // eigenvalues closer than this (relative) form a cluster
};

/// k smallest eigenpairs of K x = lambda M x, ascending, M-orthonormal.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // columns
  std::size_t iterations = 0;    // 0 for the dense path

  /// Half-open index ranges [first, last) of numerically equal eigenvalues.
  std::vector<std::pair<std::size_t, std::size_t>> clusters(double rtol = 1e-8) const;

  /// Largest relative residual ||Kx - lambda M x|| / ((||K|| + |lambda| ||M||) ||x||).
  double max_relative_residual(const SymmetricMatrix& K, const SymmetricMatrix& M) const;
};

/// Throws Error(not_positive_definite) if M is not positive definite,
/// Error(no_convergence) if the requested tolerance is not reached and
/// Error(invalid_argument) for k outside 1..dim.
SpectralDecomposition generalized_eigs(const SymmetricMatrix& K, const SymmetricMatrix& M,
                                       std::size_t k, const EigenOptions& options = {});

/// Sampled eigenvalue curves of A(t).
struct SpectralTrack {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> eigenvalues;
  /// Eigenvalues of the limit coefficients, when the track was extended to t = inf.
  std::optional<Eigen::VectorXd> limit_eigenvalues;
  double lambda2_lower = 0.0;       // min of lambda_2 over the grid (and the limit sample)
  double continuity_modulus = 0.0;  // max |lambda_k(t_{i+1}) - lambda_k(t_i)| / (t_{i+1} - t_i)
  /// Grid-based estimates are never certified lower bounds.
  bool certified = false;
};

/// Eigenvalues of (K(t), M) on every grid point. Times must be nonempty and
/// strictly increasing; solves run in parallel (capped by NETHEAT_THREADS).
SpectralTrack track_spectrum(const AssembledSystem& system, std::span<const double> times,
                             std::size_t k, const EigenOptions& options = {});

/// As track_spectrum, but when every profile has a limit the grid is
/// extended until all profiles are within `settle_tol` of their limits and
/// the limit-coefficient spectrum is appended as the t = inf sample.
SpectralTrack track_spectrum_to_limit(const AssembledSystem& system, std::span<const double> times,
                                      std::size_t k, double settle_tol = 1e-6,
                                      const EigenOptions& options = {});

struct ContinuityReport {
  struct PerEigenvalue {
    std::size_t index;                 // zero-based k
    std::vector<double> differences;   // |lambda_k(t + delta_n) - lambda_k(t)|
    double lipschitz_bound;            // C with |diff| <= C delta
    std::vector<double> halving_ratios;  // differences[n] / differences[n+1]
    bool within_lipschitz = false;
    bool monotone_tail = false;
    bool halving_ok = true;            // only evaluated when requested
    bool passed = false;
  };
  double t;
  std::vector<double> deltas;
  std::vector<PerEigenvalue> eigenvalues;
  bool passed = false;
};

/// Checks |lambda_k(t + delta) - lambda_k(t)| <= C delta with
/// C = lambda_k(t) * max_j L_j / epsilon from the certificate, and that the
/// differences shrink monotonically as delta decreases. With
/// `check_halving` the ratio of successive differences for halved deltas
/// must lie in [1.8, 2.2].
ContinuityReport eigenvalue_continuity_test(const AssembledSystem& system,
                                            const BoundsCertificate& cert, double t,
                                            std::span<const double> deltas, std::size_t k,
                                            bool check_halving = false,
                                            const EigenOptions& options = {});

struct ResolventReport {
  double omega;
  double norm;   // ||(omega M + K(t))^{-1} M|| in the M-weighted operator norm
  double bound;  // 1 / omega
  std::size_t iterations;
  bool satisfied;
};

/// Estimates the M-norm of the discrete resolvent by power iteration and
/// compares it with 1/omega. Throws Error(invalid_argument) for omega <= 0,
/// where omega M + K(t) is singular or indefinite.
ResolventReport check_discrete_resolvent_bounds(const AssembledSystem& system, double t,
                                                double omega);

}  // namespace netheat

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "netheat/fem_assembly.hpp"
#include "netheat/spectral.hpp"

namespace netheat {

/// Graphs whose Kirchhoff-Laplacian spectrum is known in closed form.
struct ClosedFormSpectrum {
  enum class Family { interval, cycle };
  Family family;
  double length;  // total length L (number of unit edges)

  static ClosedFormSpectrum interval(double length) { return {Family::interval, length}; }
  static ClosedFormSpectrum cycle(double length) { return {Family::cycle, length}; }
};

/// k smallest eigenvalues, ascending, with multiplicity:
///   interval: ((k-1) pi / L)^2;  cycle: 0, then (2 pi j / L)^2 twice.
/// Throws Error(invalid_argument) for k < 1 or L <= 0.
std::vector<double> closed_form_eigs(const ClosedFormSpectrum& family, std::size_t k);

/// Path of `edges` unit edges (vertices 0..edges) or cycle of `edges` unit edges.
MetricGraph path_graph(std::size_t edges);
MetricGraph cycle_graph(std::size_t edges);

/// u(t) = sum_k exp(-lambda_k t) <u0, x_k>_{M_B} x_k over the full spectrum of
/// the pencil (K, M_B) of a system with time-independent coefficients.
/// Throws Error(invalid_argument) when the coefficients depend on t or the
/// dimension exceeds 2000.
Vector dense_reference_evolution(const AssembledSystem& system, const Vector& u0, double t_end);

struct RefinementLevel {
  std::size_t n;       // interior nodes per edge
  double h;
  double eigenvalue;   // computed (cluster mean for degenerate pairs)
  double exact;
  double error;        // |eigenvalue - exact|
  double order;        // log2(error_prev / error); NaN on the first level
};

struct RefinementStudy {
  std::vector<RefinementLevel> levels;
  double observed_order;  // order of the finest level
};

/// Eigenvalue `index` (zero-based) of the family for each N, each level
/// doubling the element count (N+1). For the cycle, a degenerate pair is
/// represented by its mean. At least three levels are required.
RefinementStudy refinement_study(const ClosedFormSpectrum& family, std::span<const std::size_t> ns,
                                 std::size_t index = 1);

}  // namespace netheat

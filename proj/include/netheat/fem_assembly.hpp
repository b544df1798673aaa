#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "netheat/coefficients.hpp"
#include "netheat/metric_graph.hpp"

namespace netheat {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Shared-vertex P1 mesh on a metric graph: every edge is split into N+1
/// elements of size h = 1/(N+1). Global DOFs 0..n-1 are the vertices; the
/// interior nodes of edge j follow as n + j*N + (k-1), k = 1..N.
class Mesh {
 public:
  Mesh(const MetricGraph& graph, std::size_t interior_nodes);

  std::size_t interior_nodes() const noexcept { return interior_; }
  std::size_t elements_per_edge() const noexcept { return interior_ + 1; }
  double h() const noexcept { return h_; }
  std::size_t total_dofs() const noexcept { return total_; }
  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const Edge& edge(EdgeId j) const { return edges_[j]; }

  /// Global DOF of local node k (0..N+1) on edge j; node 0 is the tail
  /// vertex, node N+1 the head vertex.
  std::size_t dof(EdgeId j, std::size_t local) const;

  /// Coordinate in [0,1] of local node k.
  double coordinate(std::size_t local) const { return static_cast<double>(local) * h_; }

 private:
  std::size_t interior_ = 0;
  double h_ = 0.0;
  std::size_t total_ = 0;
  std::size_t vertex_count_ = 0;
  std::vector<Edge> edges_;
};

/// Throws Error(invalid_argument) if interior_nodes < 1.
Mesh build_mesh(const MetricGraph& graph, std::size_t interior_nodes);

/// Sparse symmetric matrix stored in full. Only constructed from symmetric
/// element contributions, so symmetry is exact.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(SparseMatrix m) : m_(std::move(m)) {}

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const SparseMatrix& sparse() const noexcept { return m_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(m_); }
  double operator()(std::size_t i, std::size_t j) const {
    return m_.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  Vector operator*(const Vector& x) const { return m_ * x; }

  /// Row-sum diagonal matrix.
  SymmetricMatrix lumped() const;

 private:
  SparseMatrix m_;
};

/// F_j(t, x) on edge j; an empty function means F = 0.
using SourceFunction = std::function<double(EdgeId, double, double)>;

/// Mass matrix of the H inner product: element matrix (h/6)[[2,1],[1,2]].
SymmetricMatrix assemble_mass(const Mesh& mesh);

/// Stiffness matrix of a(t,.,.): element matrix (mu_j(t)/h)[[1,-1],[-1,1]].
SymmetricMatrix assemble_stiffness(const Mesh& mesh, const CoefficientSet& coeffs, double t);

/// Mass matrix weighted by b_j(t) edge by edge; row-sum lumped on request.
SymmetricMatrix assemble_weighted_mass(const Mesh& mesh, const CoefficientSet& coeffs, double t,
                                       bool lumped);

/// Load vector (int F(t,.) phi_k) by two-point Gauss quadrature per element.
Vector assemble_load(const Mesh& mesh, const SourceFunction& source, double t);

/// K(t) u evaluated element by element from nodal differences, so that
/// constant vectors map to exactly zero.
Vector apply_stiffness(const Mesh& mesh, const CoefficientSet& coeffs, double t, const Vector& u);

/// ||F(t,.)||_H by two-point Gauss quadrature.
double source_norm(const Mesh& mesh, const SourceFunction& source, double t);

/// Nodal interpolant of a per-edge function f(j, x). Returns nullopt when
/// the edge values disagree at a shared vertex (the function is not in V).
std::optional<Vector> interpolate(const MetricGraph& graph, const Mesh& mesh,
                                  const std::function<double(EdgeId, double)>& f);

/// Nodal values along edge j from tail to head (N+2 entries).
Vector edge_samples(const Mesh& mesh, const Vector& u, EdgeId j);

/// Mesh, coefficients and the time-independent mass matrix of one
/// discretised problem. Assembly is a pure function of t and safe to call
/// concurrently.
class AssembledSystem {
 public:
  AssembledSystem(const MetricGraph& graph, std::size_t interior_nodes, CoefficientSet coeffs,
                  bool lumped = false);

  const MetricGraph& graph() const noexcept { return graph_; }
  const Mesh& mesh() const noexcept { return mesh_; }
  const CoefficientSet& coefficients() const noexcept { return coeffs_; }
  bool lumped() const noexcept { return lumped_; }
  std::size_t dimension() const noexcept { return mesh_.total_dofs(); }

  /// Consistent (unweighted) mass matrix.
  const SymmetricMatrix& mass() const noexcept { return mass_; }
  SymmetricMatrix stiffness(double t) const { return assemble_stiffness(mesh_, coeffs_, t); }
  SymmetricMatrix weighted_mass(double t) const {
    return assemble_weighted_mass(mesh_, coeffs_, t, lumped_);
  }
  Vector apply_stiffness(double t, const Vector& u) const {
    return netheat::apply_stiffness(mesh_, coeffs_, t, u);
  }
  Vector load(const SourceFunction& source, double t) const {
    return assemble_load(mesh_, source, t);
  }

  /// Same mesh with different coefficients.
  AssembledSystem with_coefficients(CoefficientSet coeffs) const;

 private:
  MetricGraph graph_;
  Mesh mesh_;
  CoefficientSet coeffs_;
  bool lumped_;
  SymmetricMatrix mass_;
};

}  // namespace netheat

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace netheat {

using VertexId = std::size_t;
using EdgeId = std::size_t;

/// Oriented edge: the edge is parametrised by [0,1] with x=0 at `tail`
/// and x=1 at `head`. Indices are zero-based.
struct Edge {
  VertexId tail;
  VertexId head;
};

struct IncidenceMatrices {
  Eigen::MatrixXd phi_plus;   // (i,j) = 1 iff vertex i is the head of edge j
  Eigen::MatrixXd phi_minus;  // (i,j) = 1 iff vertex i is the tail of edge j
  Eigen::MatrixXd phi;        // phi_plus - phi_minus
};

/// Values of an edge function at the two ends of every edge.
struct EndValues {
  double at_tail;  // f_j(0)
  double at_head;  // f_j(1)
};

/// Finite, simple, connected graph whose edges are all identified with [0,1].
///
/// Degree-1 vertices are accepted unless `strict` is set; the Kirchhoff
/// condition at such a vertex degenerates to a homogeneous Neumann condition.
/// Immutable after construction.
class MetricGraph {
 public:
  /// Throws Error(invalid_graph) on loops, duplicate edges, disconnected
  /// graphs, out-of-range indices, an empty edge list, or (strict) a vertex
  /// of degree < 2.
  static MetricGraph build(std::size_t vertex_count, std::span<const Edge> edges,
                           bool strict = false);

  std::size_t vertex_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const Edge& edge(EdgeId j) const { return edges_.at(j); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t degree(VertexId i) const { return incident_.at(i).size(); }
  bool strict() const noexcept { return strict_; }

  IncidenceMatrices incidence() const;

  /// Indices of the edges having vertex `i` as an endpoint, ascending.
  const std::vector<EdgeId>& gamma(VertexId i) const;

  /// Recovers the vertex-value vector d of a function given by its edge
  /// end values, or nullopt if the values at some vertex disagree by more
  /// than `tol`. A negative `tol` selects 1e-12 * max(1, max |value|).
  std::optional<Eigen::VectorXd> continuity_trace(std::span<const EndValues> end_values,
                                                  double tol = -1.0) const;

 private:
  MetricGraph(std::size_t n, std::vector<Edge> edges, bool strict);

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> incident_;
  bool strict_ = false;
};

}  // namespace netheat

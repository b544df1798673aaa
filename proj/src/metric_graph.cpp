#include "netheat/metric_graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "netheat/error.hpp"

namespace netheat {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::invalid_graph, msg); }

}  // namespace

MetricGraph::MetricGraph(std::size_t n, std::vector<Edge> edges, bool strict)
    : n_(n), edges_(std::move(edges)), incident_(n), strict_(strict) {
  for (EdgeId j = 0; j < edges_.size(); ++j) {
    incident_[edges_[j].tail].push_back(j);
    incident_[edges_[j].head].push_back(j);
  }
}

MetricGraph MetricGraph::build(std::size_t vertex_count, std::span<const Edge> edges, bool strict) {
  if (edges.empty()) fail("graph: edge list is empty");
  if (vertex_count == 0) fail("graph: vertex count is zero");

  std::set<std::pair<VertexId, VertexId>> seen;
  for (std::size_t j = 0; j < edges.size(); ++j) {
    const auto [t, h] = edges[j];
    if (t >= vertex_count || h >= vertex_count)
      fail("graph: edge " + std::to_string(j) + " references a vertex outside 0.." +
           std::to_string(vertex_count - 1));
    if (t == h) fail("graph: edge " + std::to_string(j) + " is a loop");
    if (!seen.insert({std::min(t, h), std::max(t, h)}).second)
      fail("graph: edge " + std::to_string(j) + " duplicates an earlier edge");
  }

  MetricGraph g(vertex_count, {edges.begin(), edges.end()}, strict);

  // Connectivity by breadth-first search from vertex 0, ignoring orientation.
  std::vector<bool> reached(vertex_count, false);
  std::vector<VertexId> queue{0};
  reached[0] = true;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    for (EdgeId j : g.incident_[queue[q]]) {
      const Edge& e = g.edges_[j];
      const VertexId other = e.tail == queue[q] ? e.head : e.tail;
      if (!reached[other]) {
        reached[other] = true;
        queue.push_back(other);
      }
    }
  }
  if (queue.size() != vertex_count) fail("graph: graph is disconnected");

  for (VertexId i = 0; i < vertex_count; ++i) {
    if (strict && g.degree(i) < 2)
      fail("graph: vertex " + std::to_string(i) + " has degree " + std::to_string(g.degree(i)) +
           " (strict mode requires degree at least 2)");
  }
  return g;
}

IncidenceMatrices MetricGraph::incidence() const {
  const auto n = static_cast<Eigen::Index>(n_);
  const auto m = static_cast<Eigen::Index>(edges_.size());
  IncidenceMatrices inc{Eigen::MatrixXd::Zero(n, m), Eigen::MatrixXd::Zero(n, m), {}};
  for (Eigen::Index j = 0; j < m; ++j) {
    const Edge& e = edges_[static_cast<std::size_t>(j)];
    inc.phi_plus(static_cast<Eigen::Index>(e.head), j) = 1.0;
    inc.phi_minus(static_cast<Eigen::Index>(e.tail), j) = 1.0;
  }
  inc.phi = inc.phi_plus - inc.phi_minus;
  return inc;
}

const std::vector<EdgeId>& MetricGraph::gamma(VertexId i) const {
  if (i >= n_) throw Error(ErrorKind::invalid_argument, "gamma: vertex out of range");
  return incident_[i];
}

std::optional<Eigen::VectorXd> MetricGraph::continuity_trace(std::span<const EndValues> end_values,
                                                             double tol) const {
  if (end_values.size() != edges_.size())
    throw Error(ErrorKind::invalid_argument, "continuity_trace: expected one value pair per edge");

  if (tol < 0.0) {
    double scale = 1.0;
    for (const auto& v : end_values) scale = std::max({scale, std::abs(v.at_tail), std::abs(v.at_head)});
    tol = 1e-12 * scale;
  }

  Eigen::VectorXd d(static_cast<Eigen::Index>(n_));
  for (VertexId i = 0; i < n_; ++i) {
    bool first = true;
    double value = 0.0;
    for (EdgeId j : incident_[i]) {
      const double v = edges_[j].tail == i ? end_values[j].at_tail : end_values[j].at_head;
      if (first) {
        value = v;
        first = false;
      } else if (std::abs(v - value) > tol) {
        return std::nullopt;
      }
    }
    d[static_cast<Eigen::Index>(i)] = value;
  }
  return d;
}

}  // namespace netheat

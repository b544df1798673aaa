#include "netheat/fem_assembly.hpp"

#include <cmath>
#include <vector>

#include "netheat/error.hpp"

namespace netheat {

namespace {

using Triplet = Eigen::Triplet<double>;

// Two-point Gauss rule on the reference element [0,1].
constexpr double kGaussLo = 0.5 - 0.28867513459481288225;  // 1/2 - 1/(2 sqrt 3)
constexpr double kGaussHi = 0.5 + 0.28867513459481288225;

// Adds w * [[d, o], [o, d]] for every element of every edge; w depends on the edge.
template <typename Weight>
SymmetricMatrix assemble_element_pattern(const Mesh& mesh, double diag, double off, Weight weight) {
  std::vector<Triplet> trips;
  trips.reserve(4 * mesh.edge_count() * mesh.elements_per_edge());
  for (EdgeId j = 0; j < mesh.edge_count(); ++j) {
    const double w = weight(j);
    for (std::size_t k = 0; k < mesh.elements_per_edge(); ++k) {
      const auto a = static_cast<Eigen::Index>(mesh.dof(j, k));
      const auto b = static_cast<Eigen::Index>(mesh.dof(j, k + 1));
      trips.emplace_back(a, a, w * diag);
      trips.emplace_back(b, b, w * diag);
      trips.emplace_back(a, b, w * off);
      trips.emplace_back(b, a, w * off);
    }
  }
  const auto n = static_cast<Eigen::Index>(mesh.total_dofs());
  SparseMatrix m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return SymmetricMatrix(std::move(m));
}

}  // namespace

Mesh::Mesh(const MetricGraph& graph, std::size_t interior_nodes)
    : interior_(interior_nodes),
      h_(1.0 / static_cast<double>(interior_nodes + 1)),
      total_(graph.vertex_count() + graph.edge_count() * interior_nodes),
      vertex_count_(graph.vertex_count()),
      edges_(graph.edges()) {
  if (interior_nodes < 1) throw Error(ErrorKind::invalid_argument, "mesh: N must be >= 1");
}

std::size_t Mesh::dof(EdgeId j, std::size_t local) const {
  if (local == 0) return edges_[j].tail;
  if (local == interior_ + 1) return edges_[j].head;
  return vertex_count_ + j * interior_ + (local - 1);
}

Mesh build_mesh(const MetricGraph& graph, std::size_t interior_nodes) {
  return Mesh(graph, interior_nodes);
}

SymmetricMatrix SymmetricMatrix::lumped() const {
  const Vector sums = m_ * Vector::Ones(m_.cols());
  SparseMatrix d(m_.rows(), m_.cols());
  d.reserve(Eigen::VectorXi::Constant(m_.cols(), 1));
  for (Eigen::Index i = 0; i < m_.rows(); ++i) d.insert(i, i) = sums[i];
  d.makeCompressed();
  return SymmetricMatrix(std::move(d));
}

SymmetricMatrix assemble_mass(const Mesh& mesh) {
  const double h = mesh.h();
  return assemble_element_pattern(mesh, 2.0 * h / 6.0, h / 6.0, [](EdgeId) { return 1.0; });
}

SymmetricMatrix assemble_stiffness(const Mesh& mesh, const CoefficientSet& coeffs, double t) {
  coeffs.check_size(mesh.edge_count());
  const double inv_h = 1.0 / mesh.h();
  return assemble_element_pattern(mesh, 1.0, -1.0,
                                  [&](EdgeId j) { return coeffs.mu[j].eval(t) * inv_h; });
}

SymmetricMatrix assemble_weighted_mass(const Mesh& mesh, const CoefficientSet& coeffs, double t,
                                       bool lumped) {
  coeffs.check_size(mesh.edge_count());
  const double h = mesh.h();
  auto mb = assemble_element_pattern(mesh, 2.0 * h / 6.0, h / 6.0,
                                     [&](EdgeId j) { return coeffs.eval_b(j, t); });
  return lumped ? mb.lumped() : mb;
}

Vector assemble_load(const Mesh& mesh, const SourceFunction& source, double t) {
  Vector f = Vector::Zero(static_cast<Eigen::Index>(mesh.total_dofs()));
  if (!source) return f;
  const double h = mesh.h();
  for (EdgeId j = 0; j < mesh.edge_count(); ++j) {
    for (std::size_t k = 0; k < mesh.elements_per_edge(); ++k) {
      const double x0 = mesh.coordinate(k);
      double fa = 0.0;
      double fb = 0.0;
      for (double xi : {kGaussLo, kGaussHi}) {
        const double value = source(j, t, x0 + xi * h) * (h / 2.0);
        fa += value * (1.0 - xi);
        fb += value * xi;
      }
      f[static_cast<Eigen::Index>(mesh.dof(j, k))] += fa;
      f[static_cast<Eigen::Index>(mesh.dof(j, k + 1))] += fb;
    }
  }
  return f;
}

Vector apply_stiffness(const Mesh& mesh, const CoefficientSet& coeffs, double t, const Vector& u) {
  coeffs.check_size(mesh.edge_count());
  Vector out = Vector::Zero(u.size());
  const double inv_h = 1.0 / mesh.h();
  for (EdgeId j = 0; j < mesh.edge_count(); ++j) {
    const double w = coeffs.mu[j].eval(t) * inv_h;
    for (std::size_t k = 0; k < mesh.elements_per_edge(); ++k) {
      const auto a = static_cast<Eigen::Index>(mesh.dof(j, k));
      const auto b = static_cast<Eigen::Index>(mesh.dof(j, k + 1));
      const double flux = w * (u[a] - u[b]);
      out[a] += flux;
      out[b] -= flux;
    }
  }
  return out;
}

double source_norm(const Mesh& mesh, const SourceFunction& source, double t) {
  if (!source) return 0.0;
  const double h = mesh.h();
  double sum = 0.0;
  for (EdgeId j = 0; j < mesh.edge_count(); ++j) {
    for (std::size_t k = 0; k < mesh.elements_per_edge(); ++k) {
      const double x0 = mesh.coordinate(k);
      for (double xi : {kGaussLo, kGaussHi}) {
        const double v = source(j, t, x0 + xi * h);
        sum += v * v * (h / 2.0);
      }
    }
  }
  return std::sqrt(sum);
}

std::optional<Vector> interpolate(const MetricGraph& graph, const Mesh& mesh,
                                  const std::function<double(EdgeId, double)>& f) {
  std::vector<EndValues> ends;
  ends.reserve(graph.edge_count());
  for (EdgeId j = 0; j < graph.edge_count(); ++j) ends.push_back({f(j, 0.0), f(j, 1.0)});
  const auto d = graph.continuity_trace(ends);
  if (!d) return std::nullopt;

  Vector u(static_cast<Eigen::Index>(mesh.total_dofs()));
  u.head(d->size()) = *d;
  for (EdgeId j = 0; j < mesh.edge_count(); ++j)
    for (std::size_t k = 1; k <= mesh.interior_nodes(); ++k)
      u[static_cast<Eigen::Index>(mesh.dof(j, k))] = f(j, mesh.coordinate(k));
  return u;
}

Vector edge_samples(const Mesh& mesh, const Vector& u, EdgeId j) {
  Vector s(static_cast<Eigen::Index>(mesh.interior_nodes() + 2));
  for (std::size_t k = 0; k < mesh.interior_nodes() + 2; ++k)
    s[static_cast<Eigen::Index>(k)] = u[static_cast<Eigen::Index>(mesh.dof(j, k))];
  return s;
}

AssembledSystem::AssembledSystem(const MetricGraph& graph, std::size_t interior_nodes,
                                 CoefficientSet coeffs, bool lumped)
    : graph_(graph),
      mesh_(graph, interior_nodes),
      coeffs_(std::move(coeffs)),
      lumped_(lumped),
      mass_(assemble_mass(mesh_)) {
  coeffs_.check_size(graph.edge_count());
}

AssembledSystem AssembledSystem::with_coefficients(CoefficientSet coeffs) const {
  return AssembledSystem(graph_, mesh_.interior_nodes(), std::move(coeffs), lumped_);
}

}  // namespace netheat

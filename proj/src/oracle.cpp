#include "netheat/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "netheat/error.hpp"

namespace netheat {

std::vector<double> closed_form_eigs(const ClosedFormSpectrum& family, std::size_t k) {
  if (k < 1) throw Error(ErrorKind::invalid_argument, "closed_form_eigs: k must be >= 1");
  if (!(family.length > 0.0)) throw Error(ErrorKind::invalid_argument, "closed_form_eigs: length must be positive");
  const double pi = std::numbers::pi;
  std::vector<double> out;
  out.reserve(k);
  if (family.family == ClosedFormSpectrum::Family::interval) {
    for (std::size_t i = 0; i < k; ++i) {
      const double w = static_cast<double>(i) * pi / family.length;
      out.push_back(w * w);
    }
  } else {
    out.push_back(0.0);
    for (std::size_t i = 1; out.size() < k; ++i) {
      const double w = 2.0 * pi * static_cast<double>((i + 1) / 2) / family.length;
      out.push_back(w * w);
    }
  }
  return out;
}

MetricGraph path_graph(std::size_t edges) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < edges; ++i) e.push_back({i, i + 1});
  return MetricGraph::build(edges + 1, e, false);
}

MetricGraph cycle_graph(std::size_t edges) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < edges; ++i) e.push_back({i, (i + 1) % edges});
  return MetricGraph::build(edges, e, true);
}

Vector dense_reference_evolution(const AssembledSystem& system, const Vector& u0, double t_end) {
  if (!system.coefficients().time_independent())
    throw Error(ErrorKind::invalid_argument,
                "dense_reference_evolution: coefficients depend on t (oracle disabled)");
  if (system.dimension() > 2000)
    throw Error(ErrorKind::invalid_argument, "dense_reference_evolution: dimension too large (> 2000)");
  if (static_cast<std::size_t>(u0.size()) != system.dimension())
    throw Error(ErrorKind::invalid_argument, "dense_reference_evolution: initial state has wrong dimension");

  const Eigen::MatrixXd mb = system.weighted_mass(0.0).dense();
  Eigen::LLT<Eigen::MatrixXd> llt(mb);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::not_positive_definite, "dense_reference_evolution: M_B not positive definite");
  Eigen::MatrixXd c = llt.matrixL().solve(system.stiffness(0.0).dense());
  c = llt.matrixL().solve(c.transpose().eval());
  c = 0.5 * (c + c.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::no_convergence, "dense_reference_evolution: eigensolver failed");

  // In the coordinates y = L^T u the evolution is y' = -C y.
  const Vector y0 = llt.matrixU() * u0;
  Vector coeff = es.eigenvectors().transpose() * y0;
  for (Eigen::Index i = 0; i < coeff.size(); ++i)
    coeff[i] *= std::exp(-std::max(0.0, es.eigenvalues()[i]) * t_end);
  const Vector y = es.eigenvectors() * coeff;
  return llt.matrixU().solve(y);
}

RefinementStudy refinement_study(const ClosedFormSpectrum& family, std::span<const std::size_t> ns,
                                 std::size_t index) {
  if (ns.size() < 3) throw Error(ErrorKind::insufficient_data, "refinement_study: need at least 3 levels");
  for (std::size_t i = 0; i + 1 < ns.size(); ++i)
    if (ns[i + 1] + 1 != 2 * (ns[i] + 1))
      throw Error(ErrorKind::invalid_argument, "refinement_study: levels must double (N+1 -> 2(N+1))");
  const auto edges = static_cast<std::size_t>(std::llround(family.length));
  if (static_cast<double>(edges) != family.length || edges < 1)
    throw Error(ErrorKind::invalid_argument, "refinement_study: length must be a whole number of unit edges");

  const bool cycle = family.family == ClosedFormSpectrum::Family::cycle;
  const MetricGraph graph = cycle ? cycle_graph(edges) : path_graph(edges);
  const std::size_t k = index + 2;
  const auto exact_all = closed_form_eigs(family, k);

  RefinementStudy study;
  for (std::size_t n : ns) {
    const AssembledSystem sys(graph, n, CoefficientSet::uniform(edges));
    const auto dec = generalized_eigs(sys.stiffness(0.0), sys.mass(), std::min(k, sys.dimension()));

    // Average over the cluster of exact eigenvalues that contains `index`.
    std::size_t first = index;
    std::size_t last = index + 1;
    while (first > 0 && exact_all[first - 1] == exact_all[index]) --first;
    while (last < exact_all.size() && exact_all[last] == exact_all[index]) ++last;
    double mean = 0.0;
    for (std::size_t i = first; i < last; ++i) mean += dec.eigenvalues[static_cast<Eigen::Index>(i)];
    mean /= static_cast<double>(last - first);

    RefinementLevel lvl{n, 1.0 / static_cast<double>(n + 1), mean, exact_all[index],
                        std::abs(mean - exact_all[index]), std::numeric_limits<double>::quiet_NaN()};
    if (!study.levels.empty()) lvl.order = std::log2(study.levels.back().error / lvl.error);
    study.levels.push_back(lvl);
  }
  study.observed_order = study.levels.back().order;
  return study;
}

}  // namespace netheat

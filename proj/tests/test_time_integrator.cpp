#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "netheat/error.hpp"
#include "netheat/oracle.hpp"
#include "netheat/spectral.hpp"
#include "netheat/time_integrator.hpp"

using namespace netheat;
using P = CoefficientProfile;

namespace {

constexpr double pi = std::numbers::pi;

Vector random_state(std::size_t n, unsigned seed, double lo = -1, double hi = 1) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = U(rng);
  return v;
}

double mnorm(const AssembledSystem& s, const Vector& v) { return std::sqrt(v.dot(s.mass() * v)); }

MetricGraph kite() {
  const std::vector<Edge> e{{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 0}};
  return MetricGraph::build(4, e);
}

}  // namespace

TEST_CASE("SolverConfig validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.dt = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.t_end = 0.001;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.theta = 0.4;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("step: linear in the state when unforced") {
  const AssembledSystem sys(cycle_graph(3), 5, CoefficientSet::uniform(3));
  const Vector u = random_state(sys.dimension(), 1);
  const Vector w = random_state(sys.dimension(), 2);
  SolverConfig c;
  c.dt = 0.1;
  c.theta = 0.5;
  const Vector lhs = step(2.0 * u - 3.0 * w, 0.0, c, sys);
  const Vector rhs = 2.0 * step(u, 0.0, c, sys) - 3.0 * step(w, 0.0, c, sys);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("step: constants are fixed points for every regime and theta") {
  const auto g = kite();
  const std::vector<CoefficientSet> sets{
      CoefficientSet::uniform(5),
      {std::vector(5, P::exp_approach(1, 1, 1)), std::vector(5, P::constant(1))},
      {std::vector(5, P::affine(1, 0.4)), std::vector(5, P::exp_approach(2, -0.5, 2))}};
  for (const auto& cs : sets)
    for (double theta : {0.5, 0.75, 1.0})
      for (bool lumped : {false, true}) {
        const AssembledSystem sys(g, 7, cs);
        SolverConfig c;
        c.theta = theta;
        c.lumped = lumped;
        c.dt = 0.05;
        c.t_end = 0.5;
        const Vector u = Vector::Constant(static_cast<Eigen::Index>(sys.dimension()), 2.75);
        const auto traj = simulate(u, {}, c, sys);
        for (const auto& s : traj.states) CHECK((s.array() == 2.75).all());
      }
}

TEST_CASE("step: backward Euler damps the second eigenvector by 1/(1 + dt lambda2)") {
  const AssembledSystem sys(path_graph(1), 31, CoefficientSet::uniform(1));
  const auto d = generalized_eigs(sys.stiffness(0), sys.mass(), 2);
  const Vector x2 = d.eigenvectors.col(1);
  SolverConfig c;
  c.dt = 0.01;
  const Vector u1 = step(x2, 0.0, c, sys);
  CHECK((u1 - x2 / (1 + c.dt * d.eigenvalues[1])).norm() <= 1e-11 * x2.norm());
}

TEST_CASE("simulate: grid, diagnostics and short last step") {
  const AssembledSystem sys(cycle_graph(3), 7, CoefficientSet::uniform(3));
  SolverConfig c;
  c.dt = 0.03;
  c.t_end = 0.1;
  const auto traj = simulate(random_state(sys.dimension(), 2), {}, c, sys);
  REQUIRE(traj.times.size() == 5);
  CHECK(traj.times.back() == 0.1);
  CHECK(traj.times[2] == doctest::Approx(0.06).epsilon(1e-15));
  CHECK(traj.diagnostics.size() == 4);
  for (const auto& d : traj.diagnostics) CHECK(d.residual <= 1e-12);

  c.output_stride = 3;
  const auto thin = simulate(random_state(sys.dimension(), 2), {}, c, sys);
  CHECK(thin.times.size() == 3);
  CHECK(thin.states.size() == thin.times.size());
  CHECK(thin.states.back() == traj.states.back());
  CHECK_THROWS_AS(simulate(Vector::Zero(3), {}, c, sys), Error);
}

TEST_CASE("simulate: B = Id decay within the backward Euler envelope") {
  const AssembledSystem sys(cycle_graph(3), 15, CoefficientSet::uniform(3));
  const auto d = generalized_eigs(sys.stiffness(0), sys.mass(), 4);
  const Vector u0 = 0.7 * d.eigenvectors.col(0) + 0.3 * d.eigenvectors.col(1) + 0.2 * d.eigenvectors.col(3);
  SolverConfig c;
  c.dt = 0.02;
  c.t_end = 1.0;
  const auto traj = simulate(u0, {}, c, sys);
  const double l2 = d.eigenvalues[1];
  const Vector e1 = d.eigenvectors.col(0);
  for (std::size_t n = 0; n < traj.times.size(); ++n) {
    const Vector& u = traj.states[n];
    const Vector ut = u - e1 * e1.dot(sys.mass() * u);
    const Vector ut0 = u0 - e1 * e1.dot(sys.mass() * u0);
    CHECK(mnorm(sys, ut) <= mnorm(sys, ut0) * std::pow(1 + c.dt * l2, -static_cast<double>(n)) * (1 + 1e-10));
  }
}

TEST_CASE("simulate: long-time limit is the mean on C3") {
  const AssembledSystem sys(cycle_graph(3), 15, CoefficientSet::uniform(3));
  const Vector u0 = random_state(sys.dimension(), 5);
  const Vector one = Vector::Ones(u0.size());
  const double mean = one.dot(sys.mass() * u0) / 3.0;
  SolverConfig c;
  c.dt = 0.05;
  c.t_end = 12.0;
  const auto traj = simulate(u0, {}, c, sys);
  CHECK((traj.states.back().array() - mean).abs().maxCoeff() <= 1e-8);
}

TEST_CASE("property: discrete mass conservation, energy dissipation, positivity") {
  const auto g = kite();
  const AssembledSystem sys(g, 9, CoefficientSet{{P::constant(1), P::constant(2), P::constant(0.5), P::constant(1),
                                                  P::constant(3)},
                                                 {P::constant(1), P::constant(2), P::constant(0.5), P::constant(1),
                                                  P::constant(3)}});
  const Vector one = Vector::Ones(static_cast<Eigen::Index>(sys.dimension()));
  for (unsigned seed = 0; seed < 4; ++seed) {
    const Vector u0 = random_state(sys.dimension(), 10 + seed);
    SolverConfig c;
    c.dt = 0.01;
    c.t_end = 0.5;
    // Mean-free forcing on edge 0.
    const SourceFunction f = [](EdgeId j, double t, double x) { return j == 0 ? (x - 0.5) * (1 + t) : 0.0; };
    for (double theta : {0.5, 1.0}) {
      c.theta = theta;
      const auto traj = simulate(u0, f, c, sys);
      const double m0 = one.dot(sys.mass() * u0);
      for (const auto& s : traj.states) CHECK(std::abs(one.dot(sys.mass() * s) - m0) <= 1e-12 * (1 + std::abs(m0)));
    }
    c.theta = 1.0;
    const auto traj = simulate(u0, {}, c, sys);
    for (std::size_t n = 0; n + 1 < traj.states.size(); ++n) {
      const auto k = sys.stiffness(0);
      CHECK(traj.states[n + 1].dot(k * traj.states[n + 1]) <= traj.states[n].dot(k * traj.states[n]) * (1 + 1e-12));
    }
  }

  const AssembledSystem tv(g, 9, CoefficientSet{std::vector(5, P::exp_approach(1, 2, 1.5)),
                                                std::vector(5, P::affine(1, 0.5, 0.5, 2))});
  SolverConfig c;
  c.lumped = true;
  c.dt = 0.02;
  c.t_end = 2.0;
  for (unsigned seed = 0; seed < 4; ++seed) {
    Vector u0 = random_state(tv.dimension(), 20 + seed, 0.0, 1.0);
    for (Eigen::Index i = 0; i < u0.size(); i += 2) u0[i] = 0.0;
    const auto traj = simulate(u0, [](EdgeId, double, double x) { return x * x; }, c, tv);
    for (const auto& s : traj.states) CHECK(s.minCoeff() >= 0.0);
  }
}

TEST_CASE("convergence_study: orders") {
  const AssembledSystem sys(cycle_graph(3), 15, CoefficientSet::uniform(3));
  // Smooth data: rough data leaves undamped Crank-Nicolson modes in the error.
  const auto d = generalized_eigs(sys.stiffness(0), sys.mass(), 4);
  const Vector u0 = d.eigenvectors.col(0) + d.eigenvectors.col(1) - 0.5 * d.eigenvectors.col(3);
  const std::vector<double> dts{0.1, 0.05, 0.025};
  SolverConfig c;
  c.theta = 1.0;
  const auto be = convergence_study(u0, {}, sys, c, dts, 1.0);
  CHECK(be.observed_order >= 0.8);
  CHECK(be.observed_order <= 1.2);
  c.theta = 0.5;
  const auto cn = convergence_study(u0, {}, sys, c, dts, 1.0);
  CHECK(cn.observed_order >= 1.8);
  CHECK(cn.observed_order <= 2.2);
  const auto cn_exact = convergence_study(u0, {}, sys, c, dts, 1.0, dense_reference_evolution(sys, u0, 1.0));
  CHECK(cn_exact.exact_reference);
  CHECK(cn_exact.observed_order >= 1.8);
  CHECK(cn_exact.observed_order <= 2.2);

  const std::vector<double> bad{0.1, 0.03, 0.01};
  CHECK_THROWS_AS(convergence_study(u0, {}, sys, c, bad, 1.0), Error);
  const std::vector<double> few{0.1, 0.05};
  CHECK_THROWS_AS(convergence_study(u0, {}, sys, c, few, 1.0), Error);
}

TEST_CASE("convergence_study: manufactured solution with time-dependent M_B") {
  // b = mu = 1 + 0.5 e^{-t}, c = 1; u = e^{-t} cos(pi x) solves b u_t - mu u_xx = F.
  const CoefficientSet coeffs{{P::exp_approach(1, 0.5, 1)}, {P::constant(1)}};
  const AssembledSystem sys(path_graph(1), 63, coeffs);
  const SourceFunction f = [](EdgeId, double t, double x) {
    const double mu = 1 + 0.5 * std::exp(-t);
    return mu * (pi * pi - 1) * std::exp(-t) * std::cos(pi * x);
  };
  const auto u0 = interpolate(sys.graph(), sys.mesh(), [](EdgeId, double x) { return std::cos(pi * x); });
  REQUIRE(u0);
  SolverConfig c;
  const std::vector<double> dts{0.04, 0.02, 0.01, 0.005};
  const auto study = convergence_study(*u0, f, sys, c, dts, 1.0);
  CHECK(study.observed_order >= 0.8);
  CHECK(study.observed_order <= 1.2);

  // Error against the exact solution is dominated by the time error at this N.
  SolverConfig fine = c;
  fine.dt = 0.005;
  const auto traj = simulate(*u0, f, fine, sys);
  const auto exact = interpolate(sys.graph(), sys.mesh(), [](EdgeId, double x) { return std::exp(-1.0) * std::cos(pi * x); });
  CHECK(mnorm(sys, traj.states.back() - *exact) <= 0.02 * mnorm(sys, *exact));
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "netheat/error.hpp"
#include "netheat/oracle.hpp"
#include "netheat/time_integrator.hpp"

using namespace netheat;
using P = CoefficientProfile;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("closed_form_eigs") {
  const auto a = closed_form_eigs(ClosedFormSpectrum::interval(1), 3);
  CHECK(a == std::vector<double>{0, pi * pi, 4 * pi * pi});
  const auto b = closed_form_eigs(ClosedFormSpectrum::cycle(3), 3);
  const double w = std::pow(2 * pi / 3, 2);
  CHECK(b[0] == 0.0);
  CHECK(b[1] == doctest::Approx(w).epsilon(1e-15));
  CHECK(b[2] == b[1]);
  const auto c = closed_form_eigs(ClosedFormSpectrum::interval(2), 2);
  CHECK(c[1] == doctest::Approx(pi * pi / 4).epsilon(1e-15));
  const auto d = closed_form_eigs(ClosedFormSpectrum::cycle(3), 6);
  CHECK(d[3] == d[4]);
  CHECK(d[3] == doctest::Approx(4 * w));
  CHECK_THROWS_AS(closed_form_eigs(ClosedFormSpectrum::cycle(3), 0), Error);
}

TEST_CASE("dense_reference_evolution") {
  const AssembledSystem sys(cycle_graph(3), 9, CoefficientSet::uniform(3));
  const auto d = generalized_eigs(sys.stiffness(0), sys.mass(), 3);
  const Vector x1 = d.eigenvectors.col(0);
  CHECK((dense_reference_evolution(sys, x1, 5.0) - x1).norm() <= 1e-10);
  const Vector x2 = d.eigenvectors.col(1);
  const Vector r = dense_reference_evolution(sys, x2, 1.0 / d.eigenvalues[1]);
  CHECK((r - std::exp(-1.0) * x2).norm() <= 1e-12 * x2.norm());

  // mu = 2, c = 1 doubles K and M_B alike.
  const AssembledSystem slow(cycle_graph(3), 9, CoefficientSet::uniform(3, 2.0, 1.0));
  const auto ds = generalized_eigs(slow.stiffness(0), slow.weighted_mass(0), 2);
  CHECK(ds.eigenvalues[1] == doctest::Approx(d.eigenvalues[1]).epsilon(1e-12));

  const AssembledSystem tv(cycle_graph(3), 9,
                           CoefficientSet{std::vector(3, P::exp_approach(1, 1, 1)), std::vector(3, P::constant(1))});
  CHECK_THROWS_AS(dense_reference_evolution(tv, x1, 1.0), Error);
  const AssembledSystem big(cycle_graph(3), 700, CoefficientSet::uniform(3));
  CHECK_THROWS_AS(dense_reference_evolution(big, Vector::Ones(static_cast<Eigen::Index>(big.dimension())), 1.0),
                  Error);
}

TEST_CASE("dense oracle agrees with Crank-Nicolson on C3") {
  const AssembledSystem sys(cycle_graph(3), 15, CoefficientSet::uniform(3));
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> U(-1, 1);
  Vector u0(static_cast<Eigen::Index>(sys.dimension()));
  for (auto& x : u0) x = U(rng);
  SolverConfig c;
  c.theta = 0.5;
  c.dt = 1e-3;
  c.t_end = 1.0;
  const auto traj = simulate(u0, {}, c, sys);
  const Vector ref = dense_reference_evolution(sys, u0, 1.0);
  CHECK((traj.states.back() - ref).norm() <= 1e-5 * ref.norm());
}

TEST_CASE("refinement_study") {
  const std::vector<std::size_t> ns{15, 31, 63};
  const auto iv = refinement_study(ClosedFormSpectrum::interval(1), ns);
  CHECK(iv.observed_order >= 1.8);
  CHECK(iv.observed_order <= 2.2);
  const auto cy = refinement_study(ClosedFormSpectrum::cycle(3), ns);
  CHECK(cy.observed_order >= 1.8);
  CHECK(cy.observed_order <= 2.2);
  for (const auto* s : {&iv, &cy})
    for (std::size_t i = 0; i + 1 < s->levels.size(); ++i) CHECK(s->levels[i + 1].error < s->levels[i].error);

  const auto k1 = refinement_study(ClosedFormSpectrum::interval(2), ns, 0);
  for (const auto& l : k1.levels) CHECK(l.error <= 1e-10);

  const std::vector<std::size_t> bad{15, 30, 63};
  CHECK_THROWS_AS(refinement_study(ClosedFormSpectrum::interval(1), bad), Error);
}

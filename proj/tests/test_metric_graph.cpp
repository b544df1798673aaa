#include <doctest.h>

#include <random>
#include <vector>

#include "netheat/error.hpp"
#include "netheat/metric_graph.hpp"

using namespace netheat;

namespace {

MetricGraph triangle(bool strict = false) {
  const std::vector<Edge> e{{0, 1}, {1, 2}, {2, 0}};
  return MetricGraph::build(3, e, strict);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("build: triangle and single edge") {
  const auto g = triangle(true);
  CHECK(g.vertex_count() == 3);
  CHECK(g.edge_count() == 3);

  const std::vector<Edge> one{{0, 1}};
  const auto s = MetricGraph::build(2, one, false);
  CHECK(s.edge_count() == 1);
  CHECK(kind_of([&] { MetricGraph::build(2, one, true); }) == ErrorKind::invalid_graph);
}

TEST_CASE("build: rejects loops, duplicates, disconnected graphs and bad indices") {
  const std::vector<Edge> loop{{0, 1}, {1, 1}};
  const std::vector<Edge> dup{{0, 1}, {1, 0}};
  const std::vector<Edge> split{{0, 1}, {2, 3}};
  const std::vector<Edge> range{{0, 5}};
  const std::vector<Edge> none;
  CHECK(kind_of([&] { MetricGraph::build(2, loop); }) == ErrorKind::invalid_graph);
  CHECK(kind_of([&] { MetricGraph::build(2, dup); }) == ErrorKind::invalid_graph);
  CHECK(kind_of([&] { MetricGraph::build(4, split); }) == ErrorKind::invalid_graph);
  CHECK(kind_of([&] { MetricGraph::build(2, range); }) == ErrorKind::invalid_graph);
  CHECK(kind_of([&] { MetricGraph::build(2, none); }) == ErrorKind::invalid_graph);
}

TEST_CASE("incidence of the triangle") {
  const auto inc = triangle().incidence();
  CHECK(inc.phi_minus(0, 0) == 1);
  CHECK(inc.phi_minus(1, 1) == 1);
  CHECK(inc.phi_minus(2, 2) == 1);
  CHECK(inc.phi_plus(1, 0) == 1);
  CHECK(inc.phi_plus(2, 1) == 1);
  CHECK(inc.phi_plus(0, 2) == 1);
  CHECK(inc.phi_minus.sum() == 3);
  CHECK(inc.phi_plus.sum() == 3);
}

TEST_CASE("incidence of a single edge") {
  const std::vector<Edge> one{{0, 1}};
  const auto inc = MetricGraph::build(2, one).incidence();
  CHECK(inc.phi(0, 0) == -1);
  CHECK(inc.phi(1, 0) == 1);
}

TEST_CASE("incidence column invariants on random connected graphs") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng() % 6;
    std::vector<Edge> e;
    for (std::size_t v = 1; v < n; ++v) e.push_back({rng() % v, v});  // spanning tree
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 2; b < n; ++b)
        if (rng() % 4 == 0) {
          bool exists = false;
          for (const auto& x : e) exists |= (x.tail == a && x.head == b) || (x.tail == b && x.head == a);
          if (!exists) e.push_back({b, a});
        }
    const auto g = MetricGraph::build(n, e);
    const auto inc = g.incidence();
    for (Eigen::Index j = 0; j < inc.phi.cols(); ++j) {
      CHECK(inc.phi_plus.col(j).sum() == 1);
      CHECK(inc.phi_minus.col(j).sum() == 1);
      CHECK(inc.phi.col(j).sum() == 0);
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    CHECK((inc.phi_minus.transpose() * ones).isApproxToConstant(1.0));
    CHECK((inc.phi_plus.transpose() * ones).isApproxToConstant(1.0));

    // Round trip: end values generated from d recover d.
    Eigen::VectorXd d(static_cast<Eigen::Index>(n));
    for (auto& x : d) x = std::uniform_real_distribution<double>(-3, 3)(rng);
    std::vector<EndValues> ends;
    for (const auto& edge : g.edges()) ends.push_back({d[static_cast<Eigen::Index>(edge.tail)],
                                                       d[static_cast<Eigen::Index>(edge.head)]});
    const auto back = g.continuity_trace(ends);
    REQUIRE(back);
    CHECK(*back == d);
  }
}

TEST_CASE("gamma") {
  const auto g = triangle();
  CHECK(g.gamma(0) == std::vector<EdgeId>{0, 2});
  const std::vector<Edge> one{{0, 1}};
  CHECK(MetricGraph::build(2, one).gamma(1) == std::vector<EdgeId>{0});
  const std::vector<Edge> star{{0, 1}, {0, 2}, {0, 3}};
  CHECK(MetricGraph::build(4, star).gamma(0) == std::vector<EdgeId>{0, 1, 2});
  CHECK(kind_of([&] { g.gamma(3); }) == ErrorKind::invalid_argument);
}

TEST_CASE("continuity_trace") {
  const auto g = triangle();
  const std::vector<EndValues> fives{{5, 5}, {5, 5}, {5, 5}};
  const auto d = g.continuity_trace(fives);
  REQUIRE(d);
  CHECK(*d == Eigen::Vector3d(5, 5, 5));

  const std::vector<EndValues> bad{{5, 2}, {3, 5}, {5, 5}};
  CHECK_FALSE(g.continuity_trace(bad));

  const std::vector<Edge> path{{0, 1}, {1, 2}};
  const std::vector<EndValues> hat{{0, 1}, {1, 0}};
  const auto p = MetricGraph::build(3, path).continuity_trace(hat);
  REQUIRE(p);
  CHECK(*p == Eigen::Vector3d(0, 1, 0));

  // Differences below the default tolerance are accepted.
  const std::vector<EndValues> close{{1, 1}, {1 + 1e-14, 1}, {1, 1}};
  CHECK(g.continuity_trace(close));
}

#include "doctest.h"

#include <cmath>

#include "perc/graph.hpp"
#include "perc/observables.hpp"
#include "perc/oracle.hpp"
#include "perc/percolation.hpp"

using namespace perc;

namespace {
Point pt1(int32_t a) {
  Point p(1);
  p[0] = a;
  return p;
}
Point pt2(int32_t a, int32_t b) {
  Point p(2);
  p[0] = a;
  p[1] = b;
  return p;
}
}  // namespace

TEST_CASE("edge_is_open: determinism and support filter") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  EdgeCoinSource coin{9, 4};
  Point a = pt2(0, 0), b = pt2(1, 0), far = pt2(2, 0);
  bool v = edge_is_open(coin, k, 2.0, a, b);
  CHECK(edge_is_open(coin, k, 2.0, a, b) == v);
  CHECK(edge_is_open(coin, k, 2.0, b, a) == v);
  CHECK(!edge_is_open(coin, k, 2.0, a, far));
  CHECK_THROWS_AS(edge_is_open(coin, k, 2.0, a, a), KernelError);
}

TEST_CASE("edge_is_open: empirical marginal 0.5 at p = 2 on NN d=2") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  const uint64_t n = 1000000;
  uint64_t open = 0;
  for (uint64_t i = 0; i < n; ++i) {
    EdgeCoinSource coin{555, i};
    KeyHash h = coin.hasher(rng_tag::kScalar);
    h.absorb(0);
    int32_t x0 = static_cast<int32_t>(h.uniform() * 100) - 50;
    KeyHash h2 = coin.hasher(rng_tag::kScalar);
    h2.absorb(1);
    int32_t x1 = static_cast<int32_t>(h2.uniform() * 100) - 50;
    KeyHash h3 = coin.hasher(rng_tag::kScalar);
    h3.absorb(2);
    int dir = static_cast<int>(h3.uniform() * 4);
    Point a = pt2(x0, x1);
    Point b = a;
    b[dir / 2] += (dir % 2) ? 1 : -1;
    if (edge_is_open(coin, k, 2.0, a, b)) ++open;
  }
  double freq = static_cast<double>(open) / static_cast<double>(n);
  CHECK(std::abs(freq - 0.5) < 3.0 * std::sqrt(0.25 / static_cast<double>(n)));
}

TEST_CASE("explore: p = 0 gives the singleton origin") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  ClusterReport rep = explore_cluster(k, 0.0, {1, 2}, StoppingRule::none());
  CHECK(rep.size == 1);
  CHECK(rep.vertices[0] == Point::origin(2));
  CHECK(rep.open_edges.empty());
  CHECK(rep.stopped_by == StopCause::None);
  CHECK(!rep.exited_ball);
}

TEST_CASE("explore: deterministic full line exits at |v| = 6") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 1, 1);
  ClusterReport rep = explore_cluster(k, 2.0, {3, 7}, StoppingRule::exit_ball(5.0));
  CHECK(rep.exited_ball);
  CHECK(rep.stopped_by == StopCause::ExitBall);
  REQUIRE(rep.first_exit.has_value());
  CHECK(std::abs((*rep.first_exit)[0]) == 6);
}

TEST_CASE("explore: identical inputs give identical reports") {
  KernelSpec k = build_kernel(Family::LongRangeSpreadOut, 2, 2, 1.5, 200.0);
  EdgeCoinSource coin{77, 13};
  StoppingRule stop = StoppingRule::exit_or_size(30.0, 500);
  ClusterReport a = explore_cluster(k, 3.0, coin, stop);
  ClusterReport b = explore_cluster(k, 3.0, coin, stop);
  REQUIRE(a.vertices.size() == b.vertices.size());
  for (size_t i = 0; i < a.vertices.size(); ++i) CHECK(a.vertices[i] == b.vertices[i]);
  REQUIRE(a.open_edges.size() == b.open_edges.size());
  for (size_t i = 0; i < a.open_edges.size(); ++i) CHECK(a.open_edges[i] == b.open_edges[i]);
  CHECK(a.stopped_by == b.stopped_by);
}

TEST_CASE("explore: truncation at the kernel radius is a no-op") {
  KernelSpec k = build_kernel(Family::LongRangeSpreadOut, 1, 1, 1.0, 100.0);
  EdgeCoinSource coin{50, 3};
  StoppingRule stop = StoppingRule::size_capped(200);
  ClusterReport a = explore_cluster(k, 1.5, coin, stop);
  ClusterReport b = explore_truncated_cluster(k, 1.5, 100.0, coin, stop);
  REQUIRE(a.vertices.size() == b.vertices.size());
  for (size_t i = 0; i < a.vertices.size(); ++i) CHECK(a.vertices[i] == b.vertices[i]);
}

TEST_CASE("explore: truncation below the shortest displacement isolates the origin") {
  KernelSpec k = build_kernel(Family::LongRangeSpreadOut, 1, 1, 1.0, 100.0);
  ClusterReport rep = explore_truncated_cluster(k, 1.5, 0.5, {50, 3}, StoppingRule::none());
  CHECK(rep.size == 1);
}

TEST_CASE("monotone coupling: subcritical clusters grow with p") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  REQUIRE(k.exact_scan());
  int grew = 0;
  for (uint64_t i = 0; i < 1000; ++i) {
    EdgeCoinSource coin{888, i};
    ClusterReport lo = explore_cluster(k, 1.2, coin, StoppingRule::none());
    ClusterReport hi = explore_cluster(k, 1.6, coin, StoppingRule::none());
    std::unordered_set<Point, PointHash> hiv(hi.vertices.begin(), hi.vertices.end());
    for (const Point& v : lo.vertices) REQUIRE(hiv.count(v) == 1);
    std::unordered_set<Edge, EdgeHash> hie(hi.open_edges.begin(), hi.open_edges.end());
    for (const Edge& e : lo.open_edges) REQUIRE(hie.count(e) == 1);
    if (hi.size > lo.size) ++grew;
  }
  CHECK(grew > 0);
}

TEST_CASE("one-arm monotone in r") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  auto p4 = one_arm_probability(k, 1.8, 4.0, 20000, 1234);
  auto p8 = one_arm_probability(k, 1.8, 8.0, 20000, 1234);
  double sigma = std::sqrt(p4.std_error * p4.std_error + p8.std_error * p8.std_error);
  CHECK(p8.value <= p4.value + 2.0 * sigma);
}

TEST_CASE("BK inequality on oracle graphs: P(A o B) <= P(A) P(B)") {
  for (uint64_t gseed = 0; gseed < 20; ++gseed) {
    FiniteGraphSpec g = random_small_graph(1000 + gseed, 7, 11);
    // increasing path events A = {origin <-> a}, B = {b <-> c}
    int a = g.n_vertices - 1;
    int b = g.n_vertices / 2;
    int c = g.n_vertices - 2;
    auto build = [&](const std::vector<bool>& open) {
      SmallGraph sg;
      sg.n = g.n_vertices;
      for (size_t i = 0; i < g.edges.size(); ++i)
        if (open[i]) sg.add_edge(g.edges[i].u, g.edges[i].v);
      return sg;
    };
    ConfigEvent eA = [&](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
      return config_connected(gg, w, gg.origin, a);
    };
    ConfigEvent eB = [&](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
      return config_connected(gg, w, b, c);
    };
    ConfigEvent eAoB = [&](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
      SmallGraph sg = build(w);
      auto r = two_pair_edge_disjoint(sg, gg.origin, a, b, c, -1, 1ull << 40);
      return r.has_value() && *r;
    };
    double pa = enumerate_probability(g, eA);
    double pb = enumerate_probability(g, eB);
    double pab = enumerate_probability(g, eAoB);
    CHECK(pab <= pa * pb + 1e-12);
  }
}

TEST_CASE("estimate_pc finds the NN d=2 critical point near 2") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  PcEstimate pc = estimate_pc(k, 8.0, 16.0, 0.02, 150000, 99, 2);
  CHECK(pc.p_hat == doctest::Approx(2.0).epsilon(0.06));
  CHECK(pc.stderr_ > 0.0);
  CHECK(pc.samples_used > 0);
}

TEST_CASE("estimate_pc degenerate: supercritical lower bracket") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  PcEstimate pc = estimate_pc(k, 8.0, 16.0, 0.05, 100000, 7, 2,
                              std::make_pair(3.6, 3.9));
  CHECK(pc.degenerate_lower);
  CHECK(pc.p_hat == doctest::Approx(3.6));
}

TEST_CASE("estimate_pc validates its inputs") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  CHECK_THROWS_AS(estimate_pc(k, 16.0, 8.0, 0.01, 1000, 1), EstimatorError);
  CHECK_THROWS_AS(estimate_pc(k, 4.0, 8.0, 0.01, 1000, 1), EstimatorError);
  CHECK_THROWS_AS(estimate_pc(k, 8.0, 16.0, -1.0, 1000, 1), EstimatorError);
}

TEST_CASE("memory cap raises with the sample index in the message") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  LatticeSubstrate sub(k, 4.0, 11, std::nullopt, 50);  // fully open, tiny cap
  try {
    sub.explore(123, StoppingRule::none());
    FAIL("expected memory cap error");
  } catch (const EstimatorError& e) {
    CHECK(std::string(e.what()).find("123") != std::string::npos);
  }
}

#include "doctest.h"

#include <cmath>

#include "perc/observables.hpp"
#include "perc/oracle.hpp"

using namespace perc;

TEST_CASE("one-arm: trivial levels") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  auto zero = one_arm_probability(k, 0.0, 3.0, 2000, 5);
  CHECK(zero.value == 0.0);
  auto one = one_arm_probability(k, 4.0, 3.0, 2000, 5);
  CHECK(one.value == 1.0);
}

TEST_CASE("one-arm matches the exact oracle on a star graph") {
  FiniteGraphSpec g;
  g.n_vertices = 5;
  g.origin = 0;
  g.boundary = {4};
  g.edges = {{0, 1, 0.7}, {1, 2, 0.5}, {2, 4, 0.55}, {0, 3, 0.3}, {3, 4, 0.45}};
  OracleSubstrate sub(g, 808);
  auto est = one_arm_probability(sub, 1.0, 100000, 2);
  double exact = enumerate_probability(
      g, [](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
        return config_reaches_boundary(gg, w);
      });
  CHECK(std::abs(est.value - exact) <= 3.0 * est.std_error);
}

TEST_CASE("expected ball volume: trivial levels and oracle match") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  auto v0 = expected_ball_volume(k, 0.0, 5.0, 1000, 3);
  CHECK(v0.value == 1.0);  // just the origin
  auto vr0 = expected_ball_volume(k, 1.0, 0.0, 1000, 3);
  CHECK(vr0.value == 1.0);  // P(0 in C(0)) = 1

  // oracle: line 0-1-2-3, the "ball" Q_2 holds ids 0..2
  FiniteGraphSpec g;
  g.n_vertices = 4;
  g.origin = 0;
  g.edges = {{0, 1, 0.8}, {1, 2, 0.5}, {2, 3, 0.6}};
  OracleSubstrate sub(g, 17);
  auto est = expected_ball_volume(sub, 2.0, 100000, 2);
  double exact = 0.0;
  for (int x = 0; x <= 2; ++x)
    exact += enumerate_probability(
        g, [&](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
          return config_connected(gg, w, 0, x);
        });
  CHECK(std::abs(est.value - exact) <= 3.0 * est.std_error);
}

TEST_CASE("cluster size tail: exact monotonicity and trivial values") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  auto pts = cluster_size_tail(k, 1.5, {1, 2, 4, 8, 16}, 20000, 42, 2);
  CHECK(pts[0].estimate.value == 1.0);  // s = 1
  for (size_t j = 1; j < pts.size(); ++j)
    CHECK(pts[j].estimate.value <= pts[j - 1].estimate.value);
  auto zero = cluster_size_tail(k, 0.0, {1, 2}, 500, 1, 1);
  CHECK(zero[1].estimate.value == 0.0);
}

TEST_CASE("cluster size tail matches the oracle") {
  FiniteGraphSpec g = random_small_graph(31415, 7, 11);
  OracleSubstrate sub(g, 9);
  auto pts = cluster_size_tail(sub, {3}, 100000, 2);
  double exact = enumerate_probability(
      g, [](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
        return config_cluster_size(gg, w) >= 3;
      });
  CHECK(std::abs(pts[0].estimate.value - exact) <= 3.0 * pts[0].estimate.std_error);
}

TEST_CASE("second moment bound: deterministic line and error path") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 1, 1);
  // fully open line: N = |Q_4 \ Q_2| = {+-3, +-4} deterministic
  auto est = onearm_second_moment_bound(k, 2.0, 2.0, 2.0, 500, 7);
  CHECK(est.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(onearm_second_moment_bound(k, 0.0, 2.0, 2.0, 500, 7), EstimatorError);
}

TEST_CASE("second moment bound is a lower bound for the one-arm") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  double p = 1.9;
  auto bound = onearm_second_moment_bound(k, p, 4.0, 2.0, 40000, 21, 2);
  auto direct = one_arm_probability(k, p, 4.0, 40000, 22, 2);
  double sigma = std::sqrt(bound.std_error * bound.std_error +
                           direct.std_error * direct.std_error);
  CHECK(bound.value <= direct.value + 3.0 * sigma);
}

TEST_CASE("second moment matches exact moments on the oracle") {
  // line graph: N = # of ids in (1, 3] connected to 0 = |{2,3} cap C|
  FiniteGraphSpec g;
  g.n_vertices = 4;
  g.origin = 0;
  g.edges = {{0, 1, 0.75}, {1, 2, 0.65}, {2, 3, 0.55}};
  OracleSubstrate sub(g, 5);
  auto est = onearm_second_moment_bound(sub, 1.0, 3.0, 100000, 2);
  double en = 0.0, en2 = 0.0;
  const size_t ne = g.edges.size();
  std::vector<bool> open(ne);
  for (uint64_t mask = 0; mask < (1ull << ne); ++mask) {
    double w = 1.0;
    for (size_t i = 0; i < ne; ++i) {
      open[i] = (mask >> i) & 1ull;
      w *= open[i] ? g.edges[i].prob : 1.0 - g.edges[i].prob;
    }
    double n = 0;
    for (int x = 2; x <= 3; ++x)
      if (config_connected(g, open, 0, x)) ++n;
    en += w * n;
    en2 += w * n * n;
  }
  double exact = en * en / en2;
  CHECK(std::abs(est.value - exact) <= 3.0 * est.std_error + 1e-9);
}

TEST_CASE("long-edge decomposition: finite-range kernels have no long edges") {
  KernelSpec k = build_kernel(Family::FiniteRangeSpreadOut, 2, 2);
  auto rep = long_edge_decomposition(k, 1.0, 8.0, 2, 2000, 3);
  CHECK(rep.long_edge_prob_per_vertex == 0.0);
  CHECK(rep.combined.value == 0.0);
}

TEST_CASE("long-edge decomposition: k = 1 size tail is 1 and admissibility is enforced") {
  KernelSpec k = build_kernel(Family::LongRangeSpreadOut, 1, 1, 0.5, 20000.0);
  auto rep = long_edge_decomposition(k, 0.0, 16.0, 1, 2000, 4);
  CHECK(rep.size_tail.value == 1.0);  // |C_r(0)| >= 1 always
  CHECK(rep.combined.value == 0.0);   // p = 0: no long edge can be open
  CHECK_THROWS_AS(long_edge_decomposition(k, 1.0, 4.0, 1000000, 100, 5), EstimatorError);
}

TEST_CASE("long-edge decomposition stays below the direct one-arm estimate") {
  KernelSpec k = build_kernel(Family::LongRangeSpreadOut, 1, 1, 0.5, 20000.0);
  double p = 1.2;
  for (double r : {16.0, 32.0}) {
    uint64_t kk = static_cast<uint64_t>(std::pow(2.0 * r, 0.5) / 2.0);
    if (kk < 1) kk = 1;
    auto rep = long_edge_decomposition(k, p, r, kk, 30000, 6, 2);
    auto direct = one_arm_probability(k, p, r, 30000, 7, 2);
    double sigma = std::sqrt(rep.combined.std_error * rep.combined.std_error +
                             direct.std_error * direct.std_error);
    CHECK(rep.combined.value <= direct.value + 3.0 * sigma);
  }
}

TEST_CASE("ball volume and one-arm curves are monotone in r") {
  KernelSpec k = build_kernel(Family::LongRangeSpreadOut, 2, 2, 1.5, 200.0);
  double p = 2.0;
  auto v1 = expected_ball_volume(k, p, 4.0, 20000, 11, 2);
  auto v2 = expected_ball_volume(k, p, 8.0, 20000, 11, 2);
  CHECK(v2.value + 2.0 * (v1.std_error + v2.std_error) >= v1.value);
  auto a1 = one_arm_probability(k, p, 4.0, 20000, 12, 2);
  auto a2 = one_arm_probability(k, p, 8.0, 20000, 12, 2);
  CHECK(a2.value <= a1.value + 2.0 * (a1.std_error + a2.std_error));
}

#include "doctest.h"

#include <cmath>

#include "perc/oracle.hpp"

using namespace perc;

namespace {
ConfigEvent always = [](const FiniteGraphSpec&, const std::vector<bool>&) { return true; };
}

TEST_CASE("single edge, series, parallel") {
  {
    FiniteGraphSpec g;
    g.n_vertices = 2;
    g.origin = 0;
    g.edges = {{0, 1, 0.37}};
    double v = enumerate_probability(
        g, [](const FiniteGraphSpec&, const std::vector<bool>& w) { return w[0]; });
    CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
  }
  {
    FiniteGraphSpec g;
    g.n_vertices = 3;
    g.origin = 0;
    g.edges = {{0, 1, 0.4}, {1, 2, 0.7}};
    double v = enumerate_probability(
        g, [](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
          return config_connected(gg, w, 0, 2);
        });
    CHECK(v == doctest::Approx(0.4 * 0.7).epsilon(1e-14));
  }
  {
    FiniteGraphSpec g;
    g.n_vertices = 2;
    g.origin = 0;
    g.edges = {{0, 1, 0.4}, {0, 1, 0.7}};  // parallel
    double v = enumerate_probability(
        g, [](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
          return config_connected(gg, w, 0, 1);
        });
    CHECK(v == doctest::Approx(0.4 + 0.7 - 0.4 * 0.7).epsilon(1e-14));
  }
}

TEST_CASE("total mass is 1 and the edge cap is enforced") {
  FiniteGraphSpec g = random_small_graph(5, 8, 14);
  CHECK(enumerate_probability(g, always) == doctest::Approx(1.0).epsilon(1e-12));
  FiniteGraphSpec big;
  big.n_vertices = 24;
  big.origin = 0;
  for (int i = 0; i < 23; ++i) big.edges.push_back({i, i + 1, 0.5});
  CHECK_THROWS_AS(enumerate_probability(big, always), EstimatorError);
}

TEST_CASE("conditionals: forced, independent, and zero-probability") {
  FiniteGraphSpec g;
  g.n_vertices = 3;
  g.origin = 0;
  g.edges = {{0, 1, 0.3}, {1, 2, 0.6}};
  ConfigEvent conn02 = [](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
    return config_connected(gg, w, 0, 2);
  };
  ConfigEvent first_open = [](const FiniteGraphSpec&, const std::vector<bool>& w) {
    return w[0];
  };
  CHECK(enumerate_conditional(g, conn02, conn02) == doctest::Approx(1.0));
  CHECK(enumerate_conditional(g, first_open, conn02) == doctest::Approx(1.0));
  // independent events factorize
  FiniteGraphSpec g2;
  g2.n_vertices = 4;
  g2.origin = 0;
  g2.edges = {{0, 1, 0.3}, {2, 3, 0.8}};
  ConfigEvent e0 = [](const FiniteGraphSpec&, const std::vector<bool>& w) { return w[0]; };
  ConfigEvent e1 = [](const FiniteGraphSpec&, const std::vector<bool>& w) { return w[1]; };
  CHECK(enumerate_conditional(g2, e0, e1) == doctest::Approx(0.3).epsilon(1e-14));
  ConfigEvent never = [](const FiniteGraphSpec&, const std::vector<bool>&) { return false; };
  CHECK_THROWS_AS(enumerate_conditional(g2, e0, never), EstimatorError);
}

TEST_CASE("oracle substrate: cluster size law matches enumeration (chi-square)") {
  // star of 4 spokes mirroring NN d=2 within Q_1
  FiniteGraphSpec g;
  g.n_vertices = 5;
  g.origin = 0;
  double q = 0.45;
  g.edges = {{0, 1, q}, {0, 2, q}, {0, 3, q}, {0, 4, q}};
  OracleSubstrate sub(g, 999);
  const uint64_t n = 100000;
  std::vector<uint64_t> counts(6, 0);
  for (uint64_t i = 0; i < n; ++i) {
    ClusterReport rep = sub.explore(i, StoppingRule::none());
    ++counts[rep.size];
  }
  double chi = 0.0;
  int df = 0;
  for (uint64_t s = 1; s <= 5; ++s) {
    double ps = enumerate_probability(
        g, [&](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
          return config_cluster_size(gg, w) == s;
        });
    if (ps < 1e-12) continue;
    double expect = ps * static_cast<double>(n);
    double d = static_cast<double>(counts[s]) - expect;
    chi += d * d / expect;
    ++df;
  }
  // df - 1 = 4, crit at 1e-3
  CHECK(chi < 18.467);
}

TEST_CASE("exact backbone: tree, cycle, dumbbell") {
  {
    // path 0 - 1 - 2, boundary {2}
    FiniteGraphSpec g;
    g.n_vertices = 3;
    g.origin = 0;
    g.boundary = {2};
    g.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
    std::vector<bool> open = {true, true};
    ExactBackbone eb = enumerate_backbone_and_pivotal(g, open);
    REQUIRE(eb.backbone.size() == 2);
    CHECK(eb.backbone[0] == std::make_pair(0, 1));
    CHECK(eb.backbone[1] == std::make_pair(1, 2));
    REQUIRE(eb.pivotal_ordered.size() == 2);
    CHECK(eb.pivotal_ordered[0] == std::make_pair(0, 1));
    CHECK(eb.pivotal_ordered[1] == std::make_pair(1, 2));
  }
  {
    // two disjoint routes to the boundary: no pivotal edges
    FiniteGraphSpec g;
    g.n_vertices = 4;
    g.origin = 0;
    g.boundary = {3};
    g.edges = {{0, 1, 1.0}, {1, 3, 1.0}, {0, 2, 1.0}, {2, 3, 1.0}};
    std::vector<bool> open(4, true);
    ExactBackbone eb = enumerate_backbone_and_pivotal(g, open);
    CHECK(eb.pivotal_ordered.empty());
    CHECK(eb.backbone.size() == 4);  // every edge forward along its route
  }
  {
    // dumbbell: path 0 - w - boundary plus triangle u-v-x attached via w - x
    // vertices: 0=origin, 1=w, 2=boundary, 3=u, 4=v, 5=x
    FiniteGraphSpec g;
    g.n_vertices = 6;
    g.origin = 0;
    g.boundary = {2};
    g.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {1, 5, 1.0},
               {3, 4, 1.0}, {4, 5, 1.0}, {5, 3, 1.0}};
    std::vector<bool> open(6, true);
    ExactBackbone eb = enumerate_backbone_and_pivotal(g, open);
    for (const auto& [b, t] : eb.backbone) {
      bool is_uv = (b == 3 && t == 4) || (b == 4 && t == 3);
      CHECK(!is_uv);
    }
    // the flow-value-2 mispairing exists but the edge {u,v} is not backbone
  }
}

TEST_CASE("size-biased identity: E[1_F |C|] = sum_x P(F and 0<->x) exactly") {
  for (uint64_t s = 0; s < 10; ++s) {
    FiniteGraphSpec g = random_small_graph(2000 + s, 7, 12);
    ConfigEvent f = [](const FiniteGraphSpec&, const std::vector<bool>& w) { return w[0]; };
    // lhs: E[1_F * |C(0)|]
    double lhs = 0.0;
    for (int x = 0; x < g.n_vertices; ++x) {
      // sum over x of P(F and 0<->x) equals E[1_F |C|]
      lhs += enumerate_probability(
          g, [&](const FiniteGraphSpec& gg, const std::vector<bool>& w) {
            return f(gg, w) && config_connected(gg, w, gg.origin, x);
          });
    }
    // rhs: direct expectation of the weighted indicator
    double rhs = 0.0;
    const size_t ne = g.edges.size();
    std::vector<bool> open(ne);
    for (uint64_t mask = 0; mask < (1ull << ne); ++mask) {
      double w = 1.0;
      for (size_t i = 0; i < ne; ++i) {
        open[i] = (mask >> i) & 1ull;
        w *= open[i] ? g.edges[i].prob : 1.0 - g.edges[i].prob;
      }
      if (f(g, open)) rhs += w * static_cast<double>(config_cluster_size(g, open));
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
  }
}

TEST_CASE("oracle substrate per-edge states are independent of exploration") {
  FiniteGraphSpec g = random_small_graph(321, 6, 9);
  OracleSubstrate sub(g, 17);
  // frequencies of each edge over samples
  const uint64_t n = 50000;
  std::vector<uint64_t> open_counts(g.edges.size(), 0);
  for (uint64_t i = 0; i < n; ++i) {
    auto cfg = sub.sample_config(i);
    for (size_t e = 0; e < cfg.size(); ++e)
      if (cfg[e]) ++open_counts[e];
  }
  for (size_t e = 0; e < g.edges.size(); ++e) {
    double freq = static_cast<double>(open_counts[e]) / static_cast<double>(n);
    double q = g.edges[e].prob;
    CHECK(std::abs(freq - q) <= 4.0 * std::sqrt(q * (1 - q) / static_cast<double>(n)) + 1e-9);
  }
}

#include "doctest.h"

#include <cmath>
#include <vector>

#include "perc/lattice.hpp"
#include "perc/rng.hpp"

using namespace perc;

namespace {
// chi-square critical value at significance 1e-3, df = 15
constexpr double kChi2_15_999 = 37.697;
}

TEST_CASE("keyed uniforms are pure functions of the key") {
  EdgeCoinSource coin{12345, 7};
  KeyHash a = coin.hasher(rng_tag::kScalar);
  a.absorb(42);
  KeyHash b = coin.hasher(rng_tag::kScalar);
  b.absorb(42);
  CHECK(a.uniform() == b.uniform());
  KeyHash c = coin.hasher(rng_tag::kScalar);
  c.absorb(43);
  CHECK(a.uniform() != c.uniform());
}

TEST_CASE("uniformity: 16-bin chi-square at 1e-3") {
  EdgeCoinSource coin{99, 0};
  std::vector<uint64_t> bins(16, 0);
  const uint64_t n = 100000;
  for (uint64_t i = 0; i < n; ++i) {
    KeyHash h = coin.hasher(rng_tag::kScalar);
    h.absorb(i);
    double u = h.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    ++bins[static_cast<size_t>(u * 16.0)];
  }
  double expect = static_cast<double>(n) / 16.0;
  double chi = 0.0;
  for (uint64_t b : bins) {
    double d = static_cast<double>(b) - expect;
    chi += d * d / expect;
  }
  CHECK(chi < kChi2_15_999);
}

TEST_CASE("successive-key pair independence: 4x4 chi-square") {
  EdgeCoinSource coin{7, 3};
  std::vector<uint64_t> bins(16, 0);
  const uint64_t n = 100000;
  for (uint64_t i = 0; i < n; ++i) {
    KeyHash h1 = coin.hasher(rng_tag::kScalar);
    h1.absorb(i);
    KeyHash h2 = coin.hasher(rng_tag::kScalar);
    h2.absorb(i + 1);
    int a = static_cast<int>(h1.uniform() * 4.0);
    int b = static_cast<int>(h2.uniform() * 4.0);
    ++bins[static_cast<size_t>(4 * a + b)];
  }
  double expect = static_cast<double>(n) / 16.0;
  double chi = 0.0;
  for (uint64_t b : bins) {
    double d = static_cast<double>(b) - expect;
    chi += d * d / expect;
  }
  CHECK(chi < kChi2_15_999);
}

TEST_CASE("geometric skip matches the geometric law") {
  const double q = 0.3;
  EdgeCoinSource coin{5, 1};
  std::vector<uint64_t> bins(11, 0);
  const uint64_t n = 100000;
  for (uint64_t i = 0; i < n; ++i) {
    KeyHash h = coin.hasher(rng_tag::kScalar);
    h.absorb(i);
    uint64_t g = geometric_skip(h.uniform(), q);
    bins[static_cast<size_t>(std::min<uint64_t>(g, 10))]++;
  }
  double chi = 0.0;
  double tail = 1.0;
  for (int j = 0; j < 10; ++j) {
    double pj = q * std::pow(1.0 - q, j);
    tail -= pj;
    double expect = pj * static_cast<double>(n);
    double d = static_cast<double>(bins[static_cast<size_t>(j)]) - expect;
    chi += d * d / expect;
  }
  double expect_tail = tail * static_cast<double>(n);
  double d = static_cast<double>(bins[10]) - expect_tail;
  chi += d * d / expect_tail;
  // df = 10, crit at 1e-3
  CHECK(chi < 29.588);
  CHECK(geometric_skip(0.5, 1.0) == 0);
  CHECK(geometric_skip(0.999999, 1e-12) > 100000);
}

TEST_CASE("edge uniforms are symmetric in the endpoints") {
  EdgeCoinSource coin{11, 22};
  Point x(2), y(2);
  x[0] = 3;
  x[1] = -1;
  y[0] = -2;
  y[1] = 5;
  CHECK(edge_uniform(coin, Edge(x, y)) == edge_uniform(coin, Edge(y, x)));
  EdgeCoinSource other{11, 23};
  CHECK(edge_uniform(coin, Edge(x, y)) != edge_uniform(other, Edge(x, y)));
}

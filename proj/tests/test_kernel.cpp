#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "perc/kernel.hpp"

using namespace perc;

namespace {

// brute-force D^(k) over an explicit enumeration of the truncated support
double fourier_brute(const KernelSpec& k, const std::vector<double>& kk) {
  int d = k.dim();
  int64_t R = static_cast<int64_t>(std::ceil(
      k.family() == Family::LongRangeSpreadOut ? k.trunc_radius()
                                               : static_cast<double>(k.spread()) * std::sqrt(d) + 1));
  Point x(d);
  for (int i = 0; i < d; ++i) x[i] = static_cast<int32_t>(-R);
  double acc = 0.0;
  while (true) {
    double w = k.weight(x);
    if (w > 0.0) {
      double dot = 0.0;
      for (int i = 0; i < d; ++i) dot += kk[static_cast<size_t>(i)] * x[i];
      acc += w * std::cos(dot);
    }
    int i = d - 1;
    while (i >= 0 && x[i] == R) {
      x[i] = static_cast<int32_t>(-R);
      --i;
    }
    if (i < 0) break;
    ++x[i];
  }
  return acc / k.normalizer();
}

Point pt(std::vector<int32_t> v) {
  Point p(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) p[static_cast<int>(i)] = v[i];
  return p;
}

}  // namespace

TEST_CASE("nearest-neighbor weights (2d)^{-1}") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  CHECK(k.support_size() == 4);
  CHECK(k.prob(pt({1, 0})) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(k.prob(pt({0, -1})) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(k.prob(pt({1, 1})) == 0.0);
  CHECK(k.d_max() == doctest::Approx(0.25));
}

TEST_CASE("finite-range d=1 L=1 forces D = 1/2") {
  KernelSpec k = build_kernel(Family::FiniteRangeSpreadOut, 1, 1);
  CHECK(k.support_size() == 2);
  CHECK(k.prob(pt({1})) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(k.prob(pt({-1})) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("long-range d=1 alpha=1 weight matches the partial-sum oracle") {
  const double rt = 1e6;
  KernelSpec k = build_kernel(Family::LongRangeSpreadOut, 1, 1, 1.0, rt);
  // oracle: Z = 2 sum_{n=1..1e6} n^{-2}; D(1) = 1/Z
  double acc = 0.0, comp = 0.0;
  for (int64_t n = 1; n <= 1000000; ++n) {
    double y = 2.0 / (static_cast<double>(n) * static_cast<double>(n)) - comp;
    double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  }
  CHECK(k.prob(pt({1})) == doctest::Approx(1.0 / acc).epsilon(1e-12));
  // analytic: 3/pi^2 up to the truncation correction
  CHECK(std::abs(k.prob(pt({1})) - 3.0 / (M_PI * M_PI)) < 2e-6);
  CHECK(k.tail_mass_bound() < 1e-5);
}

TEST_CASE("kernel invariants: normalization, D(0)=0, symmetry") {
  std::vector<KernelSpec> kernels;
  kernels.push_back(build_kernel(Family::NearestNeighbor, 3, 1));
  kernels.push_back(build_kernel(Family::FiniteRangeSpreadOut, 2, 3));
  kernels.push_back(build_kernel(Family::FiniteRangeSpreadOut, 4, 2));
  kernels.push_back(build_kernel(Family::LongRangeSpreadOut, 1, 2, 0.5, 50000.0));
  kernels.push_back(build_kernel(Family::LongRangeSpreadOut, 2, 3, 1.5, 300.0));
  kernels.push_back(build_kernel(Family::LongRangeSpreadOut, 3, 1, 2.5, 40.0));
  for (const KernelSpec& k : kernels) {
    // sum over classes and shells equals Z_D
    double sum = 0.0;
    for (const auto& c : k.classes()) sum += c.weight * static_cast<double>(c.count);
    if (k.has_implicit_tail()) {
      // d=1 closed-form shells
      for (int64_t m = k.core_m() + 1;; ++m) {
        Point x = pt({static_cast<int32_t>(m)});
        double w = k.weight(x);
        if (w <= 0.0) break;
        sum += 2.0 * w;
      }
    } else {
      for (const auto& s : k.shells()) sum += s.mass;
    }
    CHECK(std::abs(sum / k.normalizer() - 1.0) < 1e-12);
    // D(0) = 0
    CHECK(k.weight(Point::origin(k.dim())) == 0.0);
    // orbit symmetry at a support point
    Point x(k.dim());
    x[0] = 1;
    if (k.dim() > 1) x[k.dim() - 1] = 1;
    double w = k.weight(x);
    CHECK(k.weight(-x) == w);
    if (k.dim() > 1) {
      Point y(k.dim());
      y[0] = x[k.dim() - 1];
      y[k.dim() - 1] = x[0];
      CHECK(k.weight(y) == w);
    }
  }
}

TEST_CASE("build_kernel rejects invalid specs") {
  CHECK_THROWS_AS(build_kernel(Family::LongRangeSpreadOut, 2, 2, 2.0, 100.0), KernelError);
  CHECK_THROWS_AS(build_kernel(Family::LongRangeSpreadOut, 2, 8, 0.5, 10.0), KernelError);
  CHECK_THROWS_AS(build_kernel(Family::NearestNeighbor, 2, 3), KernelError);
  CHECK_THROWS_AS(build_kernel(Family::FiniteRangeSpreadOut, 2, 3, 1.0), KernelError);
  CHECK_THROWS_AS(build_kernel(Family::LongRangeSpreadOut, 2, 2), KernelError);
  CHECK_THROWS_AS(build_kernel(Family::LongRangeSpreadOut, 2, 2, -1.0, 100.0), KernelError);
  CHECK_THROWS_AS(build_kernel(Family::NearestNeighbor, 0, 1), KernelError);
}

TEST_CASE("fourier transform basics") {
  KernelSpec nn1 = build_kernel(Family::NearestNeighbor, 1, 1);
  CHECK(nn1.fourier(TorusPoint({0.0})) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(nn1.fourier(TorusPoint({M_PI})) == doctest::Approx(-1.0).epsilon(1e-14));

  KernelSpec frso = build_kernel(Family::FiniteRangeSpreadOut, 2, 3);
  std::vector<double> kk = {0.73, -1.91};
  CHECK(frso.fourier(TorusPoint(kk)) ==
        doctest::Approx(fourier_brute(frso, kk)).epsilon(1e-12));

  KernelSpec lr = build_kernel(Family::LongRangeSpreadOut, 1, 2, 1.5, 500.0);
  kk = {0.341};
  CHECK(lr.fourier(TorusPoint(kk)) == doctest::Approx(fourier_brute(lr, kk)).epsilon(1e-12));

  // hybrid core + shells in d=2
  KernelSpec lr2 = build_kernel(Family::LongRangeSpreadOut, 2, 2, 0.5, 64.0);
  CHECK(lr2.shells().size() > 0);
  kk = {0.91, -2.2};
  CHECK(lr2.fourier(TorusPoint(kk)) == doctest::Approx(fourier_brute(lr2, kk)).epsilon(1e-10));
  CHECK(lr2.fourier(TorusPoint({0.0, 0.0})) == doctest::Approx(1.0).epsilon(1e-12));

  // symmetry and boundedness on random k
  for (int t = 0; t < 20; ++t) {
    EdgeCoinSource coin{777, static_cast<uint64_t>(t)};
    KeyHash h = coin.hasher(rng_tag::kScalar);
    h.absorb(1);
    KeyHash h2 = coin.hasher(rng_tag::kScalar);
    h2.absorb(2);
    std::vector<double> kr = {(2.0 * h.uniform() - 1.0) * M_PI,
                              (2.0 * h2.uniform() - 1.0) * M_PI};
    double v = lr2.fourier(TorusPoint(kr));
    CHECK(std::abs(v) <= 1.0 + 1e-12);
    CHECK(lr2.fourier(TorusPoint({-kr[0], -kr[1]})) == doctest::Approx(v).epsilon(1e-12));
    CHECK(lr2.fourier(TorusPoint({kr[1], kr[0]})) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("mass_within agrees with brute enumeration on a hybrid kernel") {
  KernelSpec k = build_kernel(Family::LongRangeSpreadOut, 2, 2, 0.5, 64.0);
  for (double r : {3.0, 10.0, 31.5, 64.0}) {
    double brute = 0.0;
    int64_t R = 70;
    for (int64_t a = -R; a <= R; ++a)
      for (int64_t b = -R; b <= R; ++b) {
        Point x = pt({static_cast<int32_t>(a), static_cast<int32_t>(b)});
        if (static_cast<double>(x.sqnorm()) <= r * r) brute += k.weight(x);
      }
    brute /= k.normalizer();
    CHECK(k.mass_within(r) == doctest::Approx(brute).epsilon(1e-11));
  }
  CHECK(k.mass_within(64.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(k.mass_beyond(32.0) == doctest::Approx(1.0 - k.mass_within(32.0)).epsilon(1e-9));
}

TEST_CASE("truncated mass tail fits 1 - zeta r^{-alpha}") {
  KernelSpec k = build_kernel(Family::LongRangeSpreadOut, 1, 1, 0.5, 2e6);
  std::vector<double> zs;
  for (double r = 10.0; r <= 10000.0; r *= 2.0) {
    double beyond = 1.0 - k.mass_within(r);
    CHECK(beyond > 0.0);
    zs.push_back(beyond * std::pow(r, 0.5));
  }
  double lo = zs[0], hi = zs[0];
  for (double z : zs) {
    lo = std::min(lo, z);
    hi = std::max(hi, z);
  }
  CHECK(lo > 0.0);
  CHECK(hi / lo < 1.25);  // stable constant across three decades
}

TEST_CASE("sampling: exact per-edge law pinned through the edge uniform") {
  // exact-scan kernel: the composite sampler must agree with edge_is_open
  // displacement by displacement
  KernelSpec k = build_kernel(Family::FiniteRangeSpreadOut, 1, 2);
  REQUIRE(k.exact_scan());
  double p = 2.0;  // pD = 1/2 per edge
  Point site = pt({5});
  std::vector<Point> support = {pt({-2}), pt({-1}), pt({1}), pt({2})};
  for (uint64_t i = 0; i < 2000; ++i) {
    EdgeCoinSource coin{31337, i};
    auto open = sample_open_displacements(k, p, coin, site);
    for (const Point& d : support) {
      bool in = false;
      for (const Point& o : open)
        if (o == d) in = true;
      CHECK(in == edge_is_open(coin, k, p, site, site + d));
    }
  }
}

TEST_CASE("sampling: joint law chi-square against the product measure") {
  KernelSpec k = build_kernel(Family::FiniteRangeSpreadOut, 1, 2);
  double p = 2.0;  // each of 4 edges open with prob 1/2
  Point site = pt({0});
  std::vector<Point> support = {pt({-2}), pt({-1}), pt({1}), pt({2})};
  std::vector<uint64_t> bins(16, 0);
  const uint64_t n = 100000;
  for (uint64_t i = 0; i < n; ++i) {
    EdgeCoinSource coin{2024, i};
    auto open = sample_open_displacements(k, p, coin, site);
    int mask = 0;
    for (const Point& o : open)
      for (size_t j = 0; j < support.size(); ++j)
        if (o == support[j]) mask |= 1 << j;
    ++bins[static_cast<size_t>(mask)];
  }
  double expect = static_cast<double>(n) / 16.0;
  double chi = 0.0;
  for (uint64_t b : bins) {
    double d = static_cast<double>(b) - expect;
    chi += d * d / expect;
  }
  CHECK(chi < 37.697);  // df 15, 1e-3
}

TEST_CASE("sampling: banded kernel marginals match p D(x)") {
  KernelSpec k = build_kernel(Family::LongRangeSpreadOut, 1, 1, 0.5, 50000.0);
  REQUIRE(!k.exact_scan());
  double p = 1.0;
  Point site = pt({-3});
  const uint64_t n = 200000;
  std::map<int32_t, uint64_t> counts;
  double mean_open = 0.0;
  for (uint64_t i = 0; i < n; ++i) {
    EdgeCoinSource coin{4242, i};
    auto open = sample_open_displacements(k, p, coin, site);
    mean_open += static_cast<double>(open.size());
    for (const Point& o : open) {
      if (std::abs(o[0]) <= 3) ++counts[o[0]];
    }
  }
  mean_open /= static_cast<double>(n);
  // E[#open] = p
  CHECK(std::abs(mean_open - p) < 0.02);
  for (int32_t d : {-3, -2, -1, 1, 2, 3}) {
    double q = p * k.prob(pt({d}));
    double sigma = std::sqrt(q * (1.0 - q) / static_cast<double>(n));
    double freq = static_cast<double>(counts[d]) / static_cast<double>(n);
    CHECK(std::abs(freq - q) <= 3.5 * sigma);
  }
}

TEST_CASE("sampling trivial levels") {
  KernelSpec k = build_kernel(Family::NearestNeighbor, 2, 1);
  EdgeCoinSource coin{1, 1};
  CHECK(sample_open_displacements(k, 0.0, coin, Point::origin(2)).empty());
  CHECK(sample_open_displacements(k, 4.0, coin, Point::origin(2)).size() == 4);
  CHECK_THROWS_AS(sample_open_displacements(k, 4.5, coin, Point::origin(2)), KernelError);
}

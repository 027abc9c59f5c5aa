#pragma once
// Fourier-space numerics: triangle diagrams under the random-walk proxy for
// the two-point function, step-distribution transform bounds, and the
// smoothing-kernel volume integrals.

#include <cstdint>

#include "perc/kernel.hpp"
#include "perc/mc.hpp"

namespace perc {

// C^_lambda(k) = 1 / (1 - lambda D^(k)); dominates tau^ at the proxy level.
struct ProxyGreen {
  const KernelSpec* kernel = nullptr;
  double lambda = 0.0;

  ProxyGreen(const KernelSpec& k, double lam);
  double chat(const TorusPoint& k) const;
};

// Monte Carlo over (-pi, pi]^d with dyadic radial strata accumulating at
// k = 0. Every estimate is deterministic per seed and worker-independent.
EstimateWithError triangle_estimate(const ProxyGreen& proxy, uint64_t n_k_samples,
                                    uint64_t seed, int workers = 1);
EstimateWithError open_triangle_bound(const ProxyGreen& proxy, uint64_t n_k_samples,
                                      uint64_t seed, int workers = 1);

struct DhatBoundReport {
  double c1_hat = 0.0;  // inf over ||k||_inf <= 1/L of (1-D^)/(L|k|)^(2^alpha)
  double c2_hat = 0.0;  // inf over ||k||_inf > 1/L of (1-D^)
  double w_hat = 0.0;   // sup over |k| <= 0.1/L of (1-D^)/|k|^(2^alpha)
  bool pass = false;    // all positive and finite
};
DhatBoundReport dhat_bound_report(const KernelSpec& kernel, uint64_t n_k_samples,
                                  uint64_t seed);

// Smoothing kernels g_r (ball-indicator majorant) and h_r (minorant), both
// with nonnegative Fourier transforms (squared Dirichlet kernels).
struct SmoothingKernel {
  enum class Variant { G, H };
  Variant variant = Variant::G;
  double r = 0.0;
  int d = 1;
  int64_t q = 0;        // h_r: floor(r / (2 sqrt(d)))
  int64_t half_width = 0;  // box half-width of the underlying p_n
  double pref = 1.0;    // normalization making the domination criteria exact

  static SmoothingKernel g(double r, int d);
  static SmoothingKernel h(double r, int d);

  double value(const Point& x) const;       // g_r(x) or h_r(x)
  double transform(const TorusPoint& k) const;  // >= 0
};

struct SmoothingCheckReport {
  bool domination_ok = false;   // (i): g >= 1_{Q_r} resp. h <= 1_{Q_r}
  bool transform_ok = false;    // (ii): nonnegative transform at sampled k
  double h0 = 0.0;              // h_r(0), checked <= 1 exactly (H variant)
  bool pass = false;
};
SmoothingCheckReport smoothing_kernel_check(const SmoothingKernel& sk, uint64_t n_points,
                                            uint64_t seed);

// Integral of C^_lambda(k) * transform(k) over the torus: the
// deterministic-numerics analogue of the expected ball volume.
EstimateWithError proxy_volume_integral(const ProxyGreen& proxy, const SmoothingKernel& sk,
                                        uint64_t n_k_samples, uint64_t seed,
                                        int workers = 1);

// Dense tensor-grid quadrature oracles for d = 1 and d = 2 (test support).
double quadrature_integral_1d(const std::function<double(double)>& f, uint64_t n_points);
double quadrature_integral_2d(const std::function<double(double, double)>& f,
                              uint64_t n_per_axis);

}  // namespace perc

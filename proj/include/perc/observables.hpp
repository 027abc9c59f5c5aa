#pragma once
// Monte Carlo estimators for the scalar observables constrained by the
// critical-cluster volume and one-arm bounds. Every estimator has a
// substrate-generic core (exercised against the exact oracle) and a
// kernel-facing wrapper.

#include <vector>

#include "perc/mc.hpp"
#include "perc/percolation.hpp"

namespace perc {

// P(cluster of the origin leaves the ball of radius r).
EstimateWithError one_arm_probability(const Substrate& sub, double r, uint64_t n_samples,
                                      int workers = 1, uint64_t sample_base = 0);
EstimateWithError one_arm_probability(const KernelSpec& kernel, double p, double r,
                                      uint64_t n_samples, uint64_t seed, int workers = 1);

// E[|Q_r ∩ C(0)|] with automatic size-cap escalation: the cap doubles until
// the measured cap-truncation deficit is below 0.1 * stderr (at most
// `max_escalations` doublings, then an error).
struct BallVolumeOptions {
  uint64_t initial_cap = 4096;
  int max_escalations = 4;
  uint64_t pilot_samples = 2000;
};
EstimateWithError expected_ball_volume(const Substrate& sub, double r, uint64_t n_samples,
                                       int workers = 1, uint64_t sample_base = 0,
                                       BallVolumeOptions opts = {});
EstimateWithError expected_ball_volume(const KernelSpec& kernel, double p, double r,
                                       uint64_t n_samples, uint64_t seed, int workers = 1,
                                       BallVolumeOptions opts = {});

// P(|C(0)| >= s) for every s in the increasing grid, one exploration per
// sample shared across the grid.
std::vector<CurvePoint> cluster_size_tail(const Substrate& sub,
                                          const std::vector<uint64_t>& s_grid,
                                          uint64_t n_samples, int workers = 1,
                                          uint64_t sample_base = 0);
std::vector<CurvePoint> cluster_size_tail(const KernelSpec& kernel, double p,
                                          const std::vector<uint64_t>& s_grid,
                                          uint64_t n_samples, uint64_t seed,
                                          int workers = 1);

// Second-moment lower bound E[N]^2 / E[N^2] on the one-arm probability,
// N = |(Q_{nr} \ Q_r) ∩ C(0)|; delta-method standard error.
EstimateWithError onearm_second_moment_bound(const Substrate& sub, double r, double n_factor,
                                             uint64_t n_samples, int workers = 1,
                                             uint64_t sample_base = 0);
EstimateWithError onearm_second_moment_bound(const KernelSpec& kernel, double p, double r,
                                             double n_factor, uint64_t n_samples,
                                             uint64_t seed, int workers = 1);

// The long-edge decomposition of the one-arm lower bound: truncated-cluster
// size tail times the long-edge attachment term.
struct LongEdgeReport {
  EstimateWithError size_tail;      // P(|C_r(0)| >= k)
  EstimateWithError attach_given_k; // P(long edge attaches | size >= k), MC over samples
  double long_edge_prob_per_vertex = 0.0;  // p * sum_{|x| > 2r} D(x), exact
  EstimateWithError combined;       // size_tail * (1 - (1 - p M_{2r})^k)
  double zeta_hat = 0.0;            // fitted truncation-tail constant
  uint64_t k = 0;
  double r = 0.0;
};
LongEdgeReport long_edge_decomposition(const KernelSpec& kernel, double p, double r,
                                       uint64_t k, uint64_t n_samples, uint64_t seed,
                                       int workers = 1);

// Fit zeta over a radius grid from the exact truncated kernel mass:
// 1 - sum_{|x| <= r} D(x) ~= zeta * r^{-alpha}.
double fit_truncation_zeta(const KernelSpec& kernel, const std::vector<double>& r_grid);

}  // namespace perc

#pragma once
// Finite-scale realizations of the three incipient-infinite-cluster
// conditioning schemes, and the cross-scheme agreement report.

#include <optional>
#include <string>
#include <vector>

#include "perc/events.hpp"
#include "perc/mc.hpp"
#include "perc/percolation.hpp"

namespace perc {

struct ConditionedOptions {
  uint64_t n_accepted = 10000;
  uint64_t max_proposals = 50'000'000;
  double acceptance_floor = 1e-6;
  // full-cluster exploration cap schedule (doubling)
  uint64_t initial_cap = 4096;
  int max_escalations = 10;
  int workers = 1;
  uint64_t sample_base = 0;
};

// P(F | 0 <-> x) by rejection sampling; meta records the acceptance rate
// (an estimate of the two-point function tau(x)).
EstimateWithError estimate_two_point_conditioned(const Substrate& sub, const Point& x,
                                                 const EventFn& event,
                                                 const ConditionedOptions& opts);

// Q_p(F): importance sampling with weight |C(0)| over unconditioned samples;
// errors out when the effective sample size drops below ess_floor.
struct SizeBiasedOptions {
  uint64_t n_samples = 100000;
  double ess_floor = 100.0;
  uint64_t initial_cap = 65536;
  int max_escalations = 10;
  int workers = 1;
  uint64_t sample_base = 0;
};
EstimateWithError estimate_size_biased(const Substrate& sub, const EventFn& event,
                                       const SizeBiasedOptions& opts);

// P(F | 0 <-> Q_r^c) by rejection on ball exit.
EstimateWithError estimate_one_arm_conditioned(const Substrate& sub, double r,
                                               const EventFn& event,
                                               const ConditionedOptions& opts);

// Size-biased expected ball volume curve E[|C| |Q_r ∩ C|]/E[|C|] per radius,
// the sampling realization of the IIC ball-volume expectation at slightly
// subcritical p.
std::vector<CurvePoint> size_biased_volume_curve(const KernelSpec& kernel, double p,
                                                 const std::vector<double>& r_grid,
                                                 uint64_t n_samples, uint64_t seed,
                                                 int workers = 1);

struct SchemeCurve {
  std::string scheme;                  // "two-point" | "size-biased" | "one-arm"
  std::vector<double> scales;          // |x|, p, or r
  std::vector<EstimateWithError> estimates;
  double drift_last = 0.0;             // terminal minus previous estimate
  double drift_sigma = 0.0;
};

struct AgreementReport {
  std::vector<SchemeCurve> schemes;
  struct Pair {
    std::string a, b;
    double diff = 0.0;
    double sigma = 0.0;  // combined standard error
    bool within_3sigma = false;
  };
  std::vector<Pair> terminal_pairs;
  bool terminals_agree = false;
  bool drifts_converged = false;  // every last-step drift < 2 sigma
};

struct AgreementScales {
  std::vector<Point> x_list;    // increasing |x|
  std::vector<double> p_list;   // increasing toward p_c (strictly below)
  std::vector<double> r_list;   // increasing
};

// The three estimators across their scales at p-hat-c (two-point and
// one-arm) and along p_list (size-biased), with the pairwise terminal
// comparison.
AgreementReport scheme_agreement(const KernelSpec& kernel, double p_c_hat,
                                 const CylinderEvent& event, const AgreementScales& scales,
                                 uint64_t budget_accepted, uint64_t seed, int workers = 1);

}  // namespace perc

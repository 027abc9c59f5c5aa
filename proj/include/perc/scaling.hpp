#pragma once
// Log-log exponent fitting with bootstrap confidence intervals, plus the
// theorem-by-theorem exponent report.

#include <optional>
#include <string>
#include <vector>

#include "perc/mc.hpp"

namespace perc {
class KernelSpec;

struct ScalingFit {
  double exponent = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // bootstrap 95%
  double window_min = 0.0, window_max = 0.0;
  int n_boot = 0;
  double residual_diagnostic = 0.0;  // max |standardized residual|
  double curvature_score = 0.0;      // |quadratic coeff| / se
  bool curvature_flagged = false;    // curvature_score > 3
  double intercept = 0.0;
};

// Weighted least squares of log(value) on log(abscissa), weights
// 1/relative-stderr^2; Gaussian parametric bootstrap (default 2000 rounds).
ScalingFit fit_power_law(const std::vector<CurvePoint>& points, int n_boot = 2000,
                         uint64_t seed = 0x5ca11ull);

struct ExponentCheck {
  std::string name;
  ScalingFit fit;
  double target = 0.0;
  double tolerance = 0.0;
  bool one_sided_floor = false;  // pass iff exponent >= target - tolerance
  bool pass = false;
};

struct ExponentReport {
  double p_hat = 0.0;
  double alpha_eff = 0.0;        // 2 ^ alpha (2 for finite range)
  bool high_dim_regime = true;   // d > 3 (2 ^ alpha); warning only
  std::vector<ExponentCheck> checks;
  std::vector<std::pair<std::string, std::vector<CurvePoint>>> curves;
};

struct ExponentReportOptions {
  std::vector<double> one_arm_r = {8, 16, 32, 64, 128};
  std::vector<double> volume_r = {8, 16, 32, 64, 128};
  std::vector<uint64_t> tail_s = {16, 64, 256, 1024, 4096};
  std::vector<double> backbone_r = {8, 16, 32, 64};
  double backbone_R_factor = 4.0;
  std::vector<double> iic_volume_r = {8, 16, 32, 64};
  uint64_t samples_per_point = 100000;
  uint64_t backbone_accepted = 2000;
  bool include_backbone = true;
  bool include_iic_volume = true;
  double subcritical_margin = 0.02;  // relative p offset for the size-biased run
  int workers = 1;
};

ExponentReport exponent_report(const KernelSpec& kernel, double p_hat, uint64_t seed,
                               const ExponentReportOptions& opts = {});

}  // namespace perc

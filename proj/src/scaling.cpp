#include "perc/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "perc/backbone.hpp"
#include "perc/iic.hpp"
#include "perc/observables.hpp"
#include "perc/percolation.hpp"

namespace perc {

namespace {

struct Wls2 {
  double slope = 0.0, intercept = 0.0;
};

Wls2 wls_line(const std::vector<double>& lx, const std::vector<double>& ly,
              const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sw += w[i];
    sx += w[i] * lx[i];
    sy += w[i] * ly[i];
    sxx += w[i] * lx[i] * lx[i];
    sxy += w[i] * lx[i] * ly[i];
  }
  double det = sw * sxx - sx * sx;
  Wls2 out;
  if (std::abs(det) < 1e-300) throw EstimatorError("degenerate abscissa grid");
  out.slope = (sw * sxy - sx * sy) / det;
  out.intercept = (sxx * sy - sx * sxy) / det;
  return out;
}

// quadratic WLS coefficient c2 and its standard error (3x3 normal equations)
std::pair<double, double> wls_quadratic_c2(const std::vector<double>& lx,
                                           const std::vector<double>& ly,
                                           const std::vector<double>& w) {
  double m[3][3] = {{0}};
  double b[3] = {0};
  for (size_t i = 0; i < lx.size(); ++i) {
    double x = lx[i];
    double basis[3] = {1.0, x, x * x};
    for (int a = 0; a < 3; ++a) {
      b[a] += w[i] * basis[a] * ly[i];
      for (int c = 0; c < 3; ++c) m[a][c] += w[i] * basis[a] * basis[c];
    }
  }
  // invert by Gauss-Jordan together with the identity for covariance
  double inv[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  double a[3][3];
  std::memcpy(a, m, sizeof(a));
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int rr = col + 1; rr < 3; ++rr)
      if (std::abs(a[rr][col]) > std::abs(a[piv][col])) piv = rr;
    if (std::abs(a[piv][col]) < 1e-300) return {0.0, 0.0};
    std::swap(a[col], a[piv]);
    std::swap(inv[col], inv[piv]);
    double scale = a[col][col];
    for (int c = 0; c < 3; ++c) {
      a[col][c] /= scale;
      inv[col][c] /= scale;
    }
    for (int rr = 0; rr < 3; ++rr) {
      if (rr == col) continue;
      double f = a[rr][col];
      for (int c = 0; c < 3; ++c) {
        a[rr][c] -= f * a[col][c];
        inv[rr][c] -= f * inv[col][c];
      }
    }
  }
  double coef[3] = {0, 0, 0};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) coef[r] += inv[r][c] * b[c];
  double se = std::sqrt(std::max(0.0, inv[2][2]));
  return {coef[2], se};
}

}  // namespace

ScalingFit fit_power_law(const std::vector<CurvePoint>& points, int n_boot, uint64_t seed) {
  if (points.size() < 4) throw EstimatorError("power-law fit needs at least 4 points");
  std::vector<double> lx, ly, sig, w;
  for (const CurvePoint& cp : points) {
    if (!(cp.abscissa > 0.0)) throw EstimatorError("abscissa must be positive");
    if (!(cp.estimate.value > 0.0))
      throw EstimatorError("power-law fit needs positive estimates");
    if (!(cp.estimate.std_error > 0.0))
      throw EstimatorError("power-law fit needs positive standard errors");
    lx.push_back(std::log(cp.abscissa));
    ly.push_back(std::log(cp.estimate.value));
    double rel = cp.estimate.std_error / cp.estimate.value;
    sig.push_back(rel);
    w.push_back(1.0 / (rel * rel));
  }
  Wls2 fit = wls_line(lx, ly, w);
  ScalingFit out;
  out.exponent = fit.slope;
  out.intercept = fit.intercept;
  out.window_min = points.front().abscissa;
  out.window_max = points.back().abscissa;
  out.n_boot = n_boot;

  // residual diagnostic: max standardized residual
  double maxres = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    double res = (ly[i] - (fit.intercept + fit.slope * lx[i])) / sig[i];
    maxres = std::max(maxres, std::abs(res));
  }
  out.residual_diagnostic = maxres;
  auto [c2, se2] = wls_quadratic_c2(lx, ly, w);
  out.curvature_score = se2 > 0.0 ? std::abs(c2) / se2 : 0.0;
  out.curvature_flagged = out.curvature_score > 3.0;

  // parametric bootstrap over Gaussian perturbations in log space
  std::vector<double> slopes;
  slopes.reserve(static_cast<size_t>(n_boot));
  std::vector<double> ly2(ly.size());
  for (int bi = 0; bi < n_boot; ++bi) {
    for (size_t i = 0; i < ly.size(); ++i) {
      KeyHash h(seed);
      h.absorb(0xb007ull).absorb(static_cast<uint64_t>(bi)).absorb(i);
      double u1 = h.uniform();
      KeyHash h2(seed);
      h2.absorb(0xb008ull).absorb(static_cast<uint64_t>(bi)).absorb(i);
      double u2 = h2.uniform();
      double gauss = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300))) *
                     std::cos(2.0 * M_PI * u2);
      ly2[i] = ly[i] + sig[i] * gauss;
    }
    slopes.push_back(wls_line(lx, ly2, w).slope);
  }
  std::sort(slopes.begin(), slopes.end());
  size_t lo = static_cast<size_t>(std::floor(0.025 * (slopes.size() - 1)));
  size_t hi = static_cast<size_t>(std::ceil(0.975 * (slopes.size() - 1)));
  out.ci_low = std::min(slopes[lo], out.exponent);
  out.ci_high = std::max(slopes[hi], out.exponent);
  return out;
}

ExponentReport exponent_report(const KernelSpec& kernel, double p_hat, uint64_t seed,
                               const ExponentReportOptions& opts) {
  ExponentReport rep;
  rep.p_hat = p_hat;
  double a = std::min(2.0, kernel.alpha());
  rep.alpha_eff = a;
  double a4 = std::min(4.0, kernel.alpha());
  rep.high_dim_regime = static_cast<double>(kernel.dim()) > 3.0 * a;

  auto add_check = [&](const std::string& name, const std::vector<CurvePoint>& pts,
                       double target, double tol, bool one_sided) {
    ExponentCheck chk;
    chk.name = name;
    chk.fit = fit_power_law(pts);
    chk.target = target;
    chk.tolerance = tol;
    chk.one_sided_floor = one_sided;
    chk.pass = one_sided ? chk.fit.exponent >= target - tol
                         : std::abs(chk.fit.exponent - target) <= tol;
    rep.checks.push_back(chk);
    rep.curves.push_back({name, pts});
  };

  {
    std::vector<CurvePoint> pts;
    for (double r : opts.one_arm_r) {
      CurvePoint cp;
      cp.abscissa = r;
      cp.estimate = one_arm_probability(kernel, p_hat, r, opts.samples_per_point,
                                        seed ^ 0xa001ull, opts.workers);
      pts.push_back(cp);
    }
    add_check("one-arm", pts, -a4 / 2.0, 0.10, /*one_sided=*/true);
  }
  {
    std::vector<CurvePoint> pts;
    for (double r : opts.volume_r) {
      CurvePoint cp;
      cp.abscissa = r;
      cp.estimate = expected_ball_volume(kernel, p_hat, r, opts.samples_per_point,
                                         seed ^ 0xa002ull, opts.workers);
      pts.push_back(cp);
    }
    add_check("ball-volume", pts, a, 0.15, false);
  }
  {
    auto pts = cluster_size_tail(kernel, p_hat, opts.tail_s, opts.samples_per_point,
                                 seed ^ 0xa003ull, opts.workers);
    add_check("size-tail", pts, -0.5, 0.10, false);
  }
  if (opts.include_backbone) {
    BackboneCurve bc =
        backbone_count_curve(kernel, p_hat, opts.backbone_r, opts.backbone_R_factor,
                             opts.backbone_accepted, seed ^ 0xa004ull, opts.workers);
    add_check("backbone-count", bc.points, a, 0.20, false);
  }
  if (opts.include_iic_volume) {
    double p_sub = p_hat * (1.0 - opts.subcritical_margin);
    auto pts = size_biased_volume_curve(kernel, p_sub, opts.iic_volume_r,
                                        opts.samples_per_point, seed ^ 0xa005ull,
                                        opts.workers);
    add_check("iic-ball-volume", pts, 2.0 * a, 0.25, false);
  }
  return rep;
}

}  // namespace perc

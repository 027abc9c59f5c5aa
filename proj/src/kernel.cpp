#include "perc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

namespace perc {

namespace {

constexpr uint64_t kMemberBudget = 1ull << 21;   // core box point budget
constexpr uint64_t kSupportHardCap = 1ull << 31; // refuse larger enumerations
constexpr uint64_t kScanThreshold = 4096;        // exact-scan kernels

double surface_constant(int d) {
  // Surface area of the unit sphere in R^d: 2 pi^{d/2} / Gamma(d/2).
  return 2.0 * std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0);
}

int64_t ipow_odd(int64_t base, int d) {
  int64_t r = 1;
  for (int i = 0; i < d; ++i) r *= base;
  return r;
}

// Count of lattice points with ||x||_inf == m in dimension d.
int64_t shell_count_linf(int64_t m, int d) {
  if (m == 0) return 1;
  return ipow_odd(2 * m + 1, d) - ipow_odd(2 * m - 1, d);
}

// Default truncation radii keep the one-time support enumeration within a
// fixed budget per dimension.
int64_t trunc_cap(int d) {
  switch (d) {
    case 1: return 10'000'000;
    case 2: return 16'384;
    default: {
      double r = (std::pow(3.0e8, 1.0 / d) - 1.0) / 2.0;
      return std::max<int64_t>(2, static_cast<int64_t>(r));
    }
  }
}

struct BoxIter {
  // Lexicographic odometer over [-m, m]^d.
  int d;
  int64_t m;
  Point x;
  bool done = false;
  BoxIter(int dd, int64_t mm) : d(dd), m(mm), x(dd) {
    for (int i = 0; i < d; ++i) x[i] = static_cast<int32_t>(-m);
  }
  void next() {
    for (int i = d - 1; i >= 0; --i) {
      if (x[i] < m) {
        ++x[i];
        return;
      }
      x[i] = static_cast<int32_t>(-m);
    }
    done = true;
  }
};

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::NearestNeighbor: return "nearest-neighbor";
    case Family::FiniteRangeSpreadOut: return "finite-range-spread-out";
    case Family::LongRangeSpreadOut: return "long-range-spread-out";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "nn" || name == "nearest-neighbor") return Family::NearestNeighbor;
  if (name == "frso" || name == "finite-range-spread-out") return Family::FiniteRangeSpreadOut;
  if (name == "lrso" || name == "long-range-spread-out") return Family::LongRangeSpreadOut;
  throw KernelError("unknown kernel family: " + name);
}

TorusPoint::TorusPoint(std::vector<double> kk) : k(std::move(kk)) {
  for (double v : k) {
    if (!(v > -M_PI - 1e-15 && v <= M_PI + 1e-15))
      throw KernelError("torus point component out of (-pi, pi]");
  }
}

double KernelSpec::raw_weight_sq(int64_t sqnorm) const {
  if (sqnorm <= 0) return 0.0;
  switch (family_) {
    case Family::NearestNeighbor:
      return sqnorm == 1 ? 1.0 : 0.0;
    case Family::FiniteRangeSpreadOut:
      return 1.0;  // caller checks the l-inf box
    case Family::LongRangeSpreadOut: {
      const int64_t L2 = L_ * L_;
      if (sqnorm <= L2) return 1.0;
      double ratio = static_cast<double>(sqnorm) / static_cast<double>(L2);
      // ratio^{-(d+alpha)/2}; sqrt chains when 4*exponent is integral
      if (e4_ >= 0) {
        int a = e4_ / 4, b = e4_ % 4;
        double r = 1.0;
        for (int i = 0; i < a; ++i) r *= ratio;
        if (b) {
          double s = std::sqrt(ratio);
          if (b == 2) r *= s;
          else {
            double q = std::sqrt(s);
            r *= (b == 1) ? q : s * q;
          }
        }
        return 1.0 / r;
      }
      return std::pow(ratio, -weight_exp_);
    }
  }
  return 0.0;
}

double KernelSpec::weight(const Point& delta) const {
  if (delta.d != d_) throw KernelError("dimension mismatch");
  int64_t s = delta.sqnorm();
  if (s == 0) return 0.0;
  switch (family_) {
    case Family::NearestNeighbor:
      return s == 1 ? 1.0 : 0.0;
    case Family::FiniteRangeSpreadOut:
      return delta.linf() <= L_ ? 1.0 : 0.0;
    case Family::LongRangeSpreadOut:
      if (s > rt2_) return 0.0;
      return raw_weight_sq(s);
  }
  return 0.0;
}

double KernelSpec::shell_mass_d2(int64_t m, int64_t limit_sq, uint64_t* count) const {
  // Mass of {||x||_inf = m, |x|^2 <= limit_sq} in d = 2:
  //   4 * [ w(m^2) + 2 * sum_{j=1..m} w(m^2+j^2) - w(2m^2) ]
  // with w zeroed beyond the limit.
  const int64_t m2 = m * m;
  double sum = 0.0;
  uint64_t cnt = 0;
  for (int64_t j = 1; j <= m; ++j) {
    int64_t s = m2 + j * j;
    if (s > limit_sq) break;  // j ascending => s ascending
    sum += raw_weight_sq(s);
    ++cnt;
  }
  double mass = 2.0 * sum;
  uint64_t total = 2 * cnt;
  if (m2 <= limit_sq) {
    mass += raw_weight_sq(m2);
    ++total;
  }
  if (2 * m2 <= limit_sq) {
    mass -= raw_weight_sq(2 * m2);
    --total;
  }
  if (count) *count = 4 * total;
  return 4.0 * mass;
}

KernelSpec build_kernel(Family family, int d, int64_t L,
                        std::optional<double> alpha,
                        std::optional<double> trunc_radius) {
  if (d < 1 || d > kMaxDim) throw KernelError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  if (L < 1) throw KernelError("spread-out parameter L must be >= 1");
  if (family == Family::NearestNeighbor && L != 1)
    throw KernelError("nearest-neighbor kernel requires L = 1");
  if (family != Family::LongRangeSpreadOut) {
    if (alpha) throw KernelError("alpha is only meaningful for long-range kernels");
    if (trunc_radius) throw KernelError("trunc_radius is only meaningful for long-range kernels");
  } else {
    if (!alpha) throw KernelError("long-range kernel requires alpha");
    if (!(*alpha > 0.0)) throw KernelError("alpha must be positive");
    if (*alpha == 2.0) throw KernelError("alpha = 2 is excluded");
  }

  KernelSpec k;
  k.family_ = family;
  k.d_ = d;
  k.L_ = L;
  k.alpha_ = family == Family::LongRangeSpreadOut ? *alpha : std::numeric_limits<double>::infinity();

  double rt = 0.0;
  if (family == Family::LongRangeSpreadOut) {
    if (trunc_radius) {
      rt = *trunc_radius;
      if (!(rt >= 2.0 * static_cast<double>(L)))
        throw KernelError("trunc_radius must be at least 2L");
    } else {
      double want = std::max(1e4, std::pow(10.0, 6.0 / *alpha)) * static_cast<double>(L);
      rt = std::min(want, static_cast<double>(trunc_cap(d)));
      rt = std::max(rt, 2.0 * static_cast<double>(L));
    }
    // enumeration budget: ball volume in points
    double pts = std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0) * std::pow(rt, d);
    if (pts > static_cast<double>(kSupportHardCap))
      throw KernelError("truncation radius implies an unmaterializable support (" +
                        std::to_string(pts) + " points)");
    k.weight_exp_ = (d + *alpha) / 2.0;
    double e4 = 4.0 * k.weight_exp_;
    k.e4_ = (std::abs(e4 - std::round(e4)) < 1e-12) ? static_cast<int>(std::llround(e4)) : -1;
  }
  k.trunc_radius_ = rt;
  {
    long double r2 = static_cast<long double>(rt) * static_cast<long double>(rt);
    k.rt2_ = (family == Family::LongRangeSpreadOut)
                 ? static_cast<int64_t>(std::floor(r2 + 1e-9L))
                 : std::numeric_limits<int64_t>::max();
  }

  // Core box radius.
  int64_t core_m;
  if (family == Family::NearestNeighbor) {
    core_m = 1;
  } else if (family == Family::FiniteRangeSpreadOut) {
    core_m = L;
    double pts = std::pow(2.0 * static_cast<double>(L) + 1.0, d);
    if (pts > static_cast<double>(kSupportHardCap))
      throw KernelError("finite-range support too large to materialize");
  } else {
    int64_t budget_m = static_cast<int64_t>((std::pow(static_cast<double>(kMemberBudget), 1.0 / d) - 1.0) / 2.0);
    int64_t ball_m = static_cast<int64_t>(std::floor(rt / std::sqrt(static_cast<double>(d))));
    while (ball_m > 0 && ball_m * ball_m * d > k.rt2_) --ball_m;
    core_m = std::min(budget_m, ball_m);
    if (core_m < 0) core_m = 0;
  }
  k.core_m_ = core_m;

  // Enumerate the core box and group into classes by squared norm.
  std::map<int64_t, std::vector<Point>> buckets;
  for (BoxIter it(d, core_m); !it.done; it.next()) {
    int64_t s = it.x.sqnorm();
    if (s == 0) continue;
    double w;
    if (family == Family::NearestNeighbor) w = (s == 1) ? 1.0 : 0.0;
    else if (family == Family::FiniteRangeSpreadOut) w = 1.0;
    else w = (s <= k.rt2_) ? k.raw_weight_sq(s) : 0.0;
    if (w <= 0.0) continue;
    buckets[s].push_back(it.x);
  }
  double z_core = 0.0;
  for (auto& [s, pts] : buckets) {
    DisplacementClass c;
    c.sqnorm = s;
    c.weight = k.raw_weight_sq(s);
    c.count = pts.size();
    c.member_offset = k.members_.size() / static_cast<size_t>(d);
    for (const Point& p : pts)
      for (int i = 0; i < d; ++i) k.members_.push_back(p[i]);
    z_core += c.weight * static_cast<double>(c.count);
    k.support_size_ += c.count;
    k.classes_.push_back(c);
    k.class_mass_prefix_.push_back(z_core);
  }

  // Tail strata.
  double z_tail = 0.0;
  k.tail_m_lo_ = core_m + 1;
  k.tail_m_hi_ = core_m + 1;
  if (family == Family::LongRangeSpreadOut) {
    int64_t m_hi = static_cast<int64_t>(std::floor(rt)) + 1;  // exclusive
    if (m_hi > core_m + 1) {
      k.tail_m_hi_ = m_hi;
      if (d == 1) {
        k.implicit_tail_ = true;
        double acc = 0.0, comp = 0.0;  // Kahan
        for (int64_t m = core_m + 1; m < m_hi; ++m) {
          if (m * m > k.rt2_) break;
          double w = 2.0 * k.raw_weight_sq(m * m);
          double y = w - comp, t = acc + y;
          comp = (t - acc) - y;
          acc = t;
          k.support_size_ += 2;
        }
        z_tail = acc;
      } else if (d == 2) {
        int64_t n = m_hi - (core_m + 1);
        k.shells_.resize(static_cast<size_t>(n));
        auto work = [&](int64_t lo, int64_t hi) {
          for (int64_t m = lo; m < hi; ++m) {
            ShellStratum s;
            s.m = m;
            s.mass = k.shell_mass_d2(m, k.rt2_, &s.support_count);
            k.shells_[static_cast<size_t>(m - (core_m + 1))] = s;
          }
        };
        int64_t mid = core_m + 1 + n / 2;
        std::thread t1(work, core_m + 1, mid);
        work(mid, m_hi);
        t1.join();
      } else {
        // General d: one pass over the truncation box, bucketing by shell.
        k.shells_.resize(static_cast<size_t>(m_hi - (core_m + 1)));
        for (size_t i = 0; i < k.shells_.size(); ++i)
          k.shells_[i].m = core_m + 1 + static_cast<int64_t>(i);
        int64_t R = m_hi - 1;
        for (BoxIter it(d, R); !it.done; it.next()) {
          int64_t m = it.x.linf();
          if (m <= core_m) continue;
          int64_t s = it.x.sqnorm();
          if (s > k.rt2_) continue;
          ShellStratum& sh = k.shells_[static_cast<size_t>(m - (core_m + 1))];
          sh.mass += k.raw_weight_sq(s);
          sh.support_count += 1;
        }
      }
      if (!k.implicit_tail_) {
        double acc = 0.0, comp = 0.0;
        k.shell_mass_prefix_.reserve(k.shells_.size());
        for (const ShellStratum& s : k.shells_) {
          double y = s.mass - comp, t = acc + y;
          comp = (t - acc) - y;
          acc = t;
          k.shell_mass_prefix_.push_back(acc);
          k.support_size_ += s.support_count;
        }
        z_tail = acc;
      }
    }
  }

  if (k.support_size_ == 0) throw KernelError("kernel support is empty");
  k.z_ = z_core + z_tail;
  k.w_max_ = k.classes_.empty() ? k.raw_weight_sq(k.tail_m_lo_ * k.tail_m_lo_)
                                : k.classes_.front().weight;

  // Analytic bound on the un-truncated mass beyond the truncation radius.
  if (family == Family::LongRangeSpreadOut) {
    double a = *alpha;
    double reff = rt - std::sqrt(static_cast<double>(d));
    if (reff < static_cast<double>(L)) reff = static_cast<double>(L);
    double bound = surface_constant(d) * std::pow(static_cast<double>(L), d + a) *
                   std::pow(reff, -a) / a;
    k.tail_mass_bound_ = bound / k.z_;
  }

  // Sampling bands: core classes (weight-descending), then tail shells.
  uint64_t run_lo = 0;
  double run_maj = 0.0;
  uint64_t run_n = 0;
  auto flush_core = [&](uint64_t hi) {
    if (run_n == 0) return;
    SampleBand b;
    b.majorant = run_maj;
    b.trials = run_n;
    b.tail = false;
    b.mem_lo = run_lo;
    b.mem_hi = hi;
    k.bands_.push_back(b);
  };
  uint64_t mem_pos = 0;
  for (const DisplacementClass& c : k.classes_) {
    if (run_n > 0 && c.weight < run_maj / 2.0) {
      flush_core(mem_pos);
      run_n = 0;
    }
    if (run_n == 0) {
      run_lo = mem_pos;
      run_maj = c.weight;
    }
    run_n += c.count;
    mem_pos += c.count;
  }
  flush_core(mem_pos);

  if (k.tail_m_hi_ > k.tail_m_lo_) {
    int64_t m = k.tail_m_lo_;
    while (m < k.tail_m_hi_) {
      double maj = k.raw_weight_sq(m * m);
      int64_t m_end = m + 1;
      while (m_end < k.tail_m_hi_ && k.raw_weight_sq(m_end * m_end) >= maj / 2.0) ++m_end;
      SampleBand b;
      b.majorant = maj;
      b.tail = true;
      b.m_lo = m;
      b.m_hi = m_end;
      b.trials = static_cast<uint64_t>(ipow_odd(2 * m_end - 1, d) - ipow_odd(2 * m - 1, d));
      k.bands_.push_back(b);
      m = m_end;
    }
  }

  k.exact_scan_ = k.support_size_ <= kScanThreshold;
  return k;
}

namespace {
// Unrank index -> point of the box [-m, m]^{d}.
void box_unrank(int d, int64_t m, uint64_t idx, Point& out, int from_dim) {
  uint64_t base = static_cast<uint64_t>(2 * m + 1);
  for (int i = from_dim; i < d; ++i) {
    out[i] = static_cast<int32_t>(static_cast<int64_t>(idx % base) - m);
    idx /= base;
  }
}

// Unrank index -> point of the l-inf shell {||x||_inf = m} in dimension d,
// filling coordinates [from_dim, d).
void shell_unrank(int d, int64_t m, uint64_t idx, Point& out, int from_dim) {
  int k = d - from_dim;
  if (k == 1) {
    out[from_dim] = static_cast<int32_t>(idx == 0 ? -m : m);
    return;
  }
  uint64_t face = static_cast<uint64_t>(ipow_odd(2 * m + 1, k - 1));
  if (idx < face) {
    out[from_dim] = static_cast<int32_t>(-m);
    box_unrank(d, m, idx, out, from_dim + 1);
    return;
  }
  idx -= face;
  if (idx < face) {
    out[from_dim] = static_cast<int32_t>(m);
    box_unrank(d, m, idx, out, from_dim + 1);
    return;
  }
  idx -= face;
  uint64_t sub = static_cast<uint64_t>(shell_count_linf(m, k - 1));
  out[from_dim] = static_cast<int32_t>(-m + 1 + static_cast<int64_t>(idx / sub));
  shell_unrank(d, m, idx % sub, out, from_dim + 1);
}
}  // namespace

Point KernelSpec::band_trial_point(const SampleBand& b, uint64_t trial) const {
  if (!b.tail) return member_point(b.mem_lo + trial);
  if (d_ == 1) {
    int64_t m = b.m_lo + static_cast<int64_t>(trial / 2);
    Point p(1);
    p[0] = static_cast<int32_t>((trial & 1) ? m : -m);
    return p;
  }
  uint64_t y = trial + static_cast<uint64_t>(ipow_odd(2 * b.m_lo - 1, d_));
  // invert m -> (2m+1)^d at y
  int64_t m = static_cast<int64_t>((std::pow(static_cast<double>(y), 1.0 / d_) + 1.0) / 2.0);
  if (m < b.m_lo) m = b.m_lo;
  while (static_cast<uint64_t>(ipow_odd(2 * m + 1, d_)) <= y) ++m;
  while (m > b.m_lo && static_cast<uint64_t>(ipow_odd(2 * m - 1, d_)) > y) --m;
  uint64_t pos = y - static_cast<uint64_t>(ipow_odd(2 * m - 1, d_));
  Point p(d_);
  shell_unrank(d_, m, pos, p, 0);
  return p;
}

double KernelSpec::mass_within(double r) const {
  if (r <= 0.0) return 0.0;
  long double r2l = static_cast<long double>(r) * static_cast<long double>(r);
  int64_t rsq = static_cast<int64_t>(std::floor(r2l + 1e-9L));
  if (rsq > rt2_) rsq = rt2_;
  double acc = 0.0;
  // core classes: prefix of classes with sqnorm <= rsq
  size_t lo = 0, hi = classes_.size();
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (classes_[mid].sqnorm <= rsq) lo = mid + 1;
    else hi = mid;
  }
  if (lo > 0) acc = class_mass_prefix_[lo - 1];
  // tail
  if (tail_m_hi_ > tail_m_lo_) {
    if (d_ == 1) {
      int64_t m_top = std::min<int64_t>(tail_m_hi_ - 1, static_cast<int64_t>(std::floor(r + 1e-12)));
      for (int64_t m = tail_m_lo_; m <= m_top; ++m) {
        if (m * m > rsq) break;
        acc += 2.0 * raw_weight_sq(m * m);
      }
    } else {
      // shells fully inside: m^2 * d <= rsq
      int64_t m_full = tail_m_lo_ - 1;
      while ((m_full + 1) < tail_m_hi_ && (m_full + 1) * (m_full + 1) * d_ <= rsq) ++m_full;
      if (m_full >= tail_m_lo_)
        acc += shell_mass_prefix_[static_cast<size_t>(m_full - tail_m_lo_)];
      // straddling shells: m in (m_full, min(floor(r), m_hi))
      int64_t m_top = std::min<int64_t>(tail_m_hi_ - 1, static_cast<int64_t>(std::floor(r + 1e-12)));
      for (int64_t m = m_full + 1; m <= m_top; ++m) {
        if (d_ == 2) {
          acc += shell_mass_d2(m, rsq, nullptr);
        } else {
          Point p(d_);
          int64_t n = shell_count_linf(m, d_);
          for (int64_t i = 0; i < n; ++i) {
            shell_unrank(d_, m, static_cast<uint64_t>(i), p, 0);
            int64_t s = p.sqnorm();
            if (s <= rsq) acc += raw_weight_sq(s);
          }
        }
      }
    }
  }
  return acc / z_;
}

double KernelSpec::tail_mass_from(double r) const {
  double within = mass_within(r);
  double v = 1.0 - within;
  return v < 0.0 ? 0.0 : v;
}

double KernelSpec::fourier(const TorusPoint& k) const {
  if (static_cast<int>(k.k.size()) != d_) throw KernelError("torus point dimension mismatch");
  // analytic fast paths
  if (family_ == Family::NearestNeighbor) {
    double s = 0.0;
    for (int i = 0; i < d_; ++i) s += std::cos(k.k[static_cast<size_t>(i)]);
    return s / d_;
  }
  if (family_ == Family::FiniteRangeSpreadOut) {
    // (prod_i Dirichlet_{2L+1}(k_i) - 1) / ((2L+1)^d - 1)
    double prod = 1.0;
    for (int i = 0; i < d_; ++i) {
      double kk = k.k[static_cast<size_t>(i)];
      double n = 2.0 * static_cast<double>(L_) + 1.0;
      double dir;
      if (std::abs(kk) < 1e-9) {
        // n + O(k^2); series keeps the limit smooth
        dir = n - kk * kk * n * (n * n - 1.0) / 24.0;
      } else {
        dir = std::sin(n * kk / 2.0) / std::sin(kk / 2.0);
      }
      prod *= dir;
    }
    double denom = std::pow(2.0 * static_cast<double>(L_) + 1.0, d_) - 1.0;
    return (prod - 1.0) / denom;
  }

  // long-range: exact sum over the support
  double acc = 0.0;
  // core classes, member enumeration
  const int32_t* mem = members_.data();
  for (const DisplacementClass& c : classes_) {
    double cs = 0.0;
    const int32_t* base = mem + c.member_offset * static_cast<uint64_t>(d_);
    for (uint64_t j = 0; j < c.count; ++j) {
      double dot = 0.0;
      for (int i = 0; i < d_; ++i) dot += k.k[static_cast<size_t>(i)] * base[j * d_ + i];
      cs += std::cos(dot);
    }
    acc += c.weight * cs;
  }
  if (tail_m_hi_ > tail_m_lo_) {
    if (d_ == 1) {
      // Chebyshev recurrence over cos(m k)
      double kk = k.k[0];
      double c1 = std::cos(static_cast<double>(tail_m_lo_ - 1) * kk);
      double c0 = std::cos(static_cast<double>(tail_m_lo_) * kk);
      double two_cos = 2.0 * std::cos(kk);
      for (int64_t m = tail_m_lo_; m < tail_m_hi_; ++m) {
        if (m * m > rt2_) break;
        acc += 2.0 * raw_weight_sq(m * m) * c0;
        double cn = two_cos * c0 - c1;
        c1 = c0;
        c0 = cn;
      }
    } else if (d_ == 2) {
      const double k1 = k.k[0], k2 = k.k[1];
      const double tc1 = 2.0 * std::cos(k1), tc2 = 2.0 * std::cos(k2);
      for (int64_t m = tail_m_lo_; m < tail_m_hi_; ++m) {
        const int64_t m2 = m * m;
        if (m2 > rt2_) break;
        // sides x1 = +-m : 2 cos(k1 m) [w(m^2) + 2 sum_{j>=1} w(m^2+j^2) cos(k2 j)]
        // sides x2 = +-m : 2 cos(k2 m) [w(m^2) + 2 sum_{i=1..m-1} w(m^2+i^2) cos(k1 i)]
        double s2 = 0.0, s1 = 0.0;
        {
          double c1p = 1.0, c0p = std::cos(k2);
          double c1q = 1.0, c0q = std::cos(k1);
          for (int64_t j = 1; j <= m; ++j) {
            int64_t s = m2 + j * j;
            if (s <= rt2_) {
              double w = raw_weight_sq(s);
              s2 += w * c0p;
              if (j < m) s1 += w * c0q;
            }
            double cn = tc2 * c0p - c1p;
            c1p = c0p;
            c0p = cn;
            cn = tc1 * c0q - c1q;
            c1q = c0q;
            c0q = cn;
          }
        }
        double wm = (m2 <= rt2_) ? raw_weight_sq(m2) : 0.0;
        acc += 2.0 * std::cos(k1 * static_cast<double>(m)) * (wm + 2.0 * s2);
        acc += 2.0 * std::cos(k2 * static_cast<double>(m)) * (wm + 2.0 * s1);
      }
    } else {
      Point p(d_);
      for (const ShellStratum& sh : shells_) {
        int64_t n = shell_count_linf(sh.m, d_);
        for (int64_t i = 0; i < n; ++i) {
          shell_unrank(d_, sh.m, static_cast<uint64_t>(i), p, 0);
          int64_t s = p.sqnorm();
          if (s > rt2_) continue;
          double dot = 0.0;
          for (int j = 0; j < d_; ++j) dot += k.k[static_cast<size_t>(j)] * p[j];
          acc += raw_weight_sq(s) * std::cos(dot);
        }
      }
    }
  }
  return acc / z_;
}

bool edge_is_open(const EdgeCoinSource& coin, const KernelSpec& kernel, double p,
                  const Point& x, const Point& y) {
  if (x == y) throw KernelError("edge endpoints must differ");
  double w = kernel.weight(y - x);
  if (w <= 0.0) return false;
  return edge_uniform(coin, Edge(x, y)) < p * w / kernel.normalizer();
}

std::vector<Point> sample_open_displacements(const KernelSpec& kernel, double p,
                                             const EdgeCoinSource& coin,
                                             const Point& site) {
  if (!(p >= 0.0) || p > kernel.p_max() * (1.0 + 1e-12))
    throw KernelError("p out of [0, 1/||D||_inf]");
  std::vector<Point> out;
  const double z = kernel.normalizer();
  for_each_proposed_displacement(kernel, p, coin, site, [&](const Point& delta, double q) {
    double w = kernel.weight(delta);
    if (w <= 0.0) return;
    Point y = site + delta;
    if (edge_uniform(coin, Edge(site, y)) * q < p * w / z) out.push_back(delta);
  });
  return out;
}

}  // namespace perc

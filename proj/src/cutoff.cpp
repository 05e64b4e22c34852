#include "gradlab/cutoff.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace gradlab {
namespace {

constexpr double kLeftEnd = 0.25;
constexpr double kRightEnd = 0.75;
constexpr double kSupportFloor = 1e-300;  // ratio excluded below this

// Profile cache for the free-function forms.
const TransitionProfile& cached_profile(double a) {
  thread_local std::optional<TransitionProfile> prof;
  if (!prof || prof->a() != a) prof.emplace(a);
  return *prof;
}

}  // namespace

void CutoffParams::validate() const {
  if (!(a > 0 && a < 1)) throw InvalidArgument("cutoff: a must lie in (0,1)");
  if (!(R > 0)) throw InvalidArgument("cutoff: R must be positive");
  if (!(rho > 0 && rho < R)) throw InvalidArgument("cutoff: need 0 < rho < R");
  if (!(T > 0)) throw InvalidArgument("cutoff: T must be positive");
  if (!(delta > 0 && delta < T))
    throw InvalidArgument("cutoff: need 0 < delta < T");
}

TransitionProfile::TransitionProfile(double a) : a_(a) {
  if (!(a > 0 && a < 1))
    throw InvalidArgument("transition profile: a must lie in (0,1)");
  pow_exp_ = 2.0 / (1.0 - a);

  // Bridge on [1/4, 3/4]: quintic in x = s - 1/4 matching value and two
  // derivatives of both closed-form pieces.
  const double p = pow_exp_;
  const double L = kRightEnd - kLeftEnd;
  const double v0 = std::pow(kLeftEnd, p);
  const double d0 = p * std::pow(kLeftEnd, p - 1);
  const double s0 = p * (p - 1) * std::pow(kLeftEnd, p - 2);
  const double v1 = 1.0 - std::pow(1.0 - kRightEnd, 4.0);  // 255/256
  const double d1v = 4.0 * std::pow(1.0 - kRightEnd, 3.0); // 1/16
  const double s1 = -12.0 * std::pow(1.0 - kRightEnd, 2.0); // -3/4

  bridge_[0] = v0;
  bridge_[1] = d0;
  bridge_[2] = 0.5 * s0;
  const double r0 = v1 - (bridge_[0] + bridge_[1] * L + bridge_[2] * L * L);
  const double r1 = d1v - (bridge_[1] + 2.0 * bridge_[2] * L);
  const double r2 = s1 - 2.0 * bridge_[2];
  bridge_[3] = (10.0 * r0 - 4.0 * r1 * L + 0.5 * r2 * L * L) / (L * L * L);
  bridge_[4] = (-15.0 * r0 + 7.0 * r1 * L - r2 * L * L) / (L * L * L * L);
  bridge_[5] = (6.0 * r0 - 3.0 * r1 * L + 0.5 * r2 * L * L) / (L * L * L * L * L);

  // The bridge must keep the profile strictly increasing; the construction
  // is rejected if it fails (holds throughout a in [0.25, 0.8]).
  for (int i = 0; i <= 1000; ++i) {
    double s = kLeftEnd + (kRightEnd - kLeftEnd) * i / 1000.0;
    if (!(d1(s) > 0))
      throw InvalidArgument("transition profile: bridge not increasing");
  }
}

double TransitionProfile::value(double s) const {
  if (s <= 0) return 0.0;
  if (s >= 1) return 1.0;
  if (s <= kLeftEnd) return std::pow(s, pow_exp_);
  if (s >= kRightEnd) {
    double q = 1.0 - s;
    return 1.0 - q * q * q * q;
  }
  double x = s - kLeftEnd;
  double v = bridge_[5];
  for (int k = 4; k >= 0; --k) v = v * x + bridge_[k];
  return v;
}

double TransitionProfile::d1(double s) const {
  if (s <= 0 || s >= 1) return 0.0;
  if (s <= kLeftEnd) return pow_exp_ * std::pow(s, pow_exp_ - 1);
  if (s >= kRightEnd) {
    double q = 1.0 - s;
    return 4.0 * q * q * q;
  }
  double x = s - kLeftEnd;
  double v = 5.0 * bridge_[5];
  v = v * x + 4.0 * bridge_[4];
  v = v * x + 3.0 * bridge_[3];
  v = v * x + 2.0 * bridge_[2];
  v = v * x + bridge_[1];
  return v;
}

double TransitionProfile::d2(double s) const {
  if (s <= 0 || s >= 1) return 0.0;
  if (s <= kLeftEnd)
    return pow_exp_ * (pow_exp_ - 1) * std::pow(s, pow_exp_ - 2);
  if (s >= kRightEnd) {
    double q = 1.0 - s;
    return -12.0 * q * q;
  }
  double x = s - kLeftEnd;
  double v = 20.0 * bridge_[5];
  v = v * x + 12.0 * bridge_[4];
  v = v * x + 6.0 * bridge_[3];
  v = v * x + 2.0 * bridge_[2];
  return v;
}

double alpha(double t, double a) { return cached_profile(a).value(t); }

double psi_bar(double r, const CutoffParams& p) {
  p.validate();
  if (r < 0) throw InvalidArgument("psi_bar: r must be nonnegative");
  return cached_profile(p.a).value((p.R - r) / p.rho);
}

double psi_bar_d1(double r, const CutoffParams& p) {
  p.validate();
  return -cached_profile(p.a).d1((p.R - r) / p.rho) / p.rho;
}

double psi_bar_d2(double r, const CutoffParams& p) {
  p.validate();
  return cached_profile(p.a).d2((p.R - r) / p.rho) / (p.rho * p.rho);
}

double phi_time(double t, const CutoffParams& p) {
  p.validate();
  return cached_profile(p.a).value((t - p.t0 + p.T) / p.delta);
}

double phi_time_d1(double t, const CutoffParams& p) {
  p.validate();
  return cached_profile(p.a).d1((t - p.t0 + p.T) / p.delta) / p.delta;
}

namespace {

// Ratio in profile coordinates. The scaled derivative bounds collapse to
// pure functions of s: rho|psi'| + rho^2|psi''| = |a'(s)| + |a''(s)| and
// delta|phi'| = |a'(s)|, which keeps the measurement exactly invariant
// under joint rescaling of (r, R, rho).
double space_ratio(const TransitionProfile& prof, double s, double a) {
  double num = std::fabs(prof.d1(s)) + std::fabs(prof.d2(s));
  double den = std::pow(prof.value(s), a);
  return num / den;
}

double time_ratio(const TransitionProfile& prof, double s, double a) {
  double num = std::fabs(prof.d1(s));
  double den = std::pow(prof.value(s), 0.5 * (1.0 + a));
  return num / den;
}

template <class Map, class Ratio>
void sup_over_grid(const TransitionProfile& prof, double lo, double hi, int n,
                   Map to_s, Ratio ratio, double* overall, double* bridge) {
  for (int i = 0; i <= n; ++i) {
    double x = lo + (hi - lo) * i / n;
    double s = to_s(x);
    double val = prof.value(s);
    if (!(val >= kSupportFloor)) continue;
    double r = ratio(s);
    if (!std::isfinite(r)) throw Error("cutoff: non-finite derivative sample");
    *overall = std::max(*overall, r);
    if (s > kLeftEnd && s < kRightEnd) *bridge = std::max(*bridge, r);
  }
}

}  // namespace

double space_ratio_sup(const TransitionProfile& prof, double s_lo, double s_hi,
                       int pts) {
  double m = 0;
  for (int i = 0; i <= pts; ++i) {
    double s = s_lo + (s_hi - s_lo) * i / pts;
    if (!(prof.value(s) >= kSupportFloor)) continue;
    m = std::max(m, space_ratio(prof, s, prof.a()));
  }
  return m;
}

double time_ratio_sup(const TransitionProfile& prof, double s_lo, double s_hi,
                      int pts) {
  double m = 0;
  for (int i = 0; i <= pts; ++i) {
    double s = s_lo + (s_hi - s_lo) * i / pts;
    if (!(prof.value(s) >= kSupportFloor)) continue;
    m = std::max(m, time_ratio(prof, s, prof.a()));
  }
  return m;
}

CutoffConstants measure_cutoff_constants(const CutoffParams& p, int grid_points,
                                         double r_lo, double r_hi, double t_lo,
                                         double t_hi) {
  p.validate();
  if (grid_points < 100)
    throw InvalidArgument("measure_cutoff_constants: need >= 100 grid points");
  if (r_lo < 0) r_lo = 0;
  if (r_hi < 0) r_hi = p.R;
  if (t_lo > t_hi) {
    t_lo = p.t0 - p.T;
    t_hi = p.t0;
  }
  const TransitionProfile prof(p.a);

  CutoffConstants out;
  auto sratio = [&](double s) { return space_ratio(prof, s, p.a); };
  auto tratio = [&](double s) { return time_ratio(prof, s, p.a); };
  auto r_to_s = [&](double r) { return (p.R - r) / p.rho; };
  auto t_to_s = [&](double t) { return (t - (p.t0 - p.T)) / p.delta; };
  for (int n : {grid_points, 2 * grid_points, 4 * grid_points}) {
    sup_over_grid(prof, r_lo, r_hi, n, r_to_s, sratio, &out.C_space,
                  &out.bridge_max_space);
    sup_over_grid(prof, t_lo, t_hi, n, t_to_s, tratio, &out.C_time,
                  &out.bridge_max_time);
  }
  return out;
}

}  // namespace gradlab

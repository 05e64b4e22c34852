#pragma once

#include "gradlab/errors.hpp"

namespace gradlab {

// Parameters for the space/time cut-off pair. The spatial profile equals 1
// on [0, R-rho] and 0 beyond R; the temporal profile is 0 up to t0-T and 1
// from t0-T+delta on.
struct CutoffParams {
  double a = 0.5;   // sharpness exponent, in (0,1)
  double R = 1.0;
  double rho = 0.5;
  double t0 = 0.0;
  double T = 1.0;
  double delta = 0.5;
  void validate() const;
};

// C^2 transition profile on [0,1]: s^{2/(1-a)} on [0,1/4], 1-(1-s)^4 on
// [3/4,1], and a degree-5 Hermite bridge in between that matches value and
// two derivatives at both junctions. Construction verifies the bridge is
// strictly increasing and throws InvalidArgument otherwise.
class TransitionProfile {
 public:
  explicit TransitionProfile(double a);
  double a() const { return a_; }
  double value(double s) const;
  double d1(double s) const;
  double d2(double s) const;

 private:
  double a_ = 0.5;
  double pow_exp_ = 4.0;      // 2/(1-a)
  double bridge_[6] = {};     // monomial coefficients in (s - 1/4)
};

// Free-function forms of the three cut-off constructions.
double alpha(double t, double a);
double psi_bar(double r, const CutoffParams& p);
double psi_bar_d1(double r, const CutoffParams& p);
double psi_bar_d2(double r, const CutoffParams& p);
double phi_time(double t, const CutoffParams& p);
double phi_time_d1(double t, const CutoffParams& p);

struct CutoffConstants {
  double C_space = 0;        // sup of (rho|psi'| + rho^2|psi''|) / psi^a
  double C_time = 0;         // sup of delta|phi'| / phi^{(1+a)/2}
  double bridge_max_space = 0;  // same ratio restricted to the bridge piece
  double bridge_max_time = 0;
};

// Supremum of the two derivative-bound ratios over a uniform grid with two
// dyadic refinements (N, 2N, 4N points). Points where the profile vanishes
// (below 1e-300) are excluded: both sides vanish there. Optional windows
// restrict the sampled r / t ranges (defaults [0, R] and [t0-T, t0]).
CutoffConstants measure_cutoff_constants(const CutoffParams& p, int grid_points,
                                         double r_lo = -1, double r_hi = -1,
                                         double t_lo = 1, double t_hi = 0);

// Ratio sup over a grid in profile coordinates s in [s_lo, s_hi]; used by
// the CSV emitter and the regional checks. space form uses (|a'|+|a''|)/a^a,
// time form |a'|/a^{(1+a)/2}.
double space_ratio_sup(const TransitionProfile& prof, double s_lo, double s_hi,
                       int pts);
double time_ratio_sup(const TransitionProfile& prof, double s_lo, double s_hi,
                      int pts);

}  // namespace gradlab

#pragma once

#include <span>
#include <string>
#include <vector>

#include "gradlab/field.hpp"
#include "gradlab/source.hpp"

namespace gradlab {

// Scalar building blocks of the estimates: the nonlinearity/curvature term,
// and the time/space cut-off localization terms, in first-power and squared
// scale.
struct EstimateConstants {
  double gamma = 0, mu = 0, k = 0;
  double delta = 1, rho = 1, R = 2;

  double common_term() const;        // gamma^{1/3} + sqrt(mu)
  double time_cutoff_term() const;   // 1/sqrt(delta)
  double space_cutoff_term() const;  // 1/rho + 1/sqrt(rho(R-rho)) + k_+^{1/4}/sqrt(rho)
  double common_term_sq() const;        // gamma^{2/3} + mu
  double time_cutoff_term_sq() const;   // 1/delta
  double space_cutoff_term_sq() const;  // 1/rho^2 + 1/(rho(R-rho)) + sqrt(k_+)/rho

  static EstimateConstants from(const SourceAnalysis& an, const DomainSpec& dom,
                                double k);
};

// sup of |grad u| / (u (1 - v)) over the initial slice / lateral boundary.
// The unknown sentinel (+inf) degrades the zone coefficients to the
// universal cut-off terms.
struct BoundaryTraces {
  double initial_trace = 0;
  double lateral_trace = 0;
  static BoundaryTraces unknown();
  bool known() const;
};

// v = ln(u/M) <= 0, its gradient (euclidean components and metric norm) and
// w = |grad v|^2/(1-v)^2, per time level. Closed-form derivatives are used
// when the field registers them; otherwise centered grid stencils with
// one-sided fallbacks at the cut layer.
struct DerivedFields {
  std::vector<std::vector<double>> v;
  std::vector<std::vector<double>> gx, gy;  // euclid components of grad v
  std::vector<std::vector<double>> grad_v;  // metric norm of grad v
  std::vector<std::vector<double>> w;
};

DerivedFields derived_fields(const SolutionField& f);

BoundaryTraces boundary_traces(const SolutionField& f,
                               const DerivedFields& d);

// The four space-time zones of the cylinder.
enum class Region { NearInitial, NearLateral, Corner, Interior };
const char* region_name(Region r);

Region region_of(std::span<const double> x, double t, const DomainSpec& dom,
                 const MetricSpec& metric);

// Zone coefficients: the best option per zone between boundary data and the
// universal cut-off terms, at a given constant C.
struct ZoneCoefficients {
  double near_initial = 0;  // tau + min(sigma, C*S)
  double near_lateral = 0;  // sigma + min(tau, C*T)
  double corner = 0;        // sigma + tau
  double interior = 0;      // min(sigma+tau, sigma+C*T, tau+C*S, C*(T+S))
  double pick(Region r) const;

  static ZoneCoefficients make(const BoundaryTraces& tr,
                               const EstimateConstants& c, double C);
  // squared-scale variant (coefficients of the w bounds)
  static ZoneCoefficients make_squared(const BoundaryTraces& tr,
                                       const EstimateConstants& c, double C);
};

// Zone value at a point (the piecewise-constant coupling of coefficients to
// regions).
double zone_value(std::span<const double> x, double t, const DomainSpec& dom,
                  const MetricSpec& metric, const ZoneCoefficients& z);

// Main estimate right-hand side: (C*common + zone) * (1 + ln(M/u)).
double theorem_rhs(double u_value, double M, double zone, double C,
                   const EstimateConstants& c);

// The four regional w bounds (near-initial / near-lateral / corner /
// interior), each C*common_sq plus its data/cut-off term.
struct RegionalWBounds {
  double near_initial = 0;
  double near_lateral = 0;
  double corner = 0;
  double interior = 0;
};
RegionalWBounds regional_w_bounds(const BoundaryTraces& tr,
                                  const EstimateConstants& c, double C);

// Closed-form corollary coefficients (of (1+ln(M/u)) or its square) on the
// half cylinder Q_{R/2,T/2}.
enum class CorollaryKind {
  SZHeat,          // C (1/R + 1/sqrt(T) + sqrt(k)), k >= 0
  MaZengZ1,        // squared: C (k + 1/R^2 + 1/T + lambda alpha m^{alpha-1})
  MaZengZ2,        // squared: C (k + 1/R^2 + 1/T + lambda alpha M^{alpha-1})
  MaZengZ3,        // squared: C (k + 1/R^2 + 1/T + lambda(alpha-1) m^{alpha-1})
  SemilinearP,     // C (max(sqrt(k_+), sqrt((k+p theta^{p-1})_+)) + 1/sqrt(T) + 1/R)
  USquared,        // C (1/R + 1/sqrt(T) + sqrt((2M+k)_+))
  InteriorGeneral, // C (common + 1/sqrt(T) + 1/R + k_+^{1/4}/sqrt(R))
  BoundaryAware,   // C (sqrt(k_+) + max(tau, sigma))
};
const char* corollary_name(CorollaryKind k);
bool corollary_squared(CorollaryKind k);

struct CorollaryParams {
  double k = 0, R = 1, T = 1, M = 1, m = 1;
  double lambda = 0, alpha = 0, p = 0;
  double gamma = 0, mu = 0;
  BoundaryTraces traces;
};
double corollary_coefficient(CorollaryKind kind, const CorollaryParams& pr,
                             double C);

}  // namespace gradlab

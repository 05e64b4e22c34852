#include "gradlab/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gradlab/solver.hpp"

namespace gradlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pos(double v) { return v > 0 ? v : 0.0; }

}  // namespace

double EstimateConstants::common_term() const {
  return std::cbrt(gamma) + std::sqrt(mu);
}
double EstimateConstants::time_cutoff_term() const {
  return 1.0 / std::sqrt(delta);
}
double EstimateConstants::space_cutoff_term() const {
  return 1.0 / rho + 1.0 / std::sqrt(rho * (R - rho)) +
         std::pow(pos(k), 0.25) / std::sqrt(rho);
}
double EstimateConstants::common_term_sq() const {
  return std::cbrt(gamma) * std::cbrt(gamma) + mu;
}
double EstimateConstants::time_cutoff_term_sq() const { return 1.0 / delta; }
double EstimateConstants::space_cutoff_term_sq() const {
  return 1.0 / (rho * rho) + 1.0 / (rho * (R - rho)) +
         std::sqrt(pos(k)) / rho;
}

EstimateConstants EstimateConstants::from(const SourceAnalysis& an,
                                          const DomainSpec& dom, double k) {
  EstimateConstants c;
  c.gamma = an.gamma;
  c.mu = an.mu;
  c.k = k;
  c.delta = dom.delta;
  c.rho = dom.rho;
  c.R = dom.R;
  return c;
}

BoundaryTraces BoundaryTraces::unknown() { return {kInf, kInf}; }
bool BoundaryTraces::known() const {
  return std::isfinite(initial_trace) && std::isfinite(lateral_trace);
}

DerivedFields derived_fields(const SolutionField& f) {
  const LatticeGrid& g = f.grid;
  const std::size_t nl = f.u.size();
  DerivedFields d;
  d.v.assign(nl, std::vector<double>(g.size(), kNaN));
  d.gx.assign(nl, std::vector<double>(g.size(), kNaN));
  d.gy.assign(nl, std::vector<double>(g.size(), kNaN));
  d.grad_v.assign(nl, std::vector<double>(g.size(), kNaN));
  d.w.assign(nl, std::vector<double>(g.size(), kNaN));

  for (std::size_t m = 0; m < nl; ++m) {
    // v = ln(u/M) at every stored node
    for (std::size_t id = 0; id < g.size(); ++id) {
      if (g.cls[id] == NodeClass::Exterior) continue;
      double uv = f.u[m][id];
      if (!(uv > 0)) throw Error("derived_fields: non-positive u");
      if (uv > f.M) throw Error("derived_fields: u exceeds declared M");
      d.v[m][id] = std::log(uv / f.M);
    }
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        int id = g.index(i, j);
        if (g.cls[id] == NodeClass::Exterior) continue;
        std::vector<double> gv;
        if (f.has_exact()) {
          auto p = g.point(i, j);
          auto gu = f.exact_gradient(p, f.times[m]);
          gv.resize(gu.size());
          for (std::size_t q = 0; q < gu.size(); ++q)
            gv[q] = gu[q] / f.u[m][id];
        } else {
          gv = lattice_gradient(g, d.v[m], i, j);
        }
        double n2 = 0;
        for (double c : gv) n2 += c * c;
        d.gx[m][id] = gv[0];
        d.gy[m][id] = gv.size() > 1 ? gv[1] : 0.0;
        double metric_sq = n2 * g.inv_phi[id];
        d.grad_v[m][id] = std::sqrt(metric_sq);
        double one_minus_v = 1.0 - d.v[m][id];
        d.w[m][id] = metric_sq / (one_minus_v * one_minus_v);
      }
  }
  return d;
}

BoundaryTraces boundary_traces(const SolutionField& f, const DerivedFields& d) {
  const LatticeGrid& g = f.grid;
  if (f.u.empty()) throw InvalidArgument("boundary_traces: empty field");
  BoundaryTraces tr{0.0, 0.0};
  // initial slice: all ball nodes (interior plus the cut layer)
  for (int j = 0; j < g.ny; ++j) {
    auto rs = g.rows[j];
    for (int i = rs.begin; i < rs.end; ++i) {
      int id = g.index(i, j);
      tr.initial_trace = std::max(
          tr.initial_trace, d.grad_v[0][id] / (1.0 - d.v[0][id]));
    }
  }
  for (int id : g.cut_layer)
    tr.initial_trace =
        std::max(tr.initial_trace, d.grad_v[0][id] / (1.0 - d.v[0][id]));
  // lateral boundary: the cut layer, all time levels
  if (g.cut_layer.empty())
    throw InvalidArgument("boundary_traces: field has no boundary layer");
  for (std::size_t m = 0; m < f.u.size(); ++m)
    for (int id : g.cut_layer)
      tr.lateral_trace =
          std::max(tr.lateral_trace, d.grad_v[m][id] / (1.0 - d.v[m][id]));
  return tr;
}

const char* region_name(Region r) {
  switch (r) {
    case Region::NearInitial: return "near_initial";
    case Region::NearLateral: return "near_lateral";
    case Region::Corner: return "corner";
    case Region::Interior: return "interior";
  }
  return "?";
}

Region region_of(std::span<const double> x, double t, const DomainSpec& dom,
                 const MetricSpec& metric) {
  double d = geodesic_distance(metric, x, dom.x0);
  const double slack = 1e-12 * (1 + dom.R);
  if (d > dom.R + slack) throw InvalidArgument("region_of: point outside ball");
  if (t < dom.t_start() - 1e-12 || t > dom.t0 + 1e-12)
    throw InvalidArgument("region_of: time outside window");
  // half-open seams: the delta-boundary belongs to the later-time zones,
  // the annulus is read as closed at d = R - rho
  bool inner = d < dom.R - dom.rho;
  bool late = t >= dom.t_start() + dom.delta;
  if (inner && !late) return Region::NearInitial;
  if (!inner && late) return Region::NearLateral;
  if (!inner && !late) return Region::Corner;
  return Region::Interior;
}

double ZoneCoefficients::pick(Region r) const {
  switch (r) {
    case Region::NearInitial: return near_initial;
    case Region::NearLateral: return near_lateral;
    case Region::Corner: return corner;
    case Region::Interior: return interior;
  }
  return kNaN;
}

ZoneCoefficients ZoneCoefficients::make(const BoundaryTraces& tr,
                                        const EstimateConstants& c, double C) {
  if (!(C > 0)) throw InvalidArgument("zone coefficients: C must be positive");
  const double tau = tr.initial_trace, sig = tr.lateral_trace;
  const double Tt = C * c.time_cutoff_term(), Ss = C * c.space_cutoff_term();
  ZoneCoefficients z;
  z.near_initial = tau + std::min(sig, Ss);
  z.near_lateral = sig + std::min(tau, Tt);
  z.corner = sig + tau;
  z.interior = std::min({sig + tau, sig + Tt, tau + Ss, Tt + Ss});
  return z;
}

ZoneCoefficients ZoneCoefficients::make_squared(const BoundaryTraces& tr,
                                                const EstimateConstants& c,
                                                double C) {
  if (!(C > 0)) throw InvalidArgument("zone coefficients: C must be positive");
  const double tau2 = tr.initial_trace * tr.initial_trace;
  const double sig2 = tr.lateral_trace * tr.lateral_trace;
  const double Tt = C * c.time_cutoff_term_sq();
  const double Ss = C * c.space_cutoff_term_sq();
  ZoneCoefficients z;
  z.near_initial = tau2 + std::min(sig2, Ss);
  z.near_lateral = sig2 + std::min(tau2, Tt);
  z.corner = sig2 + tau2;
  z.interior = std::min({sig2 + tau2, sig2 + Tt, tau2 + Ss, Tt + Ss});
  return z;
}

double zone_value(std::span<const double> x, double t, const DomainSpec& dom,
                  const MetricSpec& metric, const ZoneCoefficients& z) {
  return z.pick(region_of(x, t, dom, metric));
}

double theorem_rhs(double u_value, double M, double zone, double C,
                   const EstimateConstants& c) {
  if (!(u_value > 0 && u_value <= M))
    throw InvalidArgument("theorem_rhs: u outside (0, M]");
  if (!(C > 0)) throw InvalidArgument("theorem_rhs: C must be positive");
  return (C * c.common_term() + zone) * (1.0 + std::log(M / u_value));
}

RegionalWBounds regional_w_bounds(const BoundaryTraces& tr,
                                  const EstimateConstants& c, double C) {
  if (!(C > 0)) throw InvalidArgument("regional_w_bounds: C must be positive");
  const double tau2 = tr.initial_trace * tr.initial_trace;
  const double sig2 = tr.lateral_trace * tr.lateral_trace;
  const double base = C * c.common_term_sq();
  const double Tt = C * c.time_cutoff_term_sq();
  const double Ss = C * c.space_cutoff_term_sq();
  RegionalWBounds b;
  b.near_initial = base + tau2 + Ss;
  b.near_lateral = base + sig2 + Tt;
  b.corner = base + sig2 + tau2;
  b.interior = base + std::min({sig2 + tau2, sig2 + Tt, tau2 + Ss, Tt + Ss});
  return b;
}

const char* corollary_name(CorollaryKind k) {
  switch (k) {
    case CorollaryKind::SZHeat: return "sz_heat";
    case CorollaryKind::MaZengZ1: return "ma_zeng_z1";
    case CorollaryKind::MaZengZ2: return "ma_zeng_z2";
    case CorollaryKind::MaZengZ3: return "ma_zeng_z3";
    case CorollaryKind::SemilinearP: return "semilinear_p";
    case CorollaryKind::USquared: return "u_squared";
    case CorollaryKind::InteriorGeneral: return "interior_general";
    case CorollaryKind::BoundaryAware: return "boundary_aware";
  }
  return "?";
}

bool corollary_squared(CorollaryKind k) {
  return k == CorollaryKind::MaZengZ1 || k == CorollaryKind::MaZengZ2 ||
         k == CorollaryKind::MaZengZ3;
}

double corollary_coefficient(CorollaryKind kind, const CorollaryParams& pr,
                             double C) {
  if (!(C > 0)) throw InvalidArgument("corollary: C must be positive");
  const double invR = 1.0 / pr.R, invsT = 1.0 / std::sqrt(pr.T);
  switch (kind) {
    case CorollaryKind::SZHeat:
      if (pr.k < 0) throw InvalidArgument("sz_heat: requires k >= 0");
      return C * (invR + invsT + std::sqrt(pr.k));
    case CorollaryKind::MaZengZ1: {
      if (pr.k < 0 || pr.lambda < 0 || pr.alpha < 0 || pr.alpha >= 1)
        throw InvalidArgument("ma_zeng_z1: needs k>=0, lambda>=0, alpha in [0,1)");
      double extra = pr.lambda * pr.alpha * std::pow(pr.m, pr.alpha - 1);
      return C * (pr.k + invR * invR + 1.0 / pr.T + extra);
    }
    case CorollaryKind::MaZengZ2: {
      if (pr.k < 0 || pr.lambda < 0 || pr.alpha < 1)
        throw InvalidArgument("ma_zeng_z2: needs k>=0, lambda>=0, alpha >= 1");
      double extra = pr.lambda * pr.alpha * std::pow(pr.M, pr.alpha - 1);
      return C * (pr.k + invR * invR + 1.0 / pr.T + extra);
    }
    case CorollaryKind::MaZengZ3: {
      if (pr.k < 0 || pr.lambda >= 0 || pr.alpha > 1)
        throw InvalidArgument("ma_zeng_z3: needs k>=0, lambda<0, alpha <= 1");
      double extra = pr.lambda * (pr.alpha - 1) * std::pow(pr.m, pr.alpha - 1);
      return C * (pr.k + invR * invR + 1.0 / pr.T + extra);
    }
    case CorollaryKind::SemilinearP: {
      double th = theta_for_p(pr.p, pr.M, pr.m);
      double term = (pr.p == 0) ? 0.0 : pr.p * std::pow(th, pr.p - 1);
      double lead = std::max(std::sqrt(pos(pr.k)), std::sqrt(pos(pr.k + term)));
      return C * (lead + invsT + invR);
    }
    case CorollaryKind::USquared:
      return C * (invR + invsT + std::sqrt(pos(2 * pr.M + pr.k)));
    case CorollaryKind::InteriorGeneral: {
      double common = std::cbrt(pr.gamma) + std::sqrt(pr.mu);
      return C * (common + invsT + invR +
                  std::pow(pos(pr.k), 0.25) / std::sqrt(pr.R));
    }
    case CorollaryKind::BoundaryAware: {
      if (!pr.traces.known())
        throw InvalidArgument("boundary_aware: needs known traces");
      double eps = std::max(pr.traces.initial_trace, pr.traces.lateral_trace);
      return C * (std::sqrt(pos(pr.k)) + eps);
    }
  }
  throw InvalidArgument("corollary: unknown kind");
}

}  // namespace gradlab

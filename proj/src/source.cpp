#include "gradlab/source.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>

#include "gradlab/field.hpp"

namespace gradlab {
namespace {

struct CustomEntry {
  std::function<double(std::span<const double>, double, double)> S;
  std::function<std::vector<double>(std::span<const double>, double, double)>
      grad_x_S;
  std::function<double(std::span<const double>, double, double)> dS_du;
};

std::map<std::string, CustomEntry>& registry() {
  static std::map<std::string, CustomEntry> reg;
  static std::once_flag once;
  std::call_once(once, [] {
    // Built-in: S(x,t,u) = u * sin(x1)
    reg["u_sin_x1"] = CustomEntry{
        [](std::span<const double> x, double, double u) {
          return u * std::sin(x[0]);
        },
        [](std::span<const double> x, double, double u) {
          std::vector<double> g(x.size(), 0.0);
          g[0] = u * std::cos(x[0]);
          return g;
        },
        [](std::span<const double> x, double, double) {
          return std::sin(x[0]);
        }};
  });
  return reg;
}

double pos(double v) { return v > 0 ? v : 0.0; }

void check_u(double u) {
  if (!(u > 0)) throw InvalidArgument("source: u must be positive");
}

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(std::string(what) + ": non-finite sample");
  return v;
}

// Sample points of the geodesic ball: a lattice over the bounding box,
// filtered by geodesic distance.
std::vector<std::vector<double>> ball_points(const DomainSpec& dom,
                                             const MetricSpec& metric, int n) {
  std::vector<std::vector<double>> pts;
  double cx = dom.x0[0];
  double cy = dom.x0.size() > 1 ? dom.x0[1] : 0.0;
  double half = dom.R;
  if (metric.is_poincare()) {
    auto img = poincare_ball_image(metric, dom.x0, dom.R);
    cx = img.cx;
    cy = img.cy;
    half = img.radius;
  }
  const int dim = metric.dimension();
  if (dim == 2) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        std::vector<double> p = {cx - half + 2 * half * i / (n - 1),
                                 cy - half + 2 * half * j / (n - 1)};
        if (!metric.contains(p)) continue;
        if (geodesic_distance(metric, p, dom.x0) <= dom.R) pts.push_back(p);
      }
  } else {
    // higher dimensions sampled along the first two axes through x0
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        std::vector<double> p = dom.x0;
        p[0] = dom.x0[0] - half + 2 * half * i / (n - 1);
        p[1] = dom.x0[1] - half + 2 * half * j / (n - 1);
        if (geodesic_distance(metric, p, dom.x0) <= dom.R) pts.push_back(p);
      }
  }
  return pts;
}

}  // namespace

SourceSpec SourceSpec::zero() { return SourceSpec{}; }

SourceSpec SourceSpec::power(double lambda, double alpha_exp) {
  SourceSpec s;
  s.kind = SourceKind::Power;
  s.lambda = lambda;
  s.alpha_exp = alpha_exp;
  return s;
}

SourceSpec SourceSpec::semilinear(double p) {
  SourceSpec s;
  s.kind = SourceKind::SemilinearP;
  s.p = p;
  return s;
}

SourceSpec SourceSpec::custom(std::string id) {
  auto it = registry().find(id);
  if (it == registry().end())
    throw InvalidArgument("source: unknown custom id '" + id + "'");
  SourceSpec s;
  s.kind = SourceKind::Custom;
  s.custom_id = id;
  s.S = it->second.S;
  s.grad_x_S = it->second.grad_x_S;
  s.dS_du = it->second.dS_du;
  return s;
}

SourceSpec SourceSpec::custom(
    std::string id,
    std::function<double(std::span<const double>, double, double)> S,
    std::function<std::vector<double>(std::span<const double>, double, double)>
        grad_x_S,
    std::function<double(std::span<const double>, double, double)> dS_du) {
  SourceSpec s;
  s.kind = SourceKind::Custom;
  s.custom_id = std::move(id);
  s.S = std::move(S);
  s.grad_x_S = std::move(grad_x_S);
  s.dS_du = std::move(dS_du);
  return s;
}

void register_custom_source(
    std::string id,
    std::function<double(std::span<const double>, double, double)> S,
    std::function<std::vector<double>(std::span<const double>, double, double)>
        grad_x_S,
    std::function<double(std::span<const double>, double, double)> dS_du) {
  registry()[std::move(id)] =
      CustomEntry{std::move(S), std::move(grad_x_S), std::move(dS_du)};
}

std::string SourceSpec::describe() const {
  char buf[128];
  switch (kind) {
    case SourceKind::Zero:
      return "zero";
    case SourceKind::Power:
      std::snprintf(buf, sizeof buf, "power(lambda=%.17g,alpha=%.17g)", lambda,
                    alpha_exp);
      return buf;
    case SourceKind::SemilinearP:
      std::snprintf(buf, sizeof buf, "semilinear(p=%.17g)", p);
      return buf;
    case SourceKind::Custom:
      return "custom(" + custom_id + ")";
  }
  return "?";
}

double eval_S(const SourceSpec& s, std::span<const double> x, double t,
              double u) {
  check_u(u);
  switch (s.kind) {
    case SourceKind::Zero:
      return 0.0;
    case SourceKind::Power:
      return s.lambda * std::pow(u, s.alpha_exp);
    case SourceKind::SemilinearP:
      return std::pow(u, s.p);
    case SourceKind::Custom:
      return finite_or_throw(s.S(x, t, u), "custom source");
  }
  return 0.0;
}

double eval_dS_du(const SourceSpec& s, std::span<const double> x, double t,
                  double u) {
  check_u(u);
  switch (s.kind) {
    case SourceKind::Zero:
      return 0.0;
    case SourceKind::Power:
      return s.lambda * s.alpha_exp * std::pow(u, s.alpha_exp - 1);
    case SourceKind::SemilinearP:
      return s.p * std::pow(u, s.p - 1);
    case SourceKind::Custom:
      return finite_or_throw(s.dS_du(x, t, u), "custom source du");
  }
  return 0.0;
}

double theta_for_p(double p, double M, double m) {
  if (p > 1) return M;
  if (p == 1) return 1.0;
  if (p > 0) return m;  // inf of u over the cylinder
  if (p == 0) return 0.0;
  return M;
}

double compute_gamma(const SourceSpec& s, const DomainSpec& dom,
                     const MetricSpec& metric, double M, GridResolution res,
                     AnalysisMethod* method) {
  if (!(M > 0)) throw InvalidArgument("compute_gamma: M must be positive");
  if (s.x_independent()) {
    if (method) *method = AnalysisMethod::ClosedForm;
    return 0.0;
  }
  if (method) *method = AnalysisMethod::GridSup;

  double sup = 0.0;
  bool blow_up = false;
  for (int refine = 0; refine < 2; ++refine) {
    // dyadic refinement: halve the spacing, keep the grid nested
    int nx = refine ? 2 * res.space - 1 : res.space;
    int nt = refine ? 2 * res.time - 1 : res.time;
    int nu = refine ? 2 * res.u_samples - 1 : res.u_samples;
    auto pts = ball_points(dom, metric, nx);
    double sup_u0 = 0.0, sup_u1 = 0.0;  // two smallest u slices
    double u0 = 0, u1 = 0;
    for (int ju = 0; ju < nu; ++ju) {
      // log-spaced in (M*1e-6, M]
      double u = M * std::pow(1e-6, 1.0 - double(ju) / (nu - 1));
      double slice = 0.0;
      for (int jt = 0; jt < nt; ++jt) {
        double t = dom.t_start() + dom.T * jt / (nt - 1);
        for (const auto& p : pts) {
          auto g = s.grad_x_S(p, t, u);
          double n2 = 0;
          for (double v : g) n2 += v * v;
          slice = std::max(slice, std::sqrt(finite_or_throw(n2, "grad_x S")) / u);
        }
      }
      sup = std::max(sup, slice);
      if (ju == 0) {
        sup_u0 = slice;
        u0 = u;
      } else if (ju == 1) {
        sup_u1 = slice;
        u1 = u;
      }
    }
    // |grad S|/u growing toward u -> 0 at least like u^{-1/2} on the two
    // smallest samples: treat the sup over (0, M] as infinite.
    if (sup_u0 >= sup && sup_u0 > 0 &&
        sup_u0 >= sup_u1 * std::sqrt(u1 / u0) * 0.999)
      blow_up = true;
  }
  if (blow_up) return std::numeric_limits<double>::infinity();
  return sup;
}

double compute_mu_gridsup(const SourceSpec& s, const DomainSpec& dom,
                          const MetricSpec& metric, double k, double M,
                          double m, GridResolution res) {
  if (!(m > 0 && m <= M)) throw InvalidArgument("compute_mu: need 0 < m <= M");
  const double v_lo = std::log(m / M);
  const int nu = res.u_samples;
  const int nv = res.u_samples;

  std::vector<std::vector<double>> pts;
  std::vector<double> times;
  if (s.kind == SourceKind::Custom) {
    pts = ball_points(dom, metric, res.space);
    for (int jt = 0; jt < res.time; ++jt)
      times.push_back(dom.t_start() + dom.T * jt / (res.time - 1));
  } else {
    pts = {dom.x0};
    times = {dom.t0};
  }

  double sup = 0.0;
  for (int ju = 0; ju < nu; ++ju) {
    double u = (nu == 1) ? M : m * std::pow(M / m, double(ju) / (nu - 1));
    for (int jv = 0; jv < nv; ++jv) {
      double v = v_lo * (1.0 - double(jv) / (nv - 1));
      for (double t : times)
        for (const auto& p : pts) {
          double Sv = eval_S(s, p, t, u);
          double du = eval_dS_du(s, p, t, u);
          double val = pos(k + du - Sv / u + Sv / (u * (1.0 - v)));
          sup = std::max(sup, finite_or_throw(val, "mu integrand"));
        }
    }
  }
  return sup;
}

double compute_mu(const SourceSpec& s, const DomainSpec& dom,
                  const MetricSpec& metric, double k, double M, double m,
                  GridResolution res, AnalysisMethod* method) {
  if (!(m > 0 && m <= M)) throw InvalidArgument("compute_mu: need 0 < m <= M");
  if (method) *method = AnalysisMethod::ClosedForm;
  switch (s.kind) {
    case SourceKind::Zero:
      return pos(k);
    case SourceKind::Power: {
      const double la = s.lambda, al = s.alpha_exp;
      if (la == 0) return pos(k);
      if (la > 0 && al >= 0 && al < 1)
        return pos(k + la * al * std::pow(m, al - 1));
      if (la > 0 && al >= 1) return pos(k + la * al * std::pow(M, al - 1));
      if (la < 0 && al <= 1) return pos(k + la * (al - 1) * std::pow(m, al - 1));
      break;  // remaining regions have no proven closed form
    }
    case SourceKind::SemilinearP: {
      double th = theta_for_p(s.p, M, m);
      double term = (s.p == 0) ? 0.0 : s.p * std::pow(th, s.p - 1);
      return pos(k + term);
    }
    case SourceKind::Custom:
      break;
  }
  if (method) *method = AnalysisMethod::GridSup;
  return compute_mu_gridsup(s, dom, metric, k, M, m, res);
}

double compute_mu_on_field(const SourceSpec& s, const SolutionField& f,
                           double k) {
  double sup = 0.0;
  auto visit = [&](int i, int j) {
    int id = f.grid.index(i, j);
    auto p = f.grid.point(i, j);
    for (std::size_t m = 0; m < f.u.size(); ++m) {
      double u = f.u[m][id];
      double v = std::log(u / f.M);
      double Sv = eval_S(s, p, f.times[m], u);
      double du = eval_dS_du(s, p, f.times[m], u);
      double val = pos(k + du - Sv / u + Sv / (u * (1.0 - v)));
      sup = std::max(sup, finite_or_throw(val, "mu integrand"));
    }
  };
  for (int j = 0; j < f.grid.ny; ++j) {
    auto rs = f.grid.rows[j];
    for (int i = rs.begin; i < rs.end; ++i) visit(i, j);
  }
  for (int id : f.grid.cut_layer) visit(id % f.grid.nx, id / f.grid.nx);
  return sup;
}

SourceAnalysis analyze_source(const SourceSpec& s, const DomainSpec& dom,
                              const MetricSpec& metric, double k, double M,
                              double m, GridResolution res) {
  SourceAnalysis out;
  out.gamma = compute_gamma(s, dom, metric, M, res, &out.gamma_method);
  out.mu = compute_mu(s, dom, metric, k, M, m, res, &out.mu_method);
  return out;
}

}  // namespace gradlab

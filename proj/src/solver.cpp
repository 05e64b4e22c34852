#include "gradlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "gradlab/kernels.hpp"

namespace gradlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool usable(const LatticeGrid& g, int i, int j) {
  return i >= 0 && j >= 0 && i < g.nx && j < g.ny &&
         g.cls[g.index(i, j)] != NodeClass::Exterior;
}

// ---- shared stencils -------------------------------------------------------

double radial_laplacian(const LatticeGrid& g, const std::vector<double>& v,
                        int i) {
  const double h = g.h, n = g.radial_dim;
  if (i == 0) return n * 2.0 * (v[1] - v[0]) / (h * h);
  double d2 = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / (h * h);
  double d1 = (v[i + 1] - v[i - 1]) / (2.0 * h);
  return d2 + (n - 1) / (i * h) * d1;
}

}  // namespace

double lattice_laplacian(const LatticeGrid& g, const std::vector<double>& v,
                         int i, int j) {
  if (g.mode == GridMode::Radial1D) return radial_laplacian(g, v, i);
  const double inv_h2 = 1.0 / (g.h * g.h);
  int id = g.index(i, j);
  double horiz = v[id - 1] + v[id + 1];
  double vert = v[id - g.nx] + v[id + g.nx];
  return ((horiz + vert) - 4.0 * v[id]) * inv_h2 * g.inv_phi[id];
}

std::vector<double> lattice_gradient(const LatticeGrid& g,
                                     const std::vector<double>& v, int i,
                                     int j) {
  auto axis = [&](int di, int dj) {
    bool lo = usable(g, i - di, j - dj), hi = usable(g, i + di, j + dj);
    int id = g.index(i, j);
    int step = di + dj * g.nx;
    if (lo && hi) return (v[id + step] - v[id - step]) / (2.0 * g.h);
    if (hi) return (v[id + step] - v[id]) / g.h;
    if (lo) return (v[id] - v[id - step]) / g.h;
    return 0.0;
  };
  if (g.mode == GridMode::Radial1D) return {axis(1, 0)};
  return {axis(1, 0), axis(0, 1)};
}

namespace {

// ---- lattice-wide helpers --------------------------------------------------

struct Scratch {
  std::vector<double> lap, src;
};

double interior_abs_max(const LatticeGrid& g, const std::vector<double>& v) {
  double m = 0;
  for (int j = 0; j < g.ny; ++j) {
    auto rs = g.rows[j];
    if (rs.empty()) continue;
    m = std::max(m, kernels::max_abs(&v[g.index(rs.begin, j)],
                                     static_cast<std::size_t>(rs.end - rs.begin)));
  }
  return m;
}

// Conjugate gradients on the interior nodes; vectors are full lattices with
// zeros outside the interior, so the kernel dot/axpby calls run unmasked.
template <class Apply>
void cg_solve(const LatticeGrid& g, const Apply& apply, const std::vector<double>& b,
              std::vector<double>& x, double tol, int max_iter) {
  const std::size_t n = g.size();
  std::vector<double> r(n, 0.0), p(n, 0.0), ap(n, 0.0);
  Scratch s;
  apply(x, ap, s);
  for (std::size_t q = 0; q < n; ++q) r[q] = b[q] - ap[q];
  p = r;
  double rr = kernels::dot(r.data(), r.data(), n);
  const double bnorm = std::sqrt(kernels::dot(b.data(), b.data(), n));
  const double stop = tol * (bnorm > 0 ? bnorm : 1.0);
  for (int it = 0; it < max_iter; ++it) {
    if (std::sqrt(rr) <= stop) return;
    apply(p, ap, s);
    double pap = kernels::dot(p.data(), ap.data(), n);
    if (!(pap > 0)) throw SolverError("cg: operator lost positivity");
    double alpha = rr / pap;
    kernels::axpby(alpha, p.data(), 1.0, x.data(), n);
    kernels::axpby(-alpha, ap.data(), 1.0, r.data(), n);
    double rr2 = kernels::dot(r.data(), r.data(), n);
    kernels::axpby(1.0, r.data(), rr2 / rr, p.data(), n);  // p = r + beta p
    rr = rr2;
  }
  if (std::sqrt(rr) > stop) throw SolverError("cg: no convergence");
}

// ---- solve_parabolic -------------------------------------------------------

struct Stepper {
  const DomainSpec& dom;
  const MetricSpec& metric;
  const SourceSpec& src;
  const SolveOptions& opt;
  LatticeGrid grid;
  std::vector<double> times;
  double dt;

  std::vector<double> sample_level(const SpaceTimeSampler& f, double t) const {
    std::vector<double> v(grid.size(), kNaN);
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        int id = grid.index(i, j);
        if (grid.cls[id] == NodeClass::Exterior) continue;
        v[id] = f(grid.point(i, j), t);
      }
    return v;
  }

  void fill_boundary(std::vector<double>& v, const SpaceTimeSampler& f,
                     double t) const {
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        int id = grid.index(i, j);
        if (grid.cls[id] == NodeClass::Boundary) v[id] = f(grid.point(i, j), t);
      }
  }

  void source_row(std::vector<double>& out, const std::vector<double>& u,
                  double t, int j, int b, int e) const {
    double p[2];
    for (int i = b; i < e; ++i) {
      grid.point_of(i, j, p);
      out[i - b] = eval_S(src, std::span<const double>(p, grid.mode == GridMode::Radial1D ? 1u : 2u),
                          t, u[grid.index(i, j)]);
    }
  }
};

void check_positivity(const LatticeGrid& g, const std::vector<double>& v,
                      double running_max, int level) {
  const double floor = 1e-12 * running_max;
  for (std::size_t id = 0; id < v.size(); ++id) {
    if (g.cls[id] == NodeClass::Exterior) continue;
    if (!(v[id] > floor)) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "positivity loss: u=%.6g (floor %.6g) at node %zu, level %d",
                    v[id], floor, id, level);
      throw SolverError(buf);
    }
  }
}

double level_max(const LatticeGrid& g, const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < v.size(); ++id)
    if (g.cls[id] != NodeClass::Exterior) m = std::max(m, v[id]);
  return m;
}

double level_min(const LatticeGrid& g, const std::vector<double>& v) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t id = 0; id < v.size(); ++id)
    if (g.cls[id] != NodeClass::Exterior) m = std::min(m, v[id]);
  return m;
}

void explicit_step(Stepper& st, const std::vector<double>& u_old,
                   std::vector<double>& u_new, double t_old) {
  const LatticeGrid& g = st.grid;
  if (g.mode == GridMode::Radial1D) {
    auto rs = g.rows[0];
    double p[1];
    for (int i = rs.begin; i < rs.end; ++i) {
      p[0] = i * g.h;
      double lap = radial_laplacian(g, u_old, i);
      double s = eval_S(st.src, std::span<const double>(p, 1), t_old,
                        u_old[i]);
      u_new[i] = u_old[i] + st.dt * (lap + s);
    }
    return;
  }
  const double inv_h2 = 1.0 / (g.h * g.h);
  Scratch scratch;
  scratch.lap.resize(g.nx);
  scratch.src.resize(g.nx);
  const bool zero_src = st.src.kind == SourceKind::Zero;
  for (int j = 0; j < g.ny; ++j) {
    auto rs = g.rows[j];
    if (rs.empty()) continue;
    const std::size_t n = rs.end - rs.begin;
    const int id = g.index(rs.begin, j);
    kernels::lap5_row(&u_old[id], &u_old[id + g.nx], &u_old[id - g.nx], inv_h2,
                      scratch.lap.data(), n);
    if (!zero_src) st.source_row(scratch.src, u_old, t_old, j, rs.begin, rs.end);
    kernels::heat_step_row(&u_old[id], scratch.lap.data(), &g.inv_phi[id],
                           zero_src ? nullptr : scratch.src.data(), st.dt,
                           &u_new[id], n);
  }
}

// Crank-Nicolson step in the symmetrized form
//   (phi - dt/2 Lap) u_new = phi u_old + dt/2 Lap u_old
//                            + dt/2 Lap u_bc + dt/2 phi (S_old + S_new),
// where Lap is the flat Laplacian, u_bc carries the new Dirichlet values and
// S_new is lagged (Newton on divergence).
void cn_step_full(Stepper& st, const std::vector<double>& u_old,
                  std::vector<double>& u_new, double t_old, double t_new,
                  const SpaceTimeSampler& boundary) {
  const LatticeGrid& g = st.grid;
  const std::size_t n = g.size();
  const double half_dt = 0.5 * st.dt;
  const double inv_h2 = 1.0 / (g.h * g.h);
  const bool zero_src = st.src.kind == SourceKind::Zero;

  std::vector<double> bc(n, 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int id = g.index(i, j);
      if (g.cls[id] == NodeClass::Boundary)
        bc[id] = boundary(g.point(i, j), t_new);
    }

  // interior-only copies with zeros elsewhere, for the vector kernels
  std::vector<double> u_int(n, 0.0);
  for (int j = 0; j < g.ny; ++j) {
    auto rs = g.rows[j];
    for (int i = rs.begin; i < rs.end; ++i)
      u_int[g.index(i, j)] = u_old[g.index(i, j)];
  }

  Scratch scratch;
  std::vector<double> lap_old(n, 0.0), lap_bc(n, 0.0);
  // flat Laplacian of the full old level (interior output only)
  {
    scratch.lap.resize(g.nx);
    for (int j = 0; j < g.ny; ++j) {
      auto rs = g.rows[j];
      if (rs.empty()) continue;
      const std::size_t cnt = rs.end - rs.begin;
      const int id = g.index(rs.begin, j);
      kernels::lap5_row(&u_old[id], &u_old[id + g.nx], &u_old[id - g.nx],
                        inv_h2, scratch.lap.data(), cnt);
      for (std::size_t q = 0; q < cnt; ++q) lap_old[id + q] = scratch.lap[q];
      kernels::lap5_row(&bc[id], &bc[id + g.nx], &bc[id - g.nx], inv_h2,
                        scratch.lap.data(), cnt);
      for (std::size_t q = 0; q < cnt; ++q) lap_bc[id + q] = scratch.lap[q];
    }
  }

  auto source_on = [&](const std::vector<double>& u, double t,
                       std::vector<double>& out) {
    double p[2];
    for (int j = 0; j < g.ny; ++j) {
      auto rs = g.rows[j];
      for (int i = rs.begin; i < rs.end; ++i) {
        g.point_of(i, j, p);
        int id = g.index(i, j);
        out[id] = eval_S(st.src, std::span<const double>(p, 2), t, u[id]);
      }
    }
  };

  std::vector<double> b_base(n, 0.0);
  {
    std::vector<double> s_old(n, 0.0);
    if (!zero_src) source_on(u_old, t_old, s_old);
    for (int j = 0; j < g.ny; ++j) {
      auto rs = g.rows[j];
      for (int i = rs.begin; i < rs.end; ++i) {
        int id = g.index(i, j);
        b_base[id] = g.phi[id] * u_old[id] +
                     half_dt * (lap_old[id] + lap_bc[id]) +
                     half_dt * g.phi[id] * s_old[id];
      }
    }
  }

  auto apply_A = [&](const std::vector<double>& x, std::vector<double>& out,
                     Scratch& s) {
    s.lap.resize(g.nx);
    for (int j = 0; j < g.ny; ++j) {
      auto rs = g.rows[j];
      if (rs.empty()) continue;
      const std::size_t cnt = rs.end - rs.begin;
      const int id = g.index(rs.begin, j);
      kernels::lap5_row(&x[id], &x[id + g.nx], &x[id - g.nx], inv_h2,
                        s.lap.data(), cnt);
      kernels::weighted_diff_row(&g.phi[id], &x[id], half_dt, s.lap.data(),
                                 &out[id], cnt);
    }
  };

  const double cg_tol = 1e-13;
  const int cg_iters = 200 + static_cast<int>(10 * std::sqrt(double(n)));
  std::vector<double> x = u_int, b(n, 0.0), s_new(n, 0.0);

  if (zero_src) {
    cg_solve(g, apply_A, b_base, x, cg_tol, cg_iters);
  } else {
    // fixed-point lag on the source
    bool converged = false;
    std::vector<double> x_prev = x;
    for (int it = 0; it < 25 && !converged; ++it) {
      source_on(x, t_new, s_new);
      for (std::size_t id = 0; id < n; ++id)
        b[id] = b_base[id] + half_dt * g.phi[id] * s_new[id];
      x_prev = x;
      cg_solve(g, apply_A, b, x, cg_tol, cg_iters);
      double diff = 0, scale = 1 + interior_abs_max(g, x);
      for (std::size_t id = 0; id < n; ++id)
        diff = std::max(diff, std::fabs(x[id] - x_prev[id]));
      converged = diff <= 1e-12 * scale;
    }
    if (!converged) {
      // Newton fallback: J = A - dt/2 phi diag(dS/du)
      std::vector<double> su(n, 0.0), F(n, 0.0), delta(n, 0.0);
      double p2[2];
      bool newton_ok = false;
      for (int it = 0; it < 25 && !newton_ok; ++it) {
        source_on(x, t_new, s_new);
        for (int j = 0; j < g.ny; ++j) {
          auto rs = g.rows[j];
          for (int i = rs.begin; i < rs.end; ++i) {
            g.point_of(i, j, p2);
            int id = g.index(i, j);
            su[id] = eval_dS_du(st.src, std::span<const double>(p2, 2), t_new,
                                x[id]);
          }
        }
        Scratch s;
        std::vector<double> ax(n, 0.0);
        apply_A(x, ax, s);
        double fmax = 0;
        for (std::size_t id = 0; id < n; ++id) {
          F[id] = ax[id] - half_dt * g.phi[id] * s_new[id] - b_base[id];
          fmax = std::max(fmax, std::fabs(F[id]));
        }
        if (fmax <= 1e-12 * (1 + interior_abs_max(g, x))) {
          newton_ok = true;
          break;
        }
        auto apply_J = [&](const std::vector<double>& y,
                           std::vector<double>& out, Scratch& sj) {
          apply_A(y, out, sj);
          for (int j = 0; j < g.ny; ++j) {
            auto rs = g.rows[j];
            for (int i = rs.begin; i < rs.end; ++i) {
              int id = g.index(i, j);
              out[id] -= half_dt * g.phi[id] * su[id] * y[id];
            }
          }
        };
        std::fill(delta.begin(), delta.end(), 0.0);
        std::vector<double> negF(n, 0.0);
        for (std::size_t id = 0; id < n; ++id) negF[id] = -F[id];
        cg_solve(g, apply_J, negF, delta, cg_tol, cg_iters);
        kernels::axpby(1.0, delta.data(), 1.0, x.data(), n);
        if (interior_abs_max(g, delta) <= 1e-12 * (1 + interior_abs_max(g, x)))
          newton_ok = true;
      }
      if (!newton_ok)
        throw SolverError("crank-nicolson: nonlinear solve diverged");
    }
  }

  u_new.assign(n, kNaN);
  for (std::size_t id = 0; id < n; ++id) {
    if (g.cls[id] == NodeClass::Interior) u_new[id] = x[id];
    else if (g.cls[id] == NodeClass::Boundary) u_new[id] = bc[id];
  }
}

// Radial Crank-Nicolson via the Thomas algorithm; unknowns are the interior
// nodes [0, e) of the single row.
void cn_step_radial(Stepper& st, const std::vector<double>& u_old,
                    std::vector<double>& u_new, double t_old, double t_new,
                    const SpaceTimeSampler& boundary) {
  const LatticeGrid& g = st.grid;
  auto rs = g.rows[0];
  const int e = rs.end;  // begin == 0
  const double h = g.h, dt = st.dt, nd = g.radial_dim;
  const double half = 0.5 * dt;
  const bool zero_src = st.src.kind == SourceKind::Zero;

  std::vector<double> bc(g.size(), 0.0);
  for (std::size_t id = 0; id < g.size(); ++id)
    if (g.cls[id] == NodeClass::Boundary) bc[id] = boundary(g.point(id, 0), t_new);

  // Lap coefficients: row i couples (i-1, i, i+1) with (lo_i, mid_i, hi_i)
  auto coefs = [&](int i, double& lo, double& mid, double& hi) {
    if (i == 0) {
      lo = 0;
      mid = -2.0 * nd / (h * h);
      hi = 2.0 * nd / (h * h);
    } else {
      double a = 1.0 / (h * h), c = (nd - 1) / (i * h) / (2.0 * h);
      lo = a - c;
      mid = -2.0 * a;
      hi = a + c;
    }
  };

  auto lap_of = [&](const std::vector<double>& v, int i) {
    double lo, mid, hi;
    coefs(i, lo, mid, hi);
    double left = (i == 0) ? 0.0 : v[i - 1];
    return lo * left + mid * v[i] + hi * v[i + 1];
  };

  double p[1];
  auto S_at = [&](int i, double t, double uv) {
    p[0] = i * h;
    return eval_S(st.src, std::span<const double>(p, 1), t, uv);
  };
  auto Su_at = [&](int i, double t, double uv) {
    p[0] = i * h;
    return eval_dS_du(st.src, std::span<const double>(p, 1), t, uv);
  };

  std::vector<double> x(u_old.begin(), u_old.begin() + e);
  std::vector<double> base(e);
  for (int i = 0; i < e; ++i) {
    double s_old = zero_src ? 0.0 : S_at(i, t_old, u_old[i]);
    base[i] = u_old[i] + half * lap_of(u_old, i) + half * s_old;
    // contribution of the new boundary value through the hi coefficient
    if (i == e - 1) {
      double lo, mid, hi;
      coefs(i, lo, mid, hi);
      base[i] += half * hi * bc[e];
    }
  }

  // Thomas solve of (I - half L - half diag(jac)) x = rhs
  auto tridiag_solve = [&](const std::vector<double>& jac,
                           const std::vector<double>& rhs,
                           std::vector<double>& out) {
    std::vector<double> a(e), b(e), c(e), r = rhs;
    for (int i = 0; i < e; ++i) {
      double lo, mid, hi;
      coefs(i, lo, mid, hi);
      a[i] = -half * lo;
      b[i] = 1.0 - half * mid - half * jac[i];
      c[i] = (i == e - 1) ? 0.0 : -half * hi;
    }
    for (int i = 1; i < e; ++i) {
      double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      r[i] -= w * r[i - 1];
    }
    out.resize(e);
    out[e - 1] = r[e - 1] / b[e - 1];
    for (int i = e - 2; i >= 0; --i) out[i] = (r[i] - c[i] * out[i + 1]) / b[i];
  };

  std::vector<double> zero_jac(e, 0.0), rhs(e), x_prev;
  bool converged = zero_src;
  for (int it = 0; it < 25 && !converged; ++it) {
    for (int i = 0; i < e; ++i) rhs[i] = base[i] + half * S_at(i, t_new, x[i]);
    x_prev = x;
    tridiag_solve(zero_jac, rhs, x);
    double diff = 0, scale = 1;
    for (int i = 0; i < e; ++i) {
      diff = std::max(diff, std::fabs(x[i] - x_prev[i]));
      scale = std::max(scale, std::fabs(x[i]));
    }
    converged = diff <= 1e-12 * scale;
  }
  if (zero_src) tridiag_solve(zero_jac, base, x);
  if (!converged && !zero_src) {
    // Newton on the lagged iterate
    bool newton_ok = false;
    std::vector<double> jac(e);
    for (int it = 0; it < 25 && !newton_ok; ++it) {
      for (int i = 0; i < e; ++i) {
        jac[i] = Su_at(i, t_new, x[i]);
        rhs[i] = base[i] + half * (S_at(i, t_new, x[i]) - jac[i] * x[i]);
      }
      x_prev = x;
      tridiag_solve(jac, rhs, x);
      double diff = 0, scale = 1;
      for (int i = 0; i < e; ++i) {
        diff = std::max(diff, std::fabs(x[i] - x_prev[i]));
        scale = std::max(scale, std::fabs(x[i]));
      }
      newton_ok = diff <= 1e-12 * scale;
    }
    if (!newton_ok)
      throw SolverError("crank-nicolson (radial): nonlinear solve diverged");
  }

  u_new.assign(g.size(), kNaN);
  for (int i = 0; i < e; ++i) u_new[i] = x[i];
  for (std::size_t id = 0; id < g.size(); ++id)
    if (g.cls[id] == NodeClass::Boundary) u_new[id] = bc[id];
}

std::string field_id(const char* kind, const DomainSpec& dom, double h,
                     double dt) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%s[R=%.17g,t0=%.17g,T=%.17g,h=%.17g,dt=%.17g]",
                kind, dom.R, dom.t0, dom.T, h, dt);
  return buf;
}

}  // namespace

SolutionField solve_parabolic(const DomainSpec& dom, const MetricSpec& metric,
                              const SourceSpec& src,
                              const SpaceTimeSampler& initial,
                              const SpaceTimeSampler& boundary,
                              const SolveOptions& opt) {
  dom.validate();
  if (!(opt.dt > 0)) throw InvalidArgument("solve: dt must be positive");

  SolutionField f;
  f.domain = dom;
  f.metric = metric;
  f.grid = build_lattice(dom, metric, opt.h, opt.mode);
  f.provenance = Provenance::FDSolve;
  f.scheme = opt.scheme == Scheme::Explicit ? "explicit" : "crank_nicolson";

  // snap dt so the window is an integer number of steps
  int steps = std::max(1, static_cast<int>(std::lround(dom.T / opt.dt)));
  f.dt = dom.T / steps;

  Stepper st{dom, metric, src, opt, f.grid, {}, f.dt};

  const int n_amb =
      opt.mode == GridMode::Radial1D ? f.grid.radial_dim : metric.dimension();
  if (opt.scheme == Scheme::Explicit) {
    double diff_max = 1.0;
    if (metric.kind() == MetricKind::Conformal2D) {
      diff_max = 0.0;
      for (std::size_t id = 0; id < f.grid.size(); ++id)
        if (f.grid.cls[id] != NodeClass::Exterior)
          diff_max = std::max(diff_max, f.grid.inv_phi[id]);
    }
    if (f.dt * diff_max > opt.h * opt.h / (2.0 * n_amb) * (1 + 1e-12)) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "explicit scheme violates dt <= h^2/(2n): dt=%.3g, bound=%.3g",
                    f.dt * diff_max, opt.h * opt.h / (2.0 * n_amb));
      throw SolverError(buf);
    }
  }

  f.times.resize(steps + 1);
  for (int m = 0; m <= steps; ++m) f.times[m] = dom.t_start() + m * f.dt;
  f.u.resize(steps + 1);

  f.u[0] = st.sample_level(initial, dom.t_start());
  for (std::size_t id = 0; id < f.grid.size(); ++id) {
    if (f.grid.cls[id] == NodeClass::Exterior) continue;
    if (!(f.u[0][id] > 0))
      throw InvalidArgument("solve: initial data must be positive");
  }
  // corner compatibility between initial and boundary samplers
  for (int id : f.grid.cut_layer) {
    int i = id % f.grid.nx, j = id / f.grid.nx;
    double bv = boundary(f.grid.point(i, j), dom.t_start());
    if (std::fabs(bv - f.u[0][id]) > 1e-6 * (1 + std::fabs(bv)))
      throw InvalidArgument("solve: initial/boundary data incompatible at the corner");
  }

  double running_max = level_max(f.grid, f.u[0]);
  double running_min = level_min(f.grid, f.u[0]);

  for (int m = 0; m < steps; ++m) {
    std::vector<double>& unew = f.u[m + 1];
    unew.assign(f.grid.size(), kNaN);
    if (opt.scheme == Scheme::Explicit) {
      explicit_step(st, f.u[m], unew, f.times[m]);
      st.fill_boundary(unew, boundary, f.times[m + 1]);
    } else if (opt.mode == GridMode::Radial1D) {
      cn_step_radial(st, f.u[m], unew, f.times[m], f.times[m + 1], boundary);
    } else {
      cn_step_full(st, f.u[m], unew, f.times[m], f.times[m + 1], boundary);
    }
    running_max = std::max(running_max, level_max(f.grid, unew));
    running_min = std::min(running_min, level_min(f.grid, unew));
    check_positivity(f.grid, unew, running_max, m + 1);
  }

  f.min_u = running_min;
  if (opt.M_override) {
    if (*opt.M_override < running_max)
      throw InvalidArgument("solve: M override below observed maximum");
    f.M = *opt.M_override;
  } else {
    f.M = running_max;
  }
  f.id = field_id(("fdsolve:" + f.scheme + ":" + src.describe()).c_str(), dom,
                  opt.h, f.dt);
  return f;
}

void attach_analytic_forms(SolutionField& f) {
  if (f.analytic_kind == "gauss_kernel") {
    const int n = static_cast<int>(f.analytic_param);
    auto val = [n](std::span<const double> x, double t) {
      double r2 = 0;
      for (double c : x) r2 += c * c;
      return std::pow(4.0 * M_PI * t, -0.5 * n) * std::exp(-r2 / (4.0 * t));
    };
    f.exact_value = val;
    f.exact_gradient = [val](std::span<const double> x, double t) {
      double u = val(x, t);
      std::vector<double> g(x.size());
      for (std::size_t q = 0; q < x.size(); ++q) g[q] = -x[q] / (2.0 * t) * u;
      return g;
    };
  } else if (f.analytic_kind == "exp_example") {
    const double eps = f.analytic_param;
    f.exact_value = [eps](std::span<const double> x, double t) {
      return 10.0 + eps * std::exp(x[0] + t);
    };
    f.exact_gradient = [eps](std::span<const double> x, double t) {
      return std::vector<double>{eps * std::exp(x[0] + t), 0.0};
    };
  } else if (f.analytic_kind == "poincare_harmonic") {
    f.exact_value = [](std::span<const double> x, double) { return x[0] + 2.0; };
    f.exact_gradient = [](std::span<const double>, double) {
      return std::vector<double>{1.0, 0.0};
    };
  } else {
    throw InvalidArgument("unknown analytic kind '" + f.analytic_kind + "'");
  }
}

SolutionField analytic_solution(const AnalyticSpec& spec, const DomainSpec& dom,
                                double h, double dt,
                                std::optional<double> M_override) {
  dom.validate();
  if (!(dt > 0)) throw InvalidArgument("analytic_solution: dt must be positive");

  SolutionField f;
  f.domain = dom;
  f.provenance = Provenance::Analytic;

  switch (spec.kind) {
    case AnalyticSpec::Kind::GaussKernel: {
      const int n = spec.n;
      if (n < 2) throw InvalidArgument("gauss kernel: n >= 2");
      if (!(dom.t_start() > 0))
        throw InvalidArgument("gauss kernel: needs t > 0 over the window");
      f.metric = MetricSpec::euclidean(n);
      f.grid = build_lattice(dom, f.metric, h,
                             n == 2 ? GridMode::Full2D : GridMode::Radial1D);
      f.analytic_kind = "gauss_kernel";
      f.analytic_param = n;
      break;
    }
    case AnalyticSpec::Kind::ExpExample: {
      if (!(spec.epsilon > 0 && spec.epsilon < 1))
        throw InvalidArgument("exp example: epsilon in (0,1)");
      f.metric = MetricSpec::euclidean(2);
      f.grid = build_lattice(dom, f.metric, h, GridMode::Full2D);
      f.analytic_kind = "exp_example";
      f.analytic_param = spec.epsilon;
      break;
    }
    case AnalyticSpec::Kind::PoincareHarmonic: {
      f.metric = MetricSpec::poincare_disk(spec.lambda);
      f.grid = build_lattice(dom, f.metric, h, GridMode::Full2D);
      f.analytic_kind = "poincare_harmonic";
      f.analytic_param = spec.lambda;
      break;
    }
  }
  attach_analytic_forms(f);

  int steps = std::max(2, static_cast<int>(std::lround(dom.T / dt)));
  f.dt = dom.T / steps;
  f.times.resize(steps + 1);
  f.u.resize(steps + 1);
  double grid_max = -std::numeric_limits<double>::infinity();
  double grid_min = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= steps; ++m) {
    f.times[m] = dom.t_start() + m * f.dt;
    f.u[m].assign(f.grid.size(), kNaN);
    for (int j = 0; j < f.grid.ny; ++j)
      for (int i = 0; i < f.grid.nx; ++i) {
        int id = f.grid.index(i, j);
        if (f.grid.cls[id] == NodeClass::Exterior) continue;
        double v = f.exact_value(f.grid.point(i, j), f.times[m]);
        f.u[m][id] = v;
        grid_max = std::max(grid_max, v);
        grid_min = std::min(grid_min, v);
      }
  }
  f.min_u = grid_min;

  // Exact supremum of the closed form over the closed cylinder. The stored
  // lattice also carries the cut-cell layer slightly outside the ball, and
  // the bound 0 < u <= M must hold there too, so M is the larger of the two.
  double M_exact = grid_max;
  switch (spec.kind) {
    case AnalyticSpec::Kind::GaussKernel: {
      double c2 = 0;
      for (double c : dom.x0) c2 += c * c;
      double d0 = std::max(0.0, std::sqrt(c2) - dom.R);
      auto at = [&](double t) {
        return std::pow(4.0 * M_PI * t, -0.5 * spec.n) *
               std::exp(-d0 * d0 / (4.0 * t));
      };
      double best = std::max(at(dom.t_start()), at(dom.t0));
      double t_star = d0 * d0 / (2.0 * spec.n);
      if (t_star > dom.t_start() && t_star < dom.t0)
        best = std::max(best, at(t_star));
      for (int q = 0; q <= 20000; ++q)
        best = std::max(best, at(dom.t_start() + dom.T * q / 20000.0));
      M_exact = std::max(best, grid_max);
      break;
    }
    case AnalyticSpec::Kind::ExpExample:
      M_exact = 10.0 + spec.epsilon * std::exp(dom.x0[0] + dom.R + dom.t0);
      break;
    case AnalyticSpec::Kind::PoincareHarmonic: {
      auto img = poincare_ball_image(f.metric, f.domain.x0, dom.R);
      M_exact = 2.0 + img.cx + img.radius;
      break;
    }
  }
  if (M_override) {
    if (*M_override < grid_max)
      throw InvalidArgument("analytic_solution: M override below field max");
    f.M = *M_override;
  } else {
    f.M = std::max(M_exact, grid_max);
  }

  char kind_buf[96];
  std::snprintf(kind_buf, sizeof kind_buf, "analytic:%s(%.17g)",
                f.analytic_kind.c_str(), f.analytic_param);
  f.id = field_id(kind_buf, dom, h, f.dt);
  return f;
}

double pde_residual(const SolutionField& f, const SourceSpec& src) {
  if (f.u.size() < 3)
    throw InvalidArgument("pde_residual: need at least 3 time levels");
  const LatticeGrid& g = f.grid;
  double worst = 0;
  double p[2];
  const std::size_t pdim = g.mode == GridMode::Radial1D ? 1 : 2;
  for (std::size_t m = 1; m + 1 < f.u.size(); ++m) {
    for (int j = 0; j < g.ny; ++j) {
      auto rs = g.rows[j];
      for (int i = rs.begin; i < rs.end; ++i) {
        int id = g.index(i, j);
        g.point_of(i, j, p);
        double ut = (f.u[m + 1][id] - f.u[m - 1][id]) / (2.0 * f.dt);
        double lap = lattice_laplacian(g, f.u[m], i, j);
        double s = eval_S(src, std::span<const double>(p, pdim), f.times[m],
                          f.u[m][id]);
        worst = std::max(worst, std::fabs(ut - lap - s));
      }
    }
  }
  return worst;
}

}  // namespace gradlab

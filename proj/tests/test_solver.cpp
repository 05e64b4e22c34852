#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <cstring>

#include "doctest.h"
#include "gradlab/field_io.hpp"
#include "gradlab/solver.hpp"

using namespace gradlab;

namespace {

DomainSpec disk_domain(double R = 0.5, double t0 = 2.0, double T = 1.0) {
  return {.x0 = {1.0, 0.0}, .R = R, .t0 = t0, .T = T, .rho = R / 2,
          .delta = T / 2};
}

SpaceTimeSampler gauss2() {
  return [](std::span<const double> x, double t) {
    double r2 = x[0] * x[0] + x[1] * x[1];
    return std::exp(-r2 / (4 * t)) / (4 * M_PI * t);
  };
}

}  // namespace

TEST_CASE("constants are caloric, exactly") {
  auto dom = disk_domain();
  auto flat = MetricSpec::euclidean(2);
  auto c_sampler = [](std::span<const double>, double) { return 3.25; };
  for (auto scheme : {Scheme::Explicit, Scheme::CrankNicolson}) {
    SolveOptions opt{.scheme = scheme, .h = 0.125,
                     .dt = scheme == Scheme::Explicit ? 0.125 * 0.125 / 4
                                                      : 0.125};
    auto f = solve_parabolic(dom, flat, SourceSpec::zero(), c_sampler,
                             c_sampler, opt);
    for (const auto& level : f.u)
      for (std::size_t id = 0; id < level.size(); ++id)
        if (f.grid.cls[id] != NodeClass::Exterior) CHECK(level[id] == 3.25);
    CHECK(f.M == 3.25);
  }
}

TEST_CASE("crank-nicolson reproduces the gauss kernel at order ~2") {
  auto dom = disk_domain();
  auto flat = MetricSpec::euclidean(2);
  auto kernel = gauss2();
  double errs[3];
  double h = 0.25;
  for (int lvl = 0; lvl < 3; ++lvl, h /= 2) {
    SolveOptions opt{.scheme = Scheme::CrankNicolson, .h = h, .dt = h};
    auto f = solve_parabolic(dom, flat, SourceSpec::zero(), kernel, kernel,
                             opt);
    double worst = 0;
    for (std::size_t m = 0; m < f.u.size(); ++m)
      for (int j = 0; j < f.grid.ny; ++j) {
        auto rs = f.grid.rows[j];
        for (int i = rs.begin; i < rs.end; ++i) {
          auto p = f.grid.point(i, j);
          worst = std::max(worst, std::fabs(f.u[m][f.grid.index(i, j)] -
                                            kernel(p, f.times[m])));
        }
      }
    errs[lvl] = worst;
  }
  double o1 = std::log2(errs[0] / errs[1]);
  double o2 = std::log2(errs[1] / errs[2]);
  CHECK(o1 > 1.7);
  CHECK(o1 < 2.3);
  CHECK(o2 > 1.7);
  CHECK(o2 < 2.3);
}

TEST_CASE("linear source reproduces exponential growth (ODE oracle)") {
  auto dom = disk_domain(0.5, 1.0, 0.5);
  auto flat = MetricSpec::euclidean(2);
  const double c = 2.0;
  auto grow = [&](std::span<const double>, double t) {
    return c * std::exp(t - dom.t_start());
  };
  double errs[2];
  int k = 0;
  for (double dt : {0.05, 0.025}) {
    SolveOptions opt{.scheme = Scheme::CrankNicolson, .h = 0.125, .dt = dt};
    auto f = solve_parabolic(dom, flat, SourceSpec::power(1.0, 1.0), grow,
                             grow, opt);
    double worst = 0;
    for (std::size_t m = 0; m < f.u.size(); ++m)
      for (int j = 0; j < f.grid.ny; ++j) {
        auto rs = f.grid.rows[j];
        for (int i = rs.begin; i < rs.end; ++i)
          worst = std::max(worst, std::fabs(f.u[m][f.grid.index(i, j)] -
                                            c * std::exp(f.times[m] -
                                                         dom.t_start())));
      }
    errs[k++] = worst;
  }
  CHECK(errs[0] < 1e-3);
  // second-order in dt
  CHECK(errs[0] / errs[1] > 3.0);
}

TEST_CASE("discrete maximum principle holds exactly under CFL") {
  DomainSpec dom{.x0 = {0.0, 0.0}, .R = 1.0, .t0 = 1.0, .T = 1.0, .rho = 0.5,
                 .delta = 0.5};
  auto flat = MetricSpec::euclidean(2);
  auto init = [](std::span<const double> x, double) {
    return 2.0 + std::sin(3 * x[0]) * std::cos(2 * x[1]);
  };
  auto bnd = [&](std::span<const double> x, double t) {
    return (2.0 + std::sin(3 * x[0]) * std::cos(2 * x[1])) *
           (1.0 + 0.25 * (t - 0.0) * (t - 0.0));
  };
  const double h = 1.0 / 16;
  SolveOptions opt{.scheme = Scheme::Explicit, .h = h, .dt = h * h / 4};
  auto f = solve_parabolic(dom, flat, SourceSpec::zero(), init, bnd, opt);

  double pb_min = std::numeric_limits<double>::infinity(), pb_max = -pb_min;
  for (std::size_t id = 0; id < f.grid.size(); ++id) {
    if (f.grid.cls[id] == NodeClass::Exterior) continue;
    pb_min = std::min(pb_min, f.u[0][id]);
    pb_max = std::max(pb_max, f.u[0][id]);
  }
  for (std::size_t m = 1; m < f.u.size(); ++m)
    for (std::size_t id = 0; id < f.grid.size(); ++id)
      if (f.grid.cls[id] == NodeClass::Boundary) {
        pb_min = std::min(pb_min, f.u[m][id]);
        pb_max = std::max(pb_max, f.u[m][id]);
      }
  double in_min = std::numeric_limits<double>::infinity(), in_max = -in_min;
  for (std::size_t m = 1; m < f.u.size(); ++m)
    for (int j = 0; j < f.grid.ny; ++j) {
      auto rs = f.grid.rows[j];
      for (int i = rs.begin; i < rs.end; ++i) {
        in_min = std::min(in_min, f.u[m][f.grid.index(i, j)]);
        in_max = std::max(in_max, f.u[m][f.grid.index(i, j)]);
      }
    }
  CHECK(in_min >= pb_min);
  CHECK(in_max <= pb_max);
  // positivity corollary
  CHECK(in_min >= pb_min - 1e-12);
}

TEST_CASE("CFL violation and positivity loss abort") {
  auto dom = disk_domain();
  auto flat = MetricSpec::euclidean(2);
  auto one = [](std::span<const double>, double) { return 1.0; };
  SolveOptions bad{.scheme = Scheme::Explicit, .h = 0.125, .dt = 0.01};
  CHECK_THROWS_AS(
      (void)solve_parabolic(dom, flat, SourceSpec::zero(), one, one, bad),
      SolverError);

  auto vanish = [&](std::span<const double>, double t) {
    return t > dom.t_start() + 1e-9 ? 1e-20 : 1.0;
  };
  SolveOptions opt{.scheme = Scheme::Explicit, .h = 0.125,
                   .dt = 0.125 * 0.125 / 4};
  CHECK_THROWS_AS(
      (void)solve_parabolic(dom, flat, SourceSpec::zero(), one, vanish, opt),
      SolverError);
}

TEST_CASE("analytic gauss kernel field") {
  auto dom = disk_domain();
  auto f = analytic_solution({.kind = AnalyticSpec::Kind::GaussKernel, .n = 2},
                             dom, 0.0625, 0.0625);
  // value check at x=(1,0), t=1
  double p[] = {1.0, 0.0};
  CHECK(f.exact_value(p, 1.0) ==
        doctest::Approx(std::exp(-0.25) / (4 * M_PI)).epsilon(1e-14));
  // M is the sup over the closed cylinder: attained at |x| = 0.5, t by scan;
  // every sample is below it
  for (std::size_t m = 0; m < f.u.size(); ++m)
    for (std::size_t id = 0; id < f.grid.size(); ++id)
      if (f.grid.cls[id] != NodeClass::Exterior) CHECK(f.u[m][id] <= f.M);
  f.validate_bounds();
  CHECK(pde_residual(f, SourceSpec::zero()) < 0.02);
}

TEST_CASE("pde_residual vanishes for constants and refines at order 2") {
  auto dom = disk_domain();
  auto flat = MetricSpec::euclidean(2);
  auto c_sampler = [](std::span<const double>, double) { return 1.5; };
  SolveOptions opt{.scheme = Scheme::CrankNicolson, .h = 0.125, .dt = 0.125};
  auto fc = solve_parabolic(dom, flat, SourceSpec::zero(), c_sampler,
                            c_sampler, opt);
  CHECK(pde_residual(fc, SourceSpec::zero()) == 0.0);

  double errs[3];
  double h = 0.0625;
  for (int lvl = 0; lvl < 3; ++lvl, h /= 2) {
    auto f = analytic_solution({.kind = AnalyticSpec::Kind::GaussKernel, .n = 2},
                               dom, h, h);
    errs[lvl] = pde_residual(f, SourceSpec::zero());
  }
  CHECK(std::log2(errs[0] / errs[1]) > 1.7);
  CHECK(std::log2(errs[1] / errs[2]) > 1.7);

  // exp example is caloric too
  auto fe = analytic_solution(
      {.kind = AnalyticSpec::Kind::ExpExample, .epsilon = 0.01},
      DomainSpec{.x0 = {0.0, 0.0}, .R = 1.0, .t0 = 1.0, .T = 1.0, .rho = 0.5,
                 .delta = 0.5},
      0.1, 0.1);
  double r1 = pde_residual(fe, SourceSpec::zero());
  auto fe2 = analytic_solution(
      {.kind = AnalyticSpec::Kind::ExpExample, .epsilon = 0.01},
      DomainSpec{.x0 = {0.0, 0.0}, .R = 1.0, .t0 = 1.0, .T = 1.0, .rho = 0.5,
                 .delta = 0.5},
      0.05, 0.05);
  double r2 = pde_residual(fe2, SourceSpec::zero());
  CHECK(std::log2(r1 / r2) > 1.7);
}

TEST_CASE("exp example bounds") {
  DomainSpec dom{.x0 = {0.0, 0.0}, .R = 1.0, .t0 = 1.0, .T = 1.0, .rho = 0.5,
                 .delta = 0.5};
  auto f = analytic_solution(
      {.kind = AnalyticSpec::Kind::ExpExample, .epsilon = 0.01}, dom, 0.1, 0.1,
      19.0);
  CHECK(f.M == 19.0);
  const double e2 = std::exp(2.0);
  // every stored node (the cut layer included) stays inside (1, 19)
  for (std::size_t m = 0; m < f.u.size(); ++m)
    for (std::size_t id = 0; id < f.grid.size(); ++id)
      if (f.grid.cls[id] != NodeClass::Exterior) {
        CHECK(f.u[m][id] > 1.0);
        CHECK(f.u[m][id] < 19.0);
      }
  // the tighter closed-form bounds hold on the cylinder itself
  for (std::size_t m = 0; m < f.u.size(); ++m)
    for (int j = 0; j < f.grid.ny; ++j) {
      auto rs = f.grid.rows[j];
      for (int i = rs.begin; i < rs.end; ++i) {
        CHECK(f.u[m][f.grid.index(i, j)] > 10.0 - e2 * 0.01);
        CHECK(f.u[m][f.grid.index(i, j)] < 10.0 + e2 * 0.01);
      }
    }
  CHECK_THROWS_AS((void)analytic_solution(
                      {.kind = AnalyticSpec::Kind::ExpExample, .epsilon = 0.01},
                      dom, 0.1, 0.1, 5.0),
                  InvalidArgument);  // override below field max
}

TEST_CASE("poincare harmonic field") {
  DomainSpec dom{.x0 = {0.0, 0.0}, .R = 2.0, .t0 = 1.0, .T = 1.0, .rho = 1.0,
                 .delta = 0.5};
  auto f = analytic_solution(
      {.kind = AnalyticSpec::Kind::PoincareHarmonic, .lambda = 1.0}, dom, 0.05,
      0.25);
  CHECK(f.metric.is_poincare());
  CHECK(f.metric.ricci_lower_bound() == doctest::Approx(1.0));
  // sup/inf of x1 + 2 over the geodesic ball image, padded by the cut layer
  double re = std::tanh(dom.R / 2.0);
  CHECK(f.M >= 2.0 + re);
  CHECK(f.M <= 2.0 + re + 4 * 0.05);
  CHECK(f.min_u >= 2.0 - re - 4 * 0.05);
  for (int j = 0; j < f.grid.ny; ++j) {
    auto rs = f.grid.rows[j];
    for (int i = rs.begin; i < rs.end; ++i) {
      CHECK(f.u[0][f.grid.index(i, j)] >= 2.0 - re - 1e-12);
      CHECK(f.u[0][f.grid.index(i, j)] <= 2.0 + re + 1e-12);
    }
  }
  CHECK(pde_residual(f, SourceSpec::zero()) < 1e-9);  // stationary harmonic
}

TEST_CASE("radial gauss kernel (n=3) converges under crank-nicolson") {
  DomainSpec dom{.x0 = {0.0, 0.0, 0.0}, .R = 1.0, .t0 = 2.0, .T = 1.0,
                 .rho = 0.5, .delta = 0.5};
  auto flat3 = MetricSpec::euclidean(3);
  auto kern3 = [](std::span<const double> x, double t) {
    double r2 = 0;
    for (double c : x) r2 += c * c;
    return std::pow(4 * M_PI * t, -1.5) * std::exp(-r2 / (4 * t));
  };
  double errs[2];
  int k = 0;
  for (double h : {0.05, 0.025}) {
    SolveOptions opt{.scheme = Scheme::CrankNicolson, .h = h, .dt = h,
                     .mode = GridMode::Radial1D};
    auto f = solve_parabolic(dom, flat3, SourceSpec::zero(), kern3, kern3, opt);
    double worst = 0;
    for (std::size_t m = 0; m < f.u.size(); ++m) {
      auto rs = f.grid.rows[0];
      for (int i = rs.begin; i < rs.end; ++i) {
        double r[] = {i * h};
        worst = std::max(worst, std::fabs(f.u[m][i] - kern3(r, f.times[m])));
      }
    }
    errs[k++] = worst;
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[0] / errs[1] > 3.0);  // ~ order 2

  // residual of the radial analytic field refines as well
  auto fa = analytic_solution({.kind = AnalyticSpec::Kind::GaussKernel, .n = 3},
                              dom, 0.05, 0.05);
  auto fb = analytic_solution({.kind = AnalyticSpec::Kind::GaussKernel, .n = 3},
                              dom, 0.025, 0.025);
  CHECK(pde_residual(fb, SourceSpec::zero()) <
        pde_residual(fa, SourceSpec::zero()));
}

TEST_CASE("poincare crank-nicolson keeps harmonic data stationary") {
  const double lambda = 1.0;
  double Rg = 2.0 * std::atanh(0.6);
  DomainSpec dom{.x0 = {0.0, 0.0}, .R = Rg, .t0 = 1.0, .T = 0.5,
                 .rho = Rg / 2, .delta = 0.25};
  auto pc = MetricSpec::poincare_disk(lambda);
  auto harm = [](std::span<const double> x, double) { return x[0] + 2.0; };
  SolveOptions opt{.scheme = Scheme::CrankNicolson, .h = 0.05, .dt = 0.1};
  auto f = solve_parabolic(dom, pc, SourceSpec::zero(), harm, harm, opt);
  double drift = 0;
  for (std::size_t m = 0; m < f.u.size(); ++m)
    for (int j = 0; j < f.grid.ny; ++j) {
      auto rs = f.grid.rows[j];
      for (int i = rs.begin; i < rs.end; ++i) {
        auto p = f.grid.point(i, j);
        drift = std::max(drift,
                         std::fabs(f.u[m][f.grid.index(i, j)] - (p[0] + 2.0)));
      }
    }
  CHECK(drift < 1e-9);

  // explicit scheme on the conformal metric honors the weighted CFL bound
  SolveOptions ex{.scheme = Scheme::Explicit, .h = 0.05,
                  .dt = 0.05 * 0.05 / 4 * 4.0 * lambda * lambda * 0.9};
  auto fe = solve_parabolic(dom, pc, SourceSpec::zero(), harm, harm, ex);
  CHECK(pde_residual(fe, SourceSpec::zero()) < 1e-8);
  // with lambda = 1 the weighted bound is dt <= h^2 (slowest diffusion at
  // the disk center); 1.2 h^2 must be rejected
  SolveOptions bad = ex;
  bad.dt = 1.2 * 0.05 * 0.05;
  CHECK_THROWS_AS(
      (void)solve_parabolic(dom, pc, SourceSpec::zero(), harm, harm, bad),
      SolverError);
}

TEST_CASE("semilinear crank-nicolson stays positive and bounded") {
  auto dom = disk_domain(0.5, 0.1, 0.1);
  auto flat = MetricSpec::euclidean(2);
  auto one = [](std::span<const double>, double) { return 1.0; };
  SolveOptions opt{.scheme = Scheme::CrankNicolson, .h = 0.0625, .dt = 0.005};
  auto f = solve_parabolic(dom, flat, SourceSpec::power(1.0, 2.0), one, one,
                           opt);
  CHECK(f.min_u >= 1.0 - 1e-9);  // u_t = lap u + u^2 grows from 1
  CHECK(f.M < 1.2);
  f.validate_bounds();
}

TEST_CASE("field file round-trip is bit-exact") {
  auto dom = disk_domain();
  auto flat = MetricSpec::euclidean(2);
  auto kernel = gauss2();
  SolveOptions opt{.scheme = Scheme::CrankNicolson, .h = 0.125, .dt = 0.25};
  auto f = solve_parabolic(dom, flat, SourceSpec::zero(), kernel, kernel, opt);

  std::string path = "roundtrip_field.dat";
  save_field(f, path);
  auto g = load_field(path);
  REQUIRE(g.u.size() == f.u.size());
  for (std::size_t m = 0; m < f.u.size(); ++m)
    for (std::size_t id = 0; id < f.grid.size(); ++id) {
      if (f.grid.cls[id] == NodeClass::Exterior) continue;
      CHECK(std::memcmp(&g.u[m][id], &f.u[m][id], sizeof(double)) == 0);
    }
  CHECK(g.M == f.M);
  CHECK(g.dt == f.dt);
  CHECK(g.id == f.id);
  CHECK(g.min_u == f.min_u);
  std::remove(path.c_str());

  // analytic fields reattach closed forms on load
  auto fa = analytic_solution({.kind = AnalyticSpec::Kind::GaussKernel, .n = 2},
                              dom, 0.125, 0.25);
  save_field(fa, path);
  auto ga = load_field(path);
  CHECK(ga.has_exact());
  double p[] = {1.1, 0.1};
  CHECK(ga.exact_gradient(p, 1.5) == fa.exact_gradient(p, 1.5));
  std::remove(path.c_str());
}

TEST_CASE("gauss kernel needs positive time") {
  DomainSpec dom{.x0 = {0.0, 0.0}, .R = 0.5, .t0 = 0.5, .T = 1.0, .rho = 0.25,
                 .delta = 0.5};
  CHECK_THROWS_AS((void)analytic_solution(
                      {.kind = AnalyticSpec::Kind::GaussKernel, .n = 2}, dom,
                      0.1, 0.1),
                  InvalidArgument);
}

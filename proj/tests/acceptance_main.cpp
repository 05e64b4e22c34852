// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Runs at desk scale (well under two minutes).

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "gradlab/config.hpp"
#include "gradlab/cutoff.hpp"
#include "gradlab/field_io.hpp"
#include "gradlab/runner.hpp"
#include "gradlab/solver.hpp"
#include "gradlab/verify.hpp"

using namespace gradlab;

namespace {

int g_failures = 0;

void report(int n, bool pass, const char* what, const std::string& detail) {
  std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", n, what,
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

DomainSpec exp_domain() {
  return {.x0 = {0.0, 0.0}, .R = 1.0, .t0 = 1.0, .T = 1.0, .rho = 0.5,
          .delta = 0.5};
}

// ---------------------------------------------------------------- 1: cutoff
bool criterion_cutoff(std::string* detail) {
  bool ok = true;
  double recorded_bridge = 0;
  for (double a : {0.3, 0.5, 0.75}) {
    CutoffParams p{.a = a, .R = 2.0, .rho = 0.75, .t0 = 0.5, .T = 1.25,
                   .delta = 0.5};
    // support identities, exactly, on a 10^4 grid
    for (int i = 0; i <= 10000; ++i) {
      double r = 3.0 * i / 10000.0;
      double ps = psi_bar(r, p);
      if (ps * (r >= p.R ? 1.0 : 0.0) != 0.0) ok = false;
      if ((1.0 - ps) * (r <= p.R - p.rho ? 1.0 : 0.0) != 0.0) ok = false;
      double t = p.t0 - p.T - 0.25 + 2.0 * i / 10000.0;
      double ph = phi_time(t, p);
      if (t <= p.t0 - p.T && ph != 0.0) ok = false;
      if (t >= p.t0 - p.T + p.delta && ph != 1.0) ok = false;
    }
    // measured constants: finite, and stable under dyadic refinement
    auto c1 = measure_cutoff_constants(p, 2000);
    auto c2 = measure_cutoff_constants(p, 4000);
    if (!std::isfinite(c1.C_space) || !std::isfinite(c1.C_time)) ok = false;
    if (std::fabs(c2.C_space - c1.C_space) > 0.05 * c1.C_space) ok = false;
    if (std::fabs(c2.C_time - c1.C_time) > 0.05 * c1.C_time) ok = false;
    if (a == 0.5) recorded_bridge = c2.bridge_max_space;
  }
  // a = 1/2: ratio on the small-psi piece stays below the closed-form 13
  TransitionProfile prof(0.5);
  double small_psi_sup = space_ratio_sup(prof, 0.0, 0.25, 40000);
  if (small_psi_sup > 13.0 + 1e-9) ok = false;
  *detail = fmt("small-psi ratio sup %.6f <= 13, bridge max %.3f",
                small_psi_sup, recorded_bridge);
  return ok;
}

// ----------------------------------------------------- 2: gauss kernel
bool criterion_gauss(std::string* detail) {
  bool ok = true;
  DomainSpec dom{.x0 = {1.0, 0.0}, .R = 0.5, .t0 = 2.0, .T = 1.0, .rho = 0.25,
                 .delta = 0.5};
  auto f = analytic_solution({.kind = AnalyticSpec::Kind::GaussKernel, .n = 2},
                             dom, 0.0625, 0.0625);
  // closed-form identity |grad u|/u = |x|/(2t) at 10^3 random points
  std::mt19937 rng(20260808);
  std::uniform_real_distribution<double> dr(-dom.R, dom.R);
  std::uniform_real_distribution<double> dt_(0.0, dom.T);
  double worst_id = 0;
  int npts = 0;
  while (npts < 1000) {
    double x[] = {dom.x0[0] + dr(rng), dom.x0[1] + dr(rng)};
    if (std::hypot(x[0] - dom.x0[0], x[1] - dom.x0[1]) > dom.R) continue;
    ++npts;
    double t = dom.t_start() + dt_(rng);
    auto g = f.exact_gradient(x, t);
    double u = f.exact_value(x, t);
    double lhs = std::hypot(g[0], g[1]) / u;
    double expect = std::hypot(x[0], x[1]) / (2.0 * t);
    worst_id = std::max(worst_id, std::fabs(lhs - expect));
  }
  if (worst_id > 1e-10) ok = false;

  // FD reproduction at second order over three refinements
  auto kernel = [](std::span<const double> x, double t) {
    double r2 = x[0] * x[0] + x[1] * x[1];
    return std::exp(-r2 / (4 * t)) / (4 * M_PI * t);
  };
  auto flat = MetricSpec::euclidean(2);
  double errs[3];
  double h = 0.25;
  for (int l = 0; l < 3; ++l, h /= 2) {
    SolveOptions opt{.scheme = Scheme::CrankNicolson, .h = h, .dt = h};
    auto sol = solve_parabolic(dom, flat, SourceSpec::zero(), kernel, kernel,
                               opt);
    double worst = 0;
    for (std::size_t m = 0; m < sol.u.size(); ++m)
      for (int j = 0; j < sol.grid.ny; ++j) {
        auto rs = sol.grid.rows[j];
        for (int i = rs.begin; i < rs.end; ++i) {
          auto p = sol.grid.point(i, j);
          worst = std::max(worst, std::fabs(sol.u[m][sol.grid.index(i, j)] -
                                            kernel(p, sol.times[m])));
        }
      }
    errs[l] = worst;
  }
  double o1 = std::log2(errs[0] / errs[1]), o2 = std::log2(errs[1] / errs[2]);
  if (o1 < 1.7 || o1 > 2.3 || o2 < 1.7 || o2 > 2.3) ok = false;
  *detail = fmt("identity max err %.2e, FD orders %.2f / %.2f", worst_id, o1,
                o2);
  return ok;
}

// --------------------------------------------- 3: the eps-exponent example
bool criterion_exp_example(std::string* detail) {
  bool ok = true;
  const double eps = 0.01, e2 = std::exp(2.0);
  auto dom = exp_domain();
  auto f = analytic_solution(
      {.kind = AnalyticSpec::Kind::ExpExample, .epsilon = eps}, dom, 0.1, 0.1,
      19.0);
  for (std::size_t m = 0; m < f.u.size() && ok; ++m)
    for (std::size_t id = 0; id < f.grid.size(); ++id) {
      if (f.grid.cls[id] == NodeClass::Exterior) continue;
      if (!(f.u[m][id] > 1.0 && f.u[m][id] < 19.0)) {
        ok = false;
        break;
      }
    }

  // residual refinement order >= 1.7
  double r1 = pde_residual(f, SourceSpec::zero());
  auto f2 = analytic_solution(
      {.kind = AnalyticSpec::Kind::ExpExample, .epsilon = eps}, dom, 0.05,
      0.05, 19.0);
  double r2 = pde_residual(f2, SourceSpec::zero());
  double order = std::log2(r1 / r2);
  if (!(order >= 1.7)) ok = false;

  // traces below e^2 eps
  auto fa = assess_field(f2, SourceSpec::zero());
  if (!(fa.traces.initial_trace <= e2 * eps)) ok = false;
  if (!(fa.traces.lateral_trace <= e2 * eps)) ok = false;

  // boundary-aware vs universal bound with a shared calibrated C
  CalibrationTask task{&fa, estimate_from_id("sz_heat"), Subregion::Half};
  auto cal = calibrate_C({&task, 1}, 1e-3);
  if (!cal.feasible) ok = false;
  CompareEntry entries[] = {
      {estimate_from_id("boundary_aware"), cal.C_star},
      {estimate_from_id("sz_heat"), cal.C_star},
  };
  auto table = compare_bounds(fa, entries, Subregion::Half);
  double factor = 0;
  if (table.winner != "boundary_aware") {
    ok = false;
  } else {
    factor = table.rows[1].sup_rhs / table.rows[0].sup_rhs;
    if (!(factor >= 5.0)) ok = false;
  }
  *detail = fmt("residual order %.2f, traces (%.2e, %.2e) <= %.2e, "
                "improvement factor %.0fx",
                order, fa.traces.initial_trace, fa.traces.lateral_trace,
                e2 * eps, factor);
  return ok;
}

// ------------------------------------------------------- 4: poincare disk
bool criterion_poincare(std::string* detail) {
  bool ok = true;
  double worst_lb = 0, worst_center = 0;
  for (double lambda : {0.5, 1.0, 2.0}) {
    auto metric = MetricSpec::poincare_disk(lambda);
    ScalarField affine;
    affine.value = [](std::span<const double> x) { return x[0] + 2.0; };
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> d(-0.9, 0.9);
    int n = 0;
    while (n < 1000) {
      double x[] = {d(rng), d(rng)};
      if (x[0] * x[0] + x[1] * x[1] > 0.81) continue;
      ++n;
      double lb = laplace_beltrami(metric, affine, x);
      worst_lb = std::max(worst_lb, std::fabs(lb));
    }
    if (worst_lb > 1e-8) ok = false;

    double Rg = 2.0 * lambda * std::atanh(0.7);
    DomainSpec dom{.x0 = {0.0, 0.0}, .R = Rg, .t0 = 1.0, .T = 1.0,
                   .rho = Rg / 2, .delta = 0.5};
    auto f = analytic_solution(
        {.kind = AnalyticSpec::Kind::PoincareHarmonic, .lambda = lambda}, dom,
        0.04, 0.25);
    auto fa = assess_field(f, SourceSpec::zero());
    for (int j = 0; j < f.grid.ny; ++j) {
      auto rs = f.grid.rows[j];
      for (int i = rs.begin; i < rs.end; ++i) {
        auto p = f.grid.point(i, j);
        if (p[0] * p[0] + p[1] * p[1] >= 0.25) continue;
        if (fa.derived.grad_v[0][f.grid.index(i, j)] <
            1.0 / (8 * lambda) - 1e-12)
          ok = false;
      }
    }
    int ci = (f.grid.nx - 1) / 2, cj = (f.grid.ny - 1) / 2;
    double center = fa.derived.grad_v[0][f.grid.index(ci, cj)];
    worst_center =
        std::max(worst_center, std::fabs(center - 1.0 / (4 * lambda)));
    if (worst_center > 1e-8) ok = false;
  }
  *detail = fmt("harmonicity max %.1e, center value err %.1e", worst_lb,
                worst_center);
  return ok;
}

// --------------------------------------------- 5: theorem end-to-end
bool criterion_theorem(std::string* detail) {
  bool ok = true;
  std::vector<SolutionField> fields;
  std::vector<SourceSpec> sources;

  // gauss kernel, two windows
  fields.push_back(analytic_solution(
      {.kind = AnalyticSpec::Kind::GaussKernel, .n = 2},
      DomainSpec{.x0 = {1.0, 0.0}, .R = 0.5, .t0 = 2.0, .T = 1.0, .rho = 0.25,
                 .delta = 0.5},
      0.05, 0.1));
  sources.push_back(SourceSpec::zero());
  fields.push_back(analytic_solution(
      {.kind = AnalyticSpec::Kind::GaussKernel, .n = 2},
      DomainSpec{.x0 = {1.2, 0.0}, .R = 0.6, .t0 = 2.2, .T = 1.1, .rho = 0.3,
                 .delta = 0.55},
      0.06, 0.11));
  sources.push_back(SourceSpec::zero());

  // the eps-exponent example
  fields.push_back(analytic_solution(
      {.kind = AnalyticSpec::Kind::ExpExample, .epsilon = 0.01}, exp_domain(),
      0.1, 0.1, 19.0));
  sources.push_back(SourceSpec::zero());

  // an FD semilinear run with m bounded away from zero
  {
    DomainSpec dom{.x0 = {0.0, 0.0}, .R = 0.5, .t0 = 0.1, .T = 0.1,
                   .rho = 0.25, .delta = 0.05};
    auto one = [](std::span<const double>, double) { return 1.0; };
    SolveOptions opt{.scheme = Scheme::CrankNicolson, .h = 0.0625,
                     .dt = 0.005};
    fields.push_back(solve_parabolic(dom, MetricSpec::euclidean(2),
                                     SourceSpec::power(1.0, 2.0), one, one,
                                     opt));
    sources.push_back(SourceSpec::power(1.0, 2.0));
    if (!(fields.back().min_u >= 0.99)) ok = false;
  }

  std::vector<FieldAssessment> fas;
  for (std::size_t q = 0; q < fields.size(); ++q)
    fas.push_back(assess_field(fields[q], sources[q]));

  std::vector<CalibrationTask> tasks;
  for (auto& fa : fas)
    tasks.push_back({&fa, estimate_from_id("theorem"), Subregion::Full});

  auto cal = calibrate_C(tasks, 1e-3);
  if (!cal.feasible || !std::isfinite(cal.C_star)) ok = false;

  // every field passes at C*; a bracketing violation exists just below
  bool bracket_violated = false;
  for (auto& t : tasks) {
    auto rep = check_estimate(*t.assessment, t.spec, cal.C_star, t.subregion);
    if (!rep.passed()) ok = false;
    auto rep2 = check_estimate(*t.assessment, t.spec,
                               cal.C_star * (1 - 2e-3), t.subregion);
    if (!rep2.passed()) bracket_violated = true;
  }
  if (!bracket_violated) ok = false;

  // leave-one-out stability within a factor 3
  double worst_ratio = 1.0;
  for (std::size_t drop = 0; drop < tasks.size(); ++drop) {
    std::vector<CalibrationTask> rest;
    for (std::size_t q = 0; q < tasks.size(); ++q)
      if (q != drop) rest.push_back(tasks[q]);
    auto sub = calibrate_C(rest, 1e-3);
    if (!sub.feasible) ok = false;
    double ratio = std::max(cal.C_star / sub.C_star, sub.C_star / cal.C_star);
    worst_ratio = std::max(worst_ratio, ratio);
  }
  if (!(worst_ratio <= 3.0)) ok = false;

  *detail = fmt("C* = %.6g (witness %s), drop-one ratio <= %.2f", cal.C_star,
                cal.witness_field.c_str(), worst_ratio);
  return ok;
}

// ------------------------------------------------- 6: lemma residual
bool criterion_lemma(std::string* detail) {
  bool ok = true;
  double worst_order = 10.0;
  struct Case {
    AnalyticSpec spec;
    DomainSpec dom;
    std::optional<double> M;
  };
  const Case cases[] = {
      {{.kind = AnalyticSpec::Kind::GaussKernel, .n = 2},
       {.x0 = {1.0, 0.0}, .R = 0.5, .t0 = 2.0, .T = 1.0, .rho = 0.25,
        .delta = 0.5},
       {}},
      {{.kind = AnalyticSpec::Kind::ExpExample, .epsilon = 0.01}, exp_domain(),
       19.0},
      {{.kind = AnalyticSpec::Kind::PoincareHarmonic, .lambda = 1.0},
       {.x0 = {0.0, 0.0}, .R = 2.0 * std::atanh(0.7), .t0 = 1.0, .T = 1.0,
        .rho = std::atanh(0.7), .delta = 0.5},
       {}},
  };
  for (const auto& c : cases) {
    double prev_viol = -1;
    for (double h : {0.08, 0.04, 0.02}) {
      auto f = analytic_solution(c.spec, c.dom, h, h, c.M);
      auto fa = assess_field(f, SourceSpec::zero());
      auto r = lemma_pi_residual(fa);
      if (!r.passed()) ok = false;
      double viol = std::max(0.0, -r.min_residual);
      if (prev_viol > 0 && viol > 0)
        worst_order = std::min(worst_order, std::log2(prev_viol / viol));
      prev_viol = viol;
    }
  }
  if (worst_order < 1.7) ok = false;
  *detail = worst_order >= 9.9
                ? std::string("no violations at any refinement level")
                : fmt("violation shrink order %.2f", worst_order);
  return ok;
}

// ---------------------------------------------- 7: estimate algebra
bool criterion_algebra(std::string* detail) {
  bool ok = true;
  DomainSpec dom{.x0 = {1.0, 0.0}, .R = 0.5, .t0 = 2.0, .T = 1.0, .rho = 0.25,
                 .delta = 0.5};
  auto flat = MetricSpec::euclidean(2);

  // partition identity over 10^5 random points
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> dr(-dom.R, dom.R);
  std::uniform_real_distribution<double> dt_(0.0, dom.T);
  int n = 0;
  while (n < 100000) {
    double x[] = {dom.x0[0] + dr(rng), dom.x0[1] + dr(rng)};
    double d = std::hypot(x[0] - dom.x0[0], x[1] - dom.x0[1]);
    if (d > dom.R) continue;
    ++n;
    double t = dom.t_start() + dt_(rng);
    bool inner = d < dom.R - dom.rho;
    bool late = t >= dom.t_start() + dom.delta;
    int count = (inner && !late) + (!inner && late) + (!inner && !late) +
                (inner && late);
    if (count != 1) ok = false;
    Region r = region_of(x, t, dom, flat);
    Region expect = inner ? (late ? Region::Interior : Region::NearInitial)
                          : (late ? Region::NearLateral : Region::Corner);
    if (r != expect) ok = false;
  }

  // iota dominated by its four arguments; zero data kills the zone values
  EstimateConstants ec{.gamma = 0.3, .mu = 0.1, .k = 0.2, .delta = dom.delta,
                       .rho = dom.rho, .R = dom.R};
  for (double C : {0.05, 0.7, 4.0}) {
    BoundaryTraces tr{0.2, 0.45};
    auto z = ZoneCoefficients::make(tr, ec, C);
    double Tt = C * ec.time_cutoff_term(), Ss = C * ec.space_cutoff_term();
    if (z.interior > tr.lateral_trace + tr.initial_trace + 1e-15) ok = false;
    if (z.interior > tr.lateral_trace + Tt + 1e-15) ok = false;
    if (z.interior > tr.initial_trace + Ss + 1e-15) ok = false;
    if (z.interior > Tt + Ss + 1e-15) ok = false;
    auto z0 = ZoneCoefficients::make({0.0, 0.0}, ec, C);
    if (z0.near_initial != 0 || z0.near_lateral != 0 || z0.corner != 0 ||
        z0.interior != 0)
      ok = false;
  }

  // reduction inequality over a 100x100 (k, R) grid
  for (int a = 0; a < 100; ++a)
    for (int b = 0; b < 100; ++b) {
      double k = 1e-4 * std::pow(1.2, a);
      double R = 1e-3 * std::pow(1.15, b);
      if (2 * std::pow(k, 0.25) / std::sqrt(R) >
          std::sqrt(k) + 1.0 / R + 1e-12)
        ok = false;
    }

  // closed-form mu dominates the grid-sup oracle in every regime
  const double M = 2.0, m = 0.25;
  GridResolution res{.space = 5, .time = 3, .u_samples = 41};
  struct MuCase {
    SourceSpec s;
    double k;
  };
  const MuCase cases[] = {
      {SourceSpec::power(1.5, 0.3), 0.2},  {SourceSpec::power(2.0, 0.0), 0.0},
      {SourceSpec::power(0.7, 1.0), 1.0},  {SourceSpec::power(1.2, 2.5), 0.0},
      {SourceSpec::power(-1.0, 0.5), 0.3}, {SourceSpec::power(-2.0, -1.0), 0.0},
      {SourceSpec::semilinear(2.0), 0.1},  {SourceSpec::semilinear(0.5), 0.0},
      {SourceSpec::semilinear(-1.0), 2.0}, {SourceSpec::semilinear(0.0), 0.5},
  };
  double worst_excess = 0;
  for (const auto& c : cases) {
    AnalysisMethod meth;
    double closed = compute_mu(c.s, dom, flat, c.k, M, m, res, &meth);
    if (meth != AnalysisMethod::ClosedForm) ok = false;
    double oracle = compute_mu_gridsup(c.s, dom, flat, c.k, M, m, res);
    double excess = oracle - closed * (1 + 1e-9);
    worst_excess = std::max(worst_excess, excess);
    if (excess > 1e-12) ok = false;
  }
  *detail = fmt("partition ok, mu oracle excess %.1e", worst_excess);
  return ok;
}

// ------------------------------------------------- 8: determinism
bool criterion_determinism(std::string* detail) {
  const char* cfg_text = R"([metric]
kind = "euclidean"
dimension = 2
[domain]
x0 = [1.0, 0.0]
radius = 0.5
t0 = 2.0
duration = 1.0
rho = 0.25
delta = 0.5
[solution]
type = "analytic"
kind = "gauss_kernel"
h = 0.1
dt = 0.125
[check.thm]
estimate = "theorem"
C = "calibrate"
[check.sz]
estimate = "sz_heat"
C = "calibrate"
[output]
per_node_csv = true
)";
  auto cfg = Config::parse_string(cfg_text);
  RunOptions opt;
  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  opt.out_dir = "acc_det_a";
  int rc1 = run_experiment(cfg, opt);
  opt.out_dir = "acc_det_b";
  opt.threads = 3;  // thread count must not leak into the payloads
  int rc2 = run_experiment(cfg, opt);
  bool ok = rc1 == 0 && rc2 == 0;
  for (const char* name :
       {"summary.json", "thm.report.json", "sz.report.json", "thm.nodes.csv",
        "sz.nodes.csv"}) {
    if (slurp(std::string("acc_det_a/") + name) !=
        slurp(std::string("acc_det_b/") + name))
      ok = false;
  }
  *detail = ok ? "payloads byte-identical across runs and thread counts" : "";
  return ok;
}

}  // namespace

int main() {
  struct Entry {
    int n;
    const char* what;
    bool (*fn)(std::string*);
  };
  const Entry entries[] = {
      {1, "cut-off support, constants, small-psi ratio", criterion_cutoff},
      {2, "gauss kernel identity and FD convergence", criterion_gauss},
      {3, "eps-exponent example and bound comparison", criterion_exp_example},
      {4, "poincare disk harmonicity and optimality floor", criterion_poincare},
      {5, "theorem calibration end-to-end", criterion_theorem},
      {6, "pointwise lemma residual", criterion_lemma},
      {7, "estimate algebra", criterion_algebra},
      {8, "deterministic reports", criterion_determinism},
  };
  for (const auto& e : entries) {
    std::string detail;
    bool pass = false;
    try {
      pass = e.fn(&detail);
    } catch (const std::exception& ex) {
      detail = std::string("exception: ") + ex.what();
    }
    report(e.n, pass, e.what, detail);
  }
  if (g_failures) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all 8 criteria passed\n");
  return 0;
}

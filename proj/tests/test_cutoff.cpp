#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "gradlab/cutoff.hpp"

using namespace gradlab;

TEST_CASE("alpha closed-form pieces") {
  CHECK(alpha(0.0, 0.5) == 0.0);
  CHECK(alpha(-3.0, 0.5) == 0.0);
  CHECK(alpha(0.25, 0.5) == doctest::Approx(1.0 / 256).epsilon(1e-14));
  CHECK(alpha(0.875, 0.5) == doctest::Approx(4095.0 / 4096).epsilon(1e-14));
  CHECK(alpha(2.0, 0.3) == 1.0);
  CHECK(alpha(1.0, 0.7) == 1.0);
  CHECK_THROWS_AS((void)alpha(0.5, 1.5), InvalidArgument);
  CHECK_THROWS_AS((void)alpha(0.5, 0.0), InvalidArgument);
}

TEST_CASE("alpha is C2 at the junctions (one-sided second differences)") {
  for (double a : {0.3, 0.5, 0.75}) {
    TransitionProfile prof(a);
    for (double s : {0.0, 0.25, 0.75, 1.0}) {
      double h = 1e-5;
      // one-sided 2nd-order first-derivative estimates from both sides
      auto d_left = (3 * prof.value(s) - 4 * prof.value(s - h) +
                     prof.value(s - 2 * h)) / (2 * h);
      auto d_right = (-3 * prof.value(s) + 4 * prof.value(s + h) -
                      prof.value(s + 2 * h)) / (2 * h);
      CHECK(d_left == doctest::Approx(d_right).epsilon(0).scale(1).epsilon(1e-3));
      // one-sided second derivatives
      auto dd_left = (2 * prof.value(s) - 5 * prof.value(s - h) +
                      4 * prof.value(s - 2 * h) - prof.value(s - 3 * h)) /
                     (h * h);
      auto dd_right = (2 * prof.value(s) - 5 * prof.value(s + h) +
                       4 * prof.value(s + 2 * h) - prof.value(s + 3 * h)) /
                      (h * h);
      CHECK(std::fabs(dd_left - dd_right) < 1e-2);
    }
  }
}

TEST_CASE("alpha strictly increasing, bridge included") {
  for (double a : {0.25, 0.3, 0.5, 0.75, 0.8}) {
    TransitionProfile prof(a);
    for (int i = 0; i < 1000; ++i) {
      double s = 0.25 + 0.5 * i / 999.0;
      CHECK(prof.d1(s) > 0);
    }
    double prev = -1;
    for (int i = 0; i <= 10000; ++i) {
      double v = prof.value(-0.2 + 1.4 * i / 10000.0);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("psi_bar support and values") {
  CutoffParams p{.a = 0.5, .R = 2.0, .rho = 1.0, .t0 = 0, .T = 1, .delta = 0.5};
  CHECK(psi_bar(0.5, p) == 1.0);
  CHECK(psi_bar(2.3, p) == 0.0);
  CHECK(psi_bar(2.0, p) == 0.0);
  CHECK(psi_bar(1.0, p) == 1.0);
  CHECK(psi_bar(1.75, p) == doctest::Approx(1.0 / 256).epsilon(1e-14));
  CHECK_THROWS_AS((void)psi_bar(-0.1, p), InvalidArgument);
}

TEST_CASE("phi_time support and values") {
  CutoffParams p{.a = 0.5, .R = 2.0, .rho = 1.0, .t0 = 0, .T = 1, .delta = 0.5};
  CHECK(phi_time(-1.2, p) == 0.0);
  CHECK(phi_time(-1.0, p) == 0.0);
  CHECK(phi_time(-0.4, p) == 1.0);
  CHECK(phi_time(-0.5, p) == 1.0);
  CHECK(phi_time(-0.875, p) == doctest::Approx(1.0 / 256).epsilon(1e-14));
}

TEST_CASE("support identities are exact on a dense grid") {
  for (double a : {0.3, 0.5, 0.75}) {
    CutoffParams p{.a = a, .R = 2.0, .rho = 1.0, .t0 = 0, .T = 1, .delta = 0.5};
    double prev_psi = 2.0, prev_phi = -1.0;
    for (int i = 0; i <= 10000; ++i) {
      double r = 3.0 * i / 10000.0;
      double ps = psi_bar(r, p);
      CHECK(ps * (r >= p.R ? 1.0 : 0.0) == 0.0);
      CHECK((1.0 - ps) * (r <= p.R - p.rho ? 1.0 : 0.0) == 0.0);
      CHECK(ps <= prev_psi);  // non-increasing
      prev_psi = ps;

      double t = -1.5 + 2.0 * i / 10000.0;
      double ph = phi_time(t, p);
      CHECK(ph >= prev_phi);  // non-decreasing
      prev_phi = ph;
    }
  }
}

TEST_CASE("measured constants: finite, refinement-stable, scale-invariant") {
  CutoffParams p{.a = 0.5, .R = 2.0, .rho = 1.0, .t0 = 0, .T = 1, .delta = 0.5};
  auto c1 = measure_cutoff_constants(p, 200);
  auto c2 = measure_cutoff_constants(p, 400);
  CHECK(std::isfinite(c1.C_space));
  CHECK(std::isfinite(c1.C_time));
  CHECK(c1.C_space > 0);
  CHECK(c1.C_time > 0);
  CHECK(std::fabs(c2.C_space - c1.C_space) <= 0.05 * c1.C_space);
  CHECK(std::fabs(c2.C_time - c1.C_time) <= 0.05 * c1.C_time);

  // joint rescaling r -> cr, R -> cR, rho -> c rho leaves the sup unchanged
  for (double c : {2.0, 0.5, 4.0}) {
    CutoffParams ps = p;
    ps.R *= c;
    ps.rho *= c;
    auto cs = measure_cutoff_constants(ps, 200);
    CHECK(cs.C_space == c1.C_space);
  }
}

TEST_CASE("a=1/2 ratio on the small-psi piece never exceeds 13") {
  // On the power piece the exact ratio is 4s + 12 for a = 1/2, maximal at
  // the junction s = 1/4.
  TransitionProfile prof(0.5);
  double sup = space_ratio_sup(prof, 0.0, 0.25, 40000);
  CHECK(sup <= 13.0 + 1e-9);
  CHECK(sup == doctest::Approx(13.0).epsilon(1e-3));
}

TEST_CASE("degenerate window gives zero constants") {
  CutoffParams p{.a = 0.5, .R = 2.0, .rho = 1.0, .t0 = 0, .T = 1, .delta = 0.5};
  // r-window entirely inside [0, R - rho]: psi == 1, derivatives vanish
  auto c = measure_cutoff_constants(p, 200, 0.0, p.R - p.rho);
  CHECK(c.C_space == 0.0);
}

TEST_CASE("time ratio equals 2/(1-a) on the power piece") {
  for (double a : {0.3, 0.5, 0.75}) {
    TransitionProfile prof(a);
    double sup = time_ratio_sup(prof, 1e-6, 0.25, 5000);
    CHECK(sup == doctest::Approx(2.0 / (1.0 - a)).epsilon(1e-6));
  }
}

TEST_CASE("parameter validation") {
  CutoffParams bad{.a = 0.5, .R = 1.0, .rho = 1.5, .t0 = 0, .T = 1, .delta = 0.5};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CutoffParams bad2{.a = 0.5, .R = 1.0, .rho = 0.5, .t0 = 0, .T = 1, .delta = 1.0};
  CHECK_THROWS_AS(bad2.validate(), InvalidArgument);
  CutoffParams ok{.a = 0.5, .R = 1.0, .rho = 0.5, .t0 = 0, .T = 1, .delta = 0.5};
  CHECK_THROWS_AS((void)measure_cutoff_constants(ok, 50), InvalidArgument);
}

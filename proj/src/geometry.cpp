#include "gradlab/geometry.hpp"

#include <cmath>
#include <complex>
#include <cstdio>

namespace gradlab {
namespace {

double norm2(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return s;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw GeometryError(std::string(what) + ": non-finite sample");
}

// 4th-order centered first and second derivative along axis `ax`.
double d1_stencil(const ScalarField& f, std::span<const double> x, int ax,
                  double h) {
  std::vector<double> p(x.begin(), x.end());
  auto at = [&](double off) {
    p[ax] = x[ax] + off;
    double v = f.value(p);
    check_finite(v, "stencil");
    return v;
  };
  return (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
}

double d2_stencil(const ScalarField& f, std::span<const double> x, int ax,
                  double h) {
  std::vector<double> p(x.begin(), x.end());
  auto at = [&](double off) {
    p[ax] = x[ax] + off;
    double v = f.value(p);
    check_finite(v, "stencil");
    return v;
  };
  return (-at(-2 * h) + 16 * at(-h) - 30 * at(0) + 16 * at(h) - at(2 * h)) /
         (12 * h * h);
}

void require_stencil_room(const MetricSpec& m, std::span<const double> x,
                          double h) {
  std::vector<double> p(x.begin(), x.end());
  for (std::size_t ax = 0; ax < x.size(); ++ax) {
    for (double off : {-2 * h, 2 * h}) {
      p[ax] = x[ax] + off;
      if (!m.contains(p)) throw GeometryError("stencil leaves the metric domain");
    }
    p[ax] = x[ax];
  }
}

}  // namespace

MetricSpec MetricSpec::euclidean(int n) {
  if (n < 2) throw InvalidArgument("euclidean metric requires n >= 2");
  MetricSpec m;
  m.kind_ = MetricKind::Euclidean;
  m.dim_ = n;
  m.k_ = 0.0;
  return m;
}

MetricSpec MetricSpec::poincare_disk(double lambda) {
  if (!(lambda > 0)) throw InvalidArgument("poincare factor requires lambda > 0");
  MetricSpec m;
  m.kind_ = MetricKind::Conformal2D;
  m.dim_ = 2;
  m.k_ = 1.0 / (lambda * lambda);
  m.poincare_lambda_ = lambda;
  m.factor_.id = "poincare";
  m.factor_.phi = [lambda](std::span<const double> x) {
    double r2 = x[0] * x[0] + x[1] * x[1];
    double d = 1.0 - r2;
    return 4.0 * lambda * lambda / (d * d);
  };
  m.factor_.in_domain = [](std::span<const double> x) {
    return x[0] * x[0] + x[1] * x[1] < 1.0;
  };
  return m;
}

MetricSpec MetricSpec::conformal2d(ConformalFactor factor, double ricci_lower_k) {
  if (!factor.phi || !factor.in_domain)
    throw InvalidArgument("conformal factor needs phi and domain predicate");
  MetricSpec m;
  m.kind_ = MetricKind::Conformal2D;
  m.dim_ = 2;
  m.k_ = ricci_lower_k;
  m.factor_ = std::move(factor);
  return m;
}

double MetricSpec::conformal_factor(std::span<const double> x) const {
  if (kind_ != MetricKind::Conformal2D)
    throw InvalidArgument("conformal_factor on a flat metric");
  if (!contains(x)) throw GeometryError("point outside metric domain");
  double phi = factor_.phi(x);
  if (!(phi > 0) || !std::isfinite(phi))
    throw GeometryError("conformal factor must be positive and finite");
  return phi;
}

bool MetricSpec::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) return false;
  if (kind_ == MetricKind::Euclidean) return true;
  return factor_.in_domain(x);
}

std::string MetricSpec::describe() const {
  char buf[96];
  if (kind_ == MetricKind::Euclidean) {
    std::snprintf(buf, sizeof buf, "euclidean(n=%d)", dim_);
  } else if (is_poincare()) {
    std::snprintf(buf, sizeof buf, "poincare(lambda=%.17g)", poincare_lambda_);
  } else {
    std::snprintf(buf, sizeof buf, "conformal2d(%s)", factor_.id.c_str());
  }
  return buf;
}

double geodesic_distance(const MetricSpec& metric, std::span<const double> x,
                         std::span<const double> x0) {
  if (!metric.contains(x) || !metric.contains(x0))
    throw GeometryError("point outside metric domain");
  if (metric.kind() == MetricKind::Euclidean) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double d = x[i] - x0[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  if (!metric.is_poincare())
    throw GeometryError("geodesic distance unsupported for factor '" +
                        std::string(metric.describe()) + "'");
  // Mobius-invariant chordal quantity: d = 2*lambda*artanh|(z-w)/(1-conj(w)z)|
  std::complex<double> z(x[0], x[1]), w(x0[0], x0[1]);
  double q = std::abs((z - w) / (1.0 - std::conj(w) * z));
  return 2.0 * metric.poincare_lambda() * std::atanh(q);
}

std::vector<double> euclid_gradient(const ScalarField& f,
                                    std::span<const double> x, StencilSpec st) {
  if (f.gradient) return f.gradient(x);
  std::vector<double> g(x.size());
  for (std::size_t ax = 0; ax < x.size(); ++ax)
    g[ax] = d1_stencil(f, x, static_cast<int>(ax), st.h);
  return g;
}

double laplace_beltrami(const MetricSpec& metric, const ScalarField& f,
                        std::span<const double> x, StencilSpec st) {
  if (!metric.contains(x)) throw GeometryError("point outside metric domain");
  double lap;
  if (f.euclid_laplacian) {
    lap = f.euclid_laplacian(x);
  } else {
    require_stencil_room(metric, x, st.h);
    lap = 0;
    for (std::size_t ax = 0; ax < x.size(); ++ax)
      lap += d2_stencil(f, x, static_cast<int>(ax), st.h);
  }
  check_finite(lap, "laplace_beltrami");
  if (metric.kind() == MetricKind::Euclidean) return lap;
  return lap / metric.conformal_factor(x);
}

double gradient_norm(const MetricSpec& metric, const ScalarField& f,
                     std::span<const double> x, StencilSpec st) {
  if (!metric.contains(x)) throw GeometryError("point outside metric domain");
  if (!f.gradient) require_stencil_room(metric, x, st.h);
  auto g = euclid_gradient(f, x, st);
  double n2 = norm2(g);
  check_finite(n2, "gradient_norm");
  if (metric.kind() == MetricKind::Euclidean) return std::sqrt(n2);
  return std::sqrt(n2 / metric.conformal_factor(x));
}

EuclideanDisk poincare_ball_image(const MetricSpec& metric,
                                  std::span<const double> center,
                                  double radius) {
  if (!metric.is_poincare())
    throw InvalidArgument("poincare_ball_image needs the poincare factor");
  if (!metric.contains(center)) throw GeometryError("center outside unit disk");
  // Send the center to the origin; the ball becomes |w| < r0 and maps back
  // to a Euclidean disk under w -> (w + c)/(1 + conj(c) w).
  double r0 = std::tanh(radius / (2.0 * metric.poincare_lambda()));
  std::complex<double> c(center[0], center[1]);
  double c2 = std::norm(c);
  double denom = 1.0 - c2 * r0 * r0;
  std::complex<double> ec = c * ((1.0 - r0 * r0) / denom);
  double er = r0 * (1.0 - c2) / denom;
  return {ec.real(), ec.imag(), er};
}

}  // namespace gradlab

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gradlab/errors.hpp"

namespace gradlab {

enum class MetricKind { Euclidean, Conformal2D };

// A registered conformal factor phi > 0 on its open domain (g_ij = phi d_ij).
struct ConformalFactor {
  std::string id;
  std::function<double(std::span<const double>)> phi;
  std::function<bool(std::span<const double>)> in_domain;
};

// Ambient metric: flat R^n or a conformal 2-D metric. Carries the Ricci
// lower bound k, meaning Ric >= -k.
class MetricSpec {
 public:
  static MetricSpec euclidean(int n);           // k = 0
  static MetricSpec poincare_disk(double lambda);  // k = 1/lambda^2
  static MetricSpec conformal2d(ConformalFactor factor, double ricci_lower_k);

  MetricKind kind() const { return kind_; }
  int dimension() const { return dim_; }
  double ricci_lower_bound() const { return k_; }

  bool is_poincare() const { return poincare_lambda_ > 0; }
  double poincare_lambda() const { return poincare_lambda_; }

  double conformal_factor(std::span<const double> x) const;
  bool contains(std::span<const double> x) const;

  std::string describe() const;

 private:
  MetricSpec() = default;
  MetricKind kind_ = MetricKind::Euclidean;
  int dim_ = 2;
  double k_ = 0.0;
  double poincare_lambda_ = 0.0;  // 0 when not the built-in Poincare factor
  ConformalFactor factor_;
};

// A scalar sampler with optional closed-form derivatives. When `gradient`
// is set the differential operators below skip the stencils entirely.
struct ScalarField {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  std::function<double(std::span<const double>)> euclid_laplacian;  // sum d_ii
  bool has_closed_forms() const { return static_cast<bool>(gradient); }
};

struct StencilSpec {
  double h = 1e-3;
};

// Geodesic distance. Euclidean norm in the flat case; closed form on the
// Poincare disk. Other conformal factors are rejected rather than solved.
double geodesic_distance(const MetricSpec& metric, std::span<const double> x,
                         std::span<const double> x0);

// Laplace-Beltrami at an interior point. Conformal 2-D metrics reduce to
// phi^{-1} * (euclidean Laplacian); derivatives use centered 4th-order
// stencils unless the field registers closed forms.
double laplace_beltrami(const MetricSpec& metric, const ScalarField& f,
                        std::span<const double> x, StencilSpec st = {});

// Metric gradient norm sqrt(g^{ij} f_i f_j); equals |grad f| / sqrt(phi)
// for conformal metrics.
double gradient_norm(const MetricSpec& metric, const ScalarField& f,
                     std::span<const double> x, StencilSpec st = {});

// Euclidean gradient components (closed form if registered, else stencil).
std::vector<double> euclid_gradient(const ScalarField& f,
                                    std::span<const double> x,
                                    StencilSpec st = {});

// Euclidean geodesic ball image of a Poincare-disk geodesic ball: the
// hyperbolic ball B_g(center, radius) is a Euclidean disk; returns its
// Euclidean center and radius.
struct EuclideanDisk {
  double cx, cy, radius;
};
EuclideanDisk poincare_ball_image(const MetricSpec& metric,
                                  std::span<const double> center,
                                  double radius);

}  // namespace gradlab

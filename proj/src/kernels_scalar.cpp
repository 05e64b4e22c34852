#include <cstddef>
#include <limits>

#include "gradlab/kernels.hpp"

// Scalar reference kernels. Operation order deliberately mirrors the AVX2
// variants (4-lane accumulators in dot, no FMA) so results match bit for bit.

namespace gradlab::kernels::detail {
namespace {

constexpr std::size_t kDotBlock = 1024;  // multiple of 4

void axpby_(double a, const double* x, double b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

double dot_block(const double* x, const double* y, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; n - i >= 4; i += 4) {
    acc[0] += x[i] * y[i];
    acc[1] += x[i + 1] * y[i + 1];
    acc[2] += x[i + 2] * y[i + 2];
    acc[3] += x[i + 3] * y[i + 3];
  }
  double s = (acc[0] + acc[2]) + (acc[1] + acc[3]);
  std::size_t rem = n - i;  // at most 3
  if (rem > 0) s += x[i] * y[i];
  if (rem > 1) s += x[i + 1] * y[i + 1];
  if (rem > 2) s += x[i + 2] * y[i + 2];
  return s;
}

double dot_(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  std::size_t i = 0;
  for (; n - i >= kDotBlock; i += kDotBlock)
    s += dot_block(x + i, y + i, kDotBlock);
  if (i < n) s += dot_block(x + i, y + i, n - i);
  return s;
}

double reduce_max_(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double reduce_min_(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] < m) m = x[i];
  return m;
}

double max_abs_(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = x[i] < 0 ? -x[i] : x[i];
    if (a > m) m = a;
  }
  return m;
}

double max_ratio_(const double* num, const double* den, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double r = num[i] / den[i];
    if (r > m) m = r;
  }
  return m;
}

double min_diff_(const double* a, const double* b, std::size_t n) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    if (d < m) m = d;
  }
  return m;
}

void lap5_row_(const double* mid, const double* up, const double* dn,
               double inv_h2, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double horiz = mid[i - 1] + mid[i + 1];
    double vert = up[i] + dn[i];
    out[i] = ((horiz + vert) - 4.0 * mid[i]) * inv_h2;
  }
}

void diff2_row_(const double* mid, double inv_h2, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = ((mid[i - 1] + mid[i + 1]) - 2.0 * mid[i]) * inv_h2;
}

void heat_step_row_(const double* u, const double* lap, const double* coef,
                    const double* src, double dt, double* out, std::size_t n) {
  if (src) {
    for (std::size_t i = 0; i < n; ++i)
      out[i] = u[i] + dt * (coef[i] * lap[i] + src[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i)
      out[i] = u[i] + dt * (coef[i] * lap[i]);
  }
}

void weighted_diff_row_(const double* wgt, const double* u, double c,
                        const double* lap, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = wgt[i] * u[i] - c * lap[i];
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {axpby_,    dot_,       reduce_max_,
                          reduce_min_, max_abs_, max_ratio_,
                          min_diff_, lap5_row_,  diff2_row_,
                          heat_step_row_, weighted_diff_row_};
  return ops;
}

}  // namespace gradlab::kernels::detail

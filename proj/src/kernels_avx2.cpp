#include <immintrin.h>

#include <cstddef>
#include <limits>

#include "gradlab/kernels.hpp"

// AVX2 kernels. No FMA and the same association as the scalar reference,
// so both backends agree bit for bit (see kernels.hpp).

namespace gradlab::kernels::detail {
namespace {

constexpr std::size_t kDotBlock = 1024;

inline double hsum_lanes(__m256d v) {
  // ((lane0 + lane2) + (lane1 + lane3)), matching the scalar accumulators
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d pair = _mm_add_pd(lo, hi);  // [l0+l2, l1+l3]
  return _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
}

void axpby_(double a, const double* x, double b, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d r = _mm256_add_pd(_mm256_mul_pd(va, vx), _mm256_mul_pd(vb, vy));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

double dot_block(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; n - i >= 4; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(vx, vy));
  }
  double s = hsum_lanes(acc);
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
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4)
      vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    __m128d lo = _mm256_castpd256_pd128(vm);
    __m128d hi = _mm256_extractf128_pd(vm, 1);
    __m128d p = _mm_max_pd(lo, hi);
    m = _mm_cvtsd_f64(_mm_max_sd(p, _mm_unpackhi_pd(p, p)));
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double reduce_min_(const double* x, std::size_t n) {
  double m = x[0];
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4)
      vm = _mm256_min_pd(vm, _mm256_loadu_pd(x + i));
    __m128d lo = _mm256_castpd256_pd128(vm);
    __m128d hi = _mm256_extractf128_pd(vm, 1);
    __m128d p = _mm_min_pd(lo, hi);
    m = _mm_cvtsd_f64(_mm_min_sd(p, _mm_unpackhi_pd(p, p)));
  }
  for (; i < n; ++i)
    if (x[i] < m) m = x[i];
  return m;
}

double max_abs_(const double* x, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d vm = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(x + i));
    vm = _mm256_max_pd(vm, v);
  }
  __m128d lo = _mm256_castpd256_pd128(vm);
  __m128d hi = _mm256_extractf128_pd(vm, 1);
  __m128d p = _mm_max_pd(lo, hi);
  double m = _mm_cvtsd_f64(_mm_max_sd(p, _mm_unpackhi_pd(p, p)));
  for (; i < n; ++i) {
    double a = x[i] < 0 ? -x[i] : x[i];
    if (a > m) m = a;
  }
  return m;
}

double max_ratio_(const double* num, const double* den, std::size_t n) {
  __m256d vm = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_div_pd(_mm256_loadu_pd(num + i),
                              _mm256_loadu_pd(den + i));
    vm = _mm256_max_pd(vm, r);
  }
  __m128d lo = _mm256_castpd256_pd128(vm);
  __m128d hi = _mm256_extractf128_pd(vm, 1);
  __m128d p = _mm_max_pd(lo, hi);
  double m = _mm_cvtsd_f64(_mm_max_sd(p, _mm_unpackhi_pd(p, p)));
  for (; i < n; ++i) {
    double r = num[i] / den[i];
    if (r > m) m = r;
  }
  return m;
}

double min_diff_(const double* a, const double* b, std::size_t n) {
  __m256d vm = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    vm = _mm256_min_pd(vm, d);
  }
  __m128d lo = _mm256_castpd256_pd128(vm);
  __m128d hi = _mm256_extractf128_pd(vm, 1);
  __m128d p = _mm_min_pd(lo, hi);
  double m = _mm_cvtsd_f64(_mm_min_sd(p, _mm_unpackhi_pd(p, p)));
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    if (d < m) m = d;
  }
  return m;
}

void lap5_row_(const double* mid, const double* up, const double* dn,
               double inv_h2, double* out, std::size_t n) {
  const __m256d four = _mm256_set1_pd(4.0);
  const __m256d vih2 = _mm256_set1_pd(inv_h2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d horiz = _mm256_add_pd(_mm256_loadu_pd(mid + i - 1),
                                  _mm256_loadu_pd(mid + i + 1));
    __m256d vert = _mm256_add_pd(_mm256_loadu_pd(up + i),
                                 _mm256_loadu_pd(dn + i));
    __m256d c4 = _mm256_mul_pd(four, _mm256_loadu_pd(mid + i));
    __m256d r = _mm256_mul_pd(_mm256_sub_pd(_mm256_add_pd(horiz, vert), c4),
                              vih2);
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) {
    double horiz = mid[i - 1] + mid[i + 1];
    double vert = up[i] + dn[i];
    out[i] = ((horiz + vert) - 4.0 * mid[i]) * inv_h2;
  }
}

void diff2_row_(const double* mid, double inv_h2, double* out, std::size_t n) {
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d vih2 = _mm256_set1_pd(inv_h2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d s = _mm256_add_pd(_mm256_loadu_pd(mid + i - 1),
                              _mm256_loadu_pd(mid + i + 1));
    __m256d c2 = _mm256_mul_pd(two, _mm256_loadu_pd(mid + i));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_sub_pd(s, c2), vih2));
  }
  for (; i < n; ++i)
    out[i] = ((mid[i - 1] + mid[i + 1]) - 2.0 * mid[i]) * inv_h2;
}

void heat_step_row_(const double* u, const double* lap, const double* coef,
                    const double* src, double dt, double* out, std::size_t n) {
  const __m256d vdt = _mm256_set1_pd(dt);
  std::size_t i = 0;
  if (src) {
    for (; i + 4 <= n; i += 4) {
      __m256d cl = _mm256_mul_pd(_mm256_loadu_pd(coef + i),
                                 _mm256_loadu_pd(lap + i));
      __m256d rate = _mm256_add_pd(cl, _mm256_loadu_pd(src + i));
      __m256d r = _mm256_add_pd(_mm256_loadu_pd(u + i),
                                _mm256_mul_pd(vdt, rate));
      _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] = u[i] + dt * (coef[i] * lap[i] + src[i]);
  } else {
    for (; i + 4 <= n; i += 4) {
      __m256d cl = _mm256_mul_pd(_mm256_loadu_pd(coef + i),
                                 _mm256_loadu_pd(lap + i));
      __m256d r = _mm256_add_pd(_mm256_loadu_pd(u + i),
                                _mm256_mul_pd(vdt, cl));
      _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] = u[i] + dt * (coef[i] * lap[i]);
  }
}

void weighted_diff_row_(const double* wgt, const double* u, double c,
                        const double* lap, double* out, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d wu = _mm256_mul_pd(_mm256_loadu_pd(wgt + i),
                               _mm256_loadu_pd(u + i));
    __m256d cl = _mm256_mul_pd(vc, _mm256_loadu_pd(lap + i));
    _mm256_storeu_pd(out + i, _mm256_sub_pd(wu, cl));
  }
  for (; i < n; ++i) out[i] = wgt[i] * u[i] - c * lap[i];
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops = {axpby_,    dot_,       reduce_max_,
                          reduce_min_, max_abs_, max_ratio_,
                          min_diff_, lap5_row_,  diff2_row_,
                          heat_step_row_, weighted_diff_row_};
  return ops;
}

}  // namespace gradlab::kernels::detail

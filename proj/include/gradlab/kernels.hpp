#pragma once

#include <cstddef>

// Array kernels backing the grid inner loops: stencil sweeps, time-step
// updates and the min/max reductions used by the estimate checks.
//
// Every kernel exists as a scalar reference implementation plus an AVX2
// variant (x86-64). The active variant is chosen at runtime from CPUID;
// the scalar path is written with the same operation order as the vector
// path (no FMA, lane-compatible accumulators in dot), so both backends
// produce bit-identical results and the equivalence tests can assert
// exact equality.

namespace gradlab::kernels {

enum class Backend { Auto, Scalar, Avx2 };

// Selects the backend. Auto picks AVX2 when the CPU supports it.
// Throws InvalidArgument if Avx2 is requested but unavailable.
void set_backend(Backend b);
Backend active_backend();
const char* backend_name();
bool avx2_available();

// y[i] = a*x[i] + b*y[i]
void axpby(double a, const double* x, double b, double* y, std::size_t n);

// Lane-order-fixed dot product (blocked, 4 accumulators). Deterministic
// and identical across backends.
double dot(const double* x, const double* y, std::size_t n);

// Reductions. Inputs must be NaN-free; n >= 1 for max/min.
double reduce_max(const double* x, std::size_t n);
double reduce_min(const double* x, std::size_t n);
double max_abs(const double* x, std::size_t n);  // 0 for n == 0

// max over i of num[i]/den[i]; den[i] > 0 (+inf allowed). -inf for n == 0.
double max_ratio(const double* num, const double* den, std::size_t n);
// min over i of a[i]-b[i]. +inf for n == 0.
double min_diff(const double* a, const double* b, std::size_t n);

// Five-point Laplacian along a row segment:
//   out[i] = ((mid[i-1]+mid[i+1]) + (up[i]+dn[i]) - 4*mid[i]) * inv_h2
// mid must have one valid halo element on each side of [0, n).
void lap5_row(const double* mid, const double* up, const double* dn,
              double inv_h2, double* out, std::size_t n);

// Second difference along a row segment (1-D stencils):
//   out[i] = (mid[i-1] - 2*mid[i] + mid[i+1]) * inv_h2
void diff2_row(const double* mid, double inv_h2, double* out, std::size_t n);

// Forward-Euler update: out[i] = u[i] + dt*(coef[i]*lap[i] + src[i]);
// src may be null (treated as zero).
void heat_step_row(const double* u, const double* lap, const double* coef,
                   const double* src, double dt, double* out, std::size_t n);

// out[i] = wgt[i]*u[i] - c*lap[i]   (Crank-Nicolson operator rows)
void weighted_diff_row(const double* wgt, const double* u, double c,
                       const double* lap, double* out, std::size_t n);

namespace detail {

struct Ops {
  void (*axpby)(double, const double*, double, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*reduce_max)(const double*, std::size_t);
  double (*reduce_min)(const double*, std::size_t);
  double (*max_abs)(const double*, std::size_t);
  double (*max_ratio)(const double*, const double*, std::size_t);
  double (*min_diff)(const double*, const double*, std::size_t);
  void (*lap5_row)(const double*, const double*, const double*, double,
                   double*, std::size_t);
  void (*diff2_row)(const double*, double, double*, std::size_t);
  void (*heat_step_row)(const double*, const double*, const double*,
                        const double*, double, double*, std::size_t);
  void (*weighted_diff_row)(const double*, const double*, double,
                            const double*, double*, std::size_t);
};

const Ops& scalar_ops();
#if defined(GRADLAB_AVX2_TU)
const Ops& avx2_ops();
#endif

}  // namespace detail

}  // namespace gradlab::kernels

#include "gradlab/kernels.hpp"

#include <atomic>

#include "gradlab/errors.hpp"

namespace gradlab::kernels {
namespace {

using detail::Ops;

std::atomic<const Ops*> g_ops{nullptr};
std::atomic<Backend> g_backend{Backend::Auto};

const Ops* resolve(Backend b) {
#if defined(GRADLAB_AVX2_TU)
  if (b == Backend::Auto) return avx2_available() ? &detail::avx2_ops()
                                                  : &detail::scalar_ops();
  if (b == Backend::Avx2) {
    if (!avx2_available())
      throw InvalidArgument("kernels: AVX2 backend requested but unsupported");
    return &detail::avx2_ops();
  }
#else
  if (b == Backend::Avx2)
    throw InvalidArgument("kernels: AVX2 backend not compiled in");
#endif
  return &detail::scalar_ops();
}

const Ops& ops() {
  const Ops* p = g_ops.load(std::memory_order_acquire);
  if (!p) {
    p = resolve(g_backend.load());
    g_ops.store(p, std::memory_order_release);
  }
  return *p;
}

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

void set_backend(Backend b) {
  const Ops* p = resolve(b);
  g_backend.store(b);
  g_ops.store(p, std::memory_order_release);
}

Backend active_backend() {
  const Ops& o = ops();
#if defined(GRADLAB_AVX2_TU)
  if (&o == &detail::avx2_ops()) return Backend::Avx2;
#endif
  (void)o;
  return Backend::Scalar;
}

const char* backend_name() {
  return active_backend() == Backend::Avx2 ? "avx2" : "scalar";
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
  ops().axpby(a, x, b, y, n);
}
double dot(const double* x, const double* y, std::size_t n) {
  return ops().dot(x, y, n);
}
double reduce_max(const double* x, std::size_t n) {
  return ops().reduce_max(x, n);
}
double reduce_min(const double* x, std::size_t n) {
  return ops().reduce_min(x, n);
}
double max_abs(const double* x, std::size_t n) { return ops().max_abs(x, n); }
double max_ratio(const double* num, const double* den, std::size_t n) {
  return ops().max_ratio(num, den, n);
}
double min_diff(const double* a, const double* b, std::size_t n) {
  return ops().min_diff(a, b, n);
}
void lap5_row(const double* mid, const double* up, const double* dn,
              double inv_h2, double* out, std::size_t n) {
  ops().lap5_row(mid, up, dn, inv_h2, out, n);
}
void diff2_row(const double* mid, double inv_h2, double* out, std::size_t n) {
  ops().diff2_row(mid, inv_h2, out, n);
}
void heat_step_row(const double* u, const double* lap, const double* coef,
                   const double* src, double dt, double* out, std::size_t n) {
  ops().heat_step_row(u, lap, coef, src, dt, out, n);
}
void weighted_diff_row(const double* wgt, const double* u, double c,
                       const double* lap, double* out, std::size_t n) {
  ops().weighted_diff_row(wgt, u, c, lap, out, n);
}

}  // namespace gradlab::kernels

#include "steklab/kernels.hpp"

// NEON variants for aarch64. NEON is baseline on aarch64, so supported() is
// unconditional there; gathers have no NEON analogue worth the shuffle cost,
// hence row_dot stays scalar.

#if defined(STEKLAB_BUILD_NEON) && defined(__aarch64__)

#include <arm_neon.h>

namespace steklab::kernels::neon {

bool supported() { return true; }

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(acc0) + vaddvq_f64(acc1);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vy = vld1q_f64(y + i);
    vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
    vst1q_f64(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpby(const double* x, double b, double* y, std::size_t n) {
  const float64x2_t vb = vdupq_n_f64(b);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vy = vld1q_f64(y + i);
    vy = vfmaq_f64(vld1q_f64(x + i), vb, vy);
    vst1q_f64(y + i, vy);
  }
  for (; i < n; ++i) y[i] = x[i] + b * y[i];
}

double row_dot(const double* vals, const std::int32_t* col, std::size_t nnz, const double* x) {
  double s = 0.0;
  for (std::size_t j = 0; j < nnz; ++j) s += vals[j] * x[col[j]];
  return s;
}

}  // namespace steklab::kernels::neon

#endif

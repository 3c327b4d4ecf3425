#include "steklab/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace steklab::kernels {

// ===========================================================================
// Scalar reference implementations
// ===========================================================================

namespace scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpby(const double* x, double b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + b * y[i];
}

double row_dot(const double* vals, const std::int32_t* col, std::size_t nnz, const double* x) {
  double s = 0.0;
  for (std::size_t j = 0; j < nnz; ++j) s += vals[j] * x[col[j]];
  return s;
}

}  // namespace scalar

// ===========================================================================
// Dispatch
// ===========================================================================

namespace {

constexpr Ops kScalarOps{scalar::dot, scalar::axpy, scalar::xpby, scalar::row_dot, Backend::Scalar};

#if defined(STEKLAB_BUILD_AVX2)
constexpr Ops kAvx2Ops{avx2::dot, avx2::axpy, avx2::xpby, avx2::row_dot, Backend::Avx2};
#endif
#if defined(STEKLAB_BUILD_NEON)
constexpr Ops kNeonOps{neon::dot, neon::axpy, neon::xpby, neon::row_dot, Backend::Neon};
#endif

const Ops* backend_table(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return &kScalarOps;
    case Backend::Avx2:
#if defined(STEKLAB_BUILD_AVX2)
      if (avx2::supported()) return &kAvx2Ops;
#endif
      return nullptr;
    case Backend::Neon:
#if defined(STEKLAB_BUILD_NEON)
      if (neon::supported()) return &kNeonOps;
#endif
      return nullptr;
  }
  return nullptr;
}

const Ops* detect() {
  if (const char* env = std::getenv("STEKLAB_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &kScalarOps;
    if (std::strcmp(env, "avx2") == 0) {
      if (const Ops* t = backend_table(Backend::Avx2)) return t;
    }
    if (std::strcmp(env, "neon") == 0) {
      if (const Ops* t = backend_table(Backend::Neon)) return t;
    }
    // Unknown or unavailable request in the environment: fall through to auto.
  }
#if defined(STEKLAB_BUILD_AVX2)
  if (avx2::supported()) return &kAvx2Ops;
#endif
#if defined(STEKLAB_BUILD_NEON)
  if (neon::supported()) return &kNeonOps;
#endif
  return &kScalarOps;
}

std::atomic<const Ops*> g_ops{nullptr};

}  // namespace

const Ops& ops() {
  const Ops* t = g_ops.load(std::memory_order_acquire);
  if (!t) {
    t = detect();
    g_ops.store(t, std::memory_order_release);
  }
  return *t;
}

bool force_backend(Backend b) {
  const Ops* t = backend_table(b);
  if (!t) return false;
  g_ops.store(t, std::memory_order_release);
  return true;
}

void reset_backend() { g_ops.store(detect(), std::memory_order_release); }

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "?";
}

Backend active_backend() { return ops().backend; }

}  // namespace steklab::kernels

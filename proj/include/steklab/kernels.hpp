#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

// Low-level dense/sparse vector kernels with scalar reference implementations
// and SIMD variants selected at runtime. Everything above this layer calls the
// dispatch table only, so results are backend-consistent by construction and
// the backends can be equivalence-tested against each other directly.

namespace steklab::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct Ops {
  // sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y[i] = x[i] + b*y[i]  (xpby; the CG update shape)
  void (*xpby)(const double* x, double b, double* y, std::size_t n);
  // sparse row dot: sum_j vals[j]*x[col[j]]
  double (*row_dot)(const double* vals, const std::int32_t* col, std::size_t nnz, const double* x);
  Backend backend;
};

// Active dispatch table. Resolved once on first use: picks the widest backend
// the CPU supports unless the STEKLAB_KERNELS environment variable ("scalar",
// "avx2", "neon") or force_backend() overrides it.
const Ops& ops();

// Returns false if the requested backend is unavailable on this CPU/build.
bool force_backend(Backend b);
void reset_backend();  // back to auto-detection

const char* backend_name(Backend b);
Backend active_backend();

// Reference implementations, always available (used by equivalence tests).
namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void xpby(const double* x, double b, double* y, std::size_t n);
double row_dot(const double* vals, const std::int32_t* col, std::size_t nnz, const double* x);
}  // namespace scalar

#if defined(STEKLAB_BUILD_AVX2)
namespace avx2 {
bool supported();
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void xpby(const double* x, double b, double* y, std::size_t n);
double row_dot(const double* vals, const std::int32_t* col, std::size_t nnz, const double* x);
}  // namespace avx2
#endif

#if defined(STEKLAB_BUILD_NEON)
namespace neon {
bool supported();
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void xpby(const double* x, double b, double* y, std::size_t n);
double row_dot(const double* vals, const std::int32_t* col, std::size_t nnz, const double* x);
}  // namespace neon
#endif

}  // namespace steklab::kernels

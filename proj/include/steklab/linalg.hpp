#pragma once

// Sparse symmetric linear algebra used by the FEM layer: CSR storage, an
// incomplete-Cholesky preconditioner, and conjugate gradients running on the
// runtime-dispatched vector kernels. Dense/Eigen bridges live here too so
// tests can cross-check against dense factorizations.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "steklab/core.hpp"

namespace steklab::linalg {

struct Triplet {
  std::int32_t r = 0;
  std::int32_t c = 0;
  double v = 0.0;
};

// Compressed sparse rows with 32-bit column indices (the gather kernels
// require them). Duplicate triplets are summed; columns are sorted per row.
class Csr {
 public:
  Csr() = default;
  static Csr from_triplets(std::int32_t n_rows, std::int32_t n_cols, std::vector<Triplet> t);

  std::int32_t rows() const { return n_rows_; }
  std::int32_t cols() const { return n_cols_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(vals_.size()); }

  // y = A x
  void mul(const double* x, double* y) const;
  std::vector<double> mul(const std::vector<double>& x) const;
  // x^T (A y)
  double quad(const std::vector<double>& x, const std::vector<double>& y) const;

  double coeff(std::int32_t r, std::int32_t c) const;
  std::vector<double> diagonal() const;

  const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::int32_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& vals() const { return vals_; }

  // Entry-wise A + s B on the union pattern (shapes must match).
  static Csr add(const Csr& a, double s, const Csr& b);

 private:
  std::int32_t n_rows_ = 0;
  std::int32_t n_cols_ = 0;
  std::vector<std::int64_t> row_ptr_{0};
  std::vector<std::int32_t> col_idx_;
  std::vector<double> vals_;
};

// Zero-fill incomplete Cholesky of an SPD matrix. If a pivot fails, the
// diagonal is scaled up progressively and the factorization retried; the
// shift actually used is reported.
class Ic0 {
 public:
  explicit Ic0(const Csr& a);
  // z = (L L^T)^{-1} r
  void solve(const double* r, double* z) const;
  double shift_used() const { return shift_used_; }

 private:
  bool factor(const Csr& a, double shift);
  std::int32_t n_ = 0;
  std::vector<std::int64_t> row_ptr_;
  std::vector<std::int32_t> col_idx_;
  std::vector<double> vals_;       // strictly lower triangle, rows sorted
  std::vector<double> diag_;       // Cholesky diagonal
  double shift_used_ = 0.0;
};

struct CgResult {
  int iters = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

// Preconditioned conjugate gradients for SPD (or SPSD with constant kernel)
// systems. `precond` may be null. With `project_out_mean` the right-hand
// side, the preconditioned residuals and the iterate are kept orthogonal to
// the constant vector, which solves singular stiffness systems on their
// mean-zero complement.
CgResult pcg(const Csr& a, const std::vector<double>& b, std::vector<double>& x,
             const Ic0* precond, double tol, int max_iters, bool project_out_mean = false);

// Convenience wrapper: IC(0)-preconditioned solve from a zero start, throwing
// a Numeric error if unconverged.
std::vector<double> solve_spd(const Csr& a, const std::vector<double>& b, double tol = 1e-12,
                              bool project_out_mean = false);

double norm2(const std::vector<double>& v);
double dotv(const std::vector<double>& a, const std::vector<double>& b);
void remove_mean(std::vector<double>& v);

Eigen::MatrixXd to_dense(const Csr& a);
Eigen::SparseMatrix<double> to_eigen(const Csr& a);

}  // namespace steklab::linalg

#include "steklab/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "steklab/kernels.hpp"

namespace steklab::linalg {

// === CSR ===

Csr Csr::from_triplets(std::int32_t n_rows, std::int32_t n_cols, std::vector<Triplet> t) {
  require(n_rows >= 0 && n_cols >= 0, ErrorKind::Usage, "csr: negative shape");
  for (const Triplet& e : t) {
    require(e.r >= 0 && e.r < n_rows && e.c >= 0 && e.c < n_cols, ErrorKind::Usage,
            "csr: triplet out of range");
  }
  std::stable_sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.r != b.r ? a.r < b.r : a.c < b.c;
  });

  Csr m;
  m.n_rows_ = n_rows;
  m.n_cols_ = n_cols;
  m.row_ptr_.assign(static_cast<std::size_t>(n_rows) + 1, 0);
  m.col_idx_.reserve(t.size());
  m.vals_.reserve(t.size());
  std::size_t i = 0;
  for (std::int32_t r = 0; r < n_rows; ++r) {
    while (i < t.size() && t[i].r == r) {
      std::int32_t c = t[i].c;
      double v = 0.0;
      while (i < t.size() && t[i].r == r && t[i].c == c) v += t[i++].v;
      m.col_idx_.push_back(c);
      m.vals_.push_back(v);
    }
    m.row_ptr_[static_cast<std::size_t>(r) + 1] = static_cast<std::int64_t>(m.col_idx_.size());
  }
  return m;
}

void Csr::mul(const double* x, double* y) const {
  const auto& k = kernels::ops();
  for (std::int32_t r = 0; r < n_rows_; ++r) {
    const std::int64_t b = row_ptr_[r], e = row_ptr_[static_cast<std::size_t>(r) + 1];
    y[r] = k.row_dot(vals_.data() + b, col_idx_.data() + b, static_cast<std::size_t>(e - b), x);
  }
}

std::vector<double> Csr::mul(const std::vector<double>& x) const {
  require(static_cast<std::int32_t>(x.size()) == n_cols_, ErrorKind::Usage, "csr: mul size mismatch");
  std::vector<double> y(static_cast<std::size_t>(n_rows_));
  mul(x.data(), y.data());
  return y;
}

double Csr::quad(const std::vector<double>& x, const std::vector<double>& y) const {
  require(static_cast<std::int32_t>(x.size()) == n_rows_, ErrorKind::Usage, "csr: quad size mismatch");
  std::vector<double> ay = mul(y);
  return dotv(x, ay);
}

double Csr::coeff(std::int32_t r, std::int32_t c) const {
  require(r >= 0 && r < n_rows_ && c >= 0 && c < n_cols_, ErrorKind::Usage, "csr: coeff out of range");
  const std::int64_t b = row_ptr_[r], e = row_ptr_[static_cast<std::size_t>(r) + 1];
  const auto first = col_idx_.begin() + b, last = col_idx_.begin() + e;
  auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return 0.0;
  return vals_[static_cast<std::size_t>(it - col_idx_.begin())];
}

std::vector<double> Csr::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(std::min(n_rows_, n_cols_)), 0.0);
  for (std::size_t r = 0; r < d.size(); ++r) d[r] = coeff(static_cast<std::int32_t>(r), static_cast<std::int32_t>(r));
  return d;
}

Csr Csr::add(const Csr& a, double s, const Csr& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Usage, "csr: add shape mismatch");
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nnz() + b.nnz()));
  for (std::int32_t r = 0; r < a.rows(); ++r) {
    for (std::int64_t i = a.row_ptr_[r]; i < a.row_ptr_[static_cast<std::size_t>(r) + 1]; ++i)
      t.push_back({r, a.col_idx_[static_cast<std::size_t>(i)], a.vals_[static_cast<std::size_t>(i)]});
    for (std::int64_t i = b.row_ptr_[r]; i < b.row_ptr_[static_cast<std::size_t>(r) + 1]; ++i)
      t.push_back({r, b.col_idx_[static_cast<std::size_t>(i)], s * b.vals_[static_cast<std::size_t>(i)]});
  }
  return from_triplets(a.rows(), a.cols(), std::move(t));
}

// === IC(0) ===

Ic0::Ic0(const Csr& a) {
  require(a.rows() == a.cols(), ErrorKind::Usage, "ic0: matrix not square");
  n_ = a.rows();
  double shift = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    if (factor(a, shift)) {
      shift_used_ = shift;
      return;
    }
    shift = (shift == 0.0) ? 1e-10 : shift * 100.0;
  }
  fail(ErrorKind::Numeric, "ic0: factorization failed at every diagonal shift");
}

bool Ic0::factor(const Csr& a, double shift) {
  // Strictly-lower pattern of A, rows sorted (inherited from CSR order).
  row_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);
  col_idx_.clear();
  vals_.clear();
  diag_.assign(static_cast<std::size_t>(n_), 0.0);
  std::vector<double> adiag(static_cast<std::size_t>(n_), 0.0);
  for (std::int32_t r = 0; r < n_; ++r) {
    for (std::int64_t i = a.row_ptr()[r]; i < a.row_ptr()[static_cast<std::size_t>(r) + 1]; ++i) {
      const std::int32_t c = a.col_idx()[static_cast<std::size_t>(i)];
      const double v = a.vals()[static_cast<std::size_t>(i)];
      if (c < r) {
        col_idx_.push_back(c);
        vals_.push_back(v);
      } else if (c == r) {
        adiag[static_cast<std::size_t>(r)] = v;
      }
    }
    row_ptr_[static_cast<std::size_t>(r) + 1] = static_cast<std::int64_t>(col_idx_.size());
  }

  for (std::int32_t i = 0; i < n_; ++i) {
    const std::int64_t ib = row_ptr_[i], ie = row_ptr_[static_cast<std::size_t>(i) + 1];
    for (std::int64_t p = ib; p < ie; ++p) {
      const std::int32_t k = col_idx_[static_cast<std::size_t>(p)];
      double s = vals_[static_cast<std::size_t>(p)];
      // Merge row i (entries before p) with row k over common columns < k.
      std::int64_t pi = ib, pk = row_ptr_[k];
      const std::int64_t ke = row_ptr_[static_cast<std::size_t>(k) + 1];
      while (pi < p && pk < ke) {
        const std::int32_t ci = col_idx_[static_cast<std::size_t>(pi)];
        const std::int32_t ck = col_idx_[static_cast<std::size_t>(pk)];
        if (ci == ck) {
          s -= vals_[static_cast<std::size_t>(pi)] * vals_[static_cast<std::size_t>(pk)];
          ++pi;
          ++pk;
        } else if (ci < ck) {
          ++pi;
        } else {
          ++pk;
        }
      }
      vals_[static_cast<std::size_t>(p)] = s / diag_[static_cast<std::size_t>(k)];
    }
    double s = adiag[static_cast<std::size_t>(i)] * (1.0 + shift);
    for (std::int64_t p = ib; p < ie; ++p) s -= vals_[static_cast<std::size_t>(p)] * vals_[static_cast<std::size_t>(p)];
    if (!(s > 0.0) || !std::isfinite(s)) return false;
    diag_[static_cast<std::size_t>(i)] = std::sqrt(s);
  }
  return true;
}

void Ic0::solve(const double* r, double* z) const {
  const auto& k = kernels::ops();
  // Forward: L w = r, using the strictly-lower rows.
  for (std::int32_t i = 0; i < n_; ++i) {
    const std::int64_t b = row_ptr_[i], e = row_ptr_[static_cast<std::size_t>(i) + 1];
    const double s = k.row_dot(vals_.data() + b, col_idx_.data() + b, static_cast<std::size_t>(e - b), z);
    z[i] = (r[i] - s) / diag_[static_cast<std::size_t>(i)];
  }
  // Backward: L^T z = w, saxpy form.
  for (std::int32_t i = n_ - 1; i >= 0; --i) {
    z[i] /= diag_[static_cast<std::size_t>(i)];
    const std::int64_t b = row_ptr_[i], e = row_ptr_[static_cast<std::size_t>(i) + 1];
    for (std::int64_t p = b; p < e; ++p)
      z[col_idx_[static_cast<std::size_t>(p)]] -= vals_[static_cast<std::size_t>(p)] * z[i];
  }
}

// === PCG ===

double norm2(const std::vector<double>& v) {
  return std::sqrt(kernels::ops().dot(v.data(), v.data(), v.size()));
}

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), ErrorKind::Usage, "dotv: size mismatch");
  return kernels::ops().dot(a.data(), b.data(), a.size());
}

void remove_mean(std::vector<double>& v) {
  if (v.empty()) return;
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / static_cast<double>(v.size());
  for (double& x : v) x -= m;
}

CgResult pcg(const Csr& a, const std::vector<double>& b, std::vector<double>& x,
             const Ic0* precond, double tol, int max_iters, bool project_out_mean) {
  require(a.rows() == a.cols(), ErrorKind::Usage, "pcg: matrix not square");
  const std::size_t n = static_cast<std::size_t>(a.rows());
  require(b.size() == n, ErrorKind::Usage, "pcg: rhs size mismatch");
  const auto& k = kernels::ops();

  std::vector<double> rhs = b;
  if (project_out_mean) remove_mean(rhs);
  if (x.size() != n) x.assign(n, 0.0);
  if (project_out_mean) remove_mean(x);

  const double bnorm = norm2(rhs);
  CgResult res;
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    res.converged = true;
    return res;
  }

  std::vector<double> r(n), z(n), p(n), ap(n);
  a.mul(x.data(), r.data());
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
  auto apply_precond = [&]() {
    if (precond)
      precond->solve(r.data(), z.data());
    else
      z = r;
    if (project_out_mean) remove_mean(z);
  };
  apply_precond();
  p = z;
  double rz = k.dot(r.data(), z.data(), n);

  for (int it = 0; it < max_iters; ++it) {
    a.mul(p.data(), ap.data());
    const double pap = k.dot(p.data(), ap.data(), n);
    if (!(pap > 0.0) || !std::isfinite(pap)) {
      res.iters = it;
      res.rel_residual = norm2(r) / bnorm;
      res.converged = false;
      return res;
    }
    const double alpha = rz / pap;
    k.axpy(alpha, p.data(), x.data(), n);
    k.axpy(-alpha, ap.data(), r.data(), n);
    res.iters = it + 1;
    res.rel_residual = norm2(r) / bnorm;
    if (res.rel_residual <= tol) {
      res.converged = true;
      if (project_out_mean) remove_mean(x);
      return res;
    }
    apply_precond();
    const double rz_new = k.dot(r.data(), z.data(), n);
    const double beta = rz_new / rz;
    rz = rz_new;
    k.xpby(z.data(), beta, p.data(), n);
  }
  return res;
}

std::vector<double> solve_spd(const Csr& a, const std::vector<double>& b, double tol,
                              bool project_out_mean) {
  Ic0 pre(a);
  std::vector<double> x;
  const int max_iters = std::max(2000, 40 * a.rows() / 100);
  CgResult r = pcg(a, b, x, &pre, tol, max_iters, project_out_mean);
  if (!r.converged)
    fail(ErrorKind::Numeric, "solve_spd: cg stalled at relative residual " + fmt17(r.rel_residual));
  return x;
}

// === Eigen bridges ===

Eigen::MatrixXd to_dense(const Csr& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (std::int32_t r = 0; r < a.rows(); ++r)
    for (std::int64_t i = a.row_ptr()[r]; i < a.row_ptr()[static_cast<std::size_t>(r) + 1]; ++i)
      m(r, a.col_idx()[static_cast<std::size_t>(i)]) = a.vals()[static_cast<std::size_t>(i)];
  return m;
}

Eigen::SparseMatrix<double> to_eigen(const Csr& a) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(a.nnz()));
  for (std::int32_t r = 0; r < a.rows(); ++r)
    for (std::int64_t i = a.row_ptr()[r]; i < a.row_ptr()[static_cast<std::size_t>(r) + 1]; ++i)
      t.emplace_back(r, a.col_idx()[static_cast<std::size_t>(i)], a.vals()[static_cast<std::size_t>(i)]);
  Eigen::SparseMatrix<double> m(a.rows(), a.cols());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace steklab::linalg

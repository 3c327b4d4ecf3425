#include "steklab/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

namespace steklab::fem {

using linalg::Csr;
using linalg::Triplet;
using mesh::TriMesh;

NodalMeasure NodalMeasure::from_weights(std::vector<double> weights) {
  NodalMeasure b;
  for (double w : weights)
    require(w >= 0.0 && std::isfinite(w), ErrorKind::Domain, "measure weights must be nonnegative");
  b.w = std::move(weights);
  b.total = std::accumulate(b.w.begin(), b.w.end(), 0.0);
  return b;
}

// === assembly ==============================================================

linalg::Csr stiffness_matrix(const TriMesh& m) {
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(m.nt()) * 12);
  for (int t = 0; t < m.nt(); ++t) {
    const auto c = m.corners(t);
    const double area = 0.5 * norm(cross(c[1] - c[0], c[2] - c[0]));
    require(area > 1e-14, ErrorKind::Meshing,
            "degenerate triangle " + std::to_string(t) + " in stiffness assembly");
    for (int a = 0; a < 3; ++a) {
      const int i = m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>((a + 1) % 3)];
      const int j = m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>((a + 2) % 3)];
      const Vec3 u = c[static_cast<std::size_t>((a + 1) % 3)] - c[static_cast<std::size_t>(a)];
      const Vec3 w = c[static_cast<std::size_t>((a + 2) % 3)] - c[static_cast<std::size_t>(a)];
      const double half_cot = 0.5 * dot(u, w) / (2.0 * area);
      trip.push_back({i, j, -half_cot});
      trip.push_back({j, i, -half_cot});
      trip.push_back({i, i, half_cot});
      trip.push_back({j, j, half_cot});
    }
  }
  return Csr::from_triplets(m.nv(), m.nv(), std::move(trip));
}

NodalMeasure area_measure(const TriMesh& m) {
  NodalMeasure b;
  b.w.assign(static_cast<std::size_t>(m.nv()), 0.0);
  for (int t = 0; t < m.nt(); ++t) {
    const double third = mesh::triangle_area(m, t) / 3.0;
    for (int e = 0; e < 3; ++e)
      b.w[static_cast<std::size_t>(m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)])] += third;
  }
  b.total = std::accumulate(b.w.begin(), b.w.end(), 0.0);
  return b;
}

NodalMeasure area_measure(const TriMesh& m, const std::vector<double>& f) {
  require(static_cast<int>(f.size()) == m.nv(), ErrorKind::Usage,
          "area_measure: density sample count does not match vertex count");
  NodalMeasure bare = area_measure(m);
  for (std::size_t v = 0; v < f.size(); ++v) {
    require(std::isfinite(f[v]) && f[v] >= 0.0, ErrorKind::Domain,
            "area_measure: density sample negative or not finite at vertex " + std::to_string(v));
    bare.w[v] *= f[v];
  }
  bare.total = std::accumulate(bare.w.begin(), bare.w.end(), 0.0);
  return bare;
}

NodalMeasure boundary_measure(const TriMesh& m, const std::vector<double>& density) {
  require(!m.closed && m.n_holes() > 0, ErrorKind::Usage,
          "boundary_measure: mesh has no boundary");
  require(density.empty() || density.size() == static_cast<std::size_t>(m.nv()),
          ErrorKind::Usage, "boundary_measure: density size mismatch");
  auto rho = [&](int v) {
    return density.empty() ? 1.0 : density[static_cast<std::size_t>(v)];
  };
  NodalMeasure b;
  b.w.assign(static_cast<std::size_t>(m.nv()), 0.0);
  for (const auto& loop : m.loops) {
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int a = loop[i];
      const int c = loop[(i + 1) % loop.size()];
      const Vec3& pa = m.verts[static_cast<std::size_t>(a)];
      const Vec3& pc = m.verts[static_cast<std::size_t>(c)];
      double len;
      if (m.geom == mesh::MeshGeom::Torus) {
        const auto d = m.surf->torus_delta(surface::SurfacePoint{pa}, surface::SurfacePoint{pc});
        len = std::hypot(d[0], d[1]);
      } else {
        len = dist(pa, pc);
      }
      b.w[static_cast<std::size_t>(a)] += 0.5 * len * rho(a);
      b.w[static_cast<std::size_t>(c)] += 0.5 * len * rho(c);
    }
  }
  for (double w : b.w)
    require(w >= 0.0, ErrorKind::Domain, "boundary_measure: negative density weight");
  b.total = std::accumulate(b.w.begin(), b.w.end(), 0.0);
  return b;
}

// === interior Poisson solve ===============================================

PoissonSolution solve_poisson_dirichlet(const TriMesh& m, const std::vector<double>& f,
                                        double tol) {
  require(!m.closed && m.n_holes() > 0, ErrorKind::Usage,
          "solve_poisson_dirichlet: mesh has no boundary to pin");
  require(f.size() == static_cast<std::size_t>(m.nv()), ErrorKind::Usage,
          "solve_poisson_dirichlet: source size mismatch");

  const Csr k_full = stiffness_matrix(m);
  // Validates f >= 0 and finite; weights are the lumped integral of f.
  const std::vector<double> rhs_full = area_measure(m, f).w;

  std::vector<std::int32_t> to_interior(static_cast<std::size_t>(m.nv()), -1);
  std::vector<int> interior;
  for (int v = 0; v < m.nv(); ++v) {
    if (!m.on_boundary(v)) {
      to_interior[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(interior.size());
      interior.push_back(v);
    }
  }
  require(!interior.empty(), ErrorKind::Meshing, "solve_poisson_dirichlet: no interior vertices");

  std::vector<Triplet> trip;
  std::vector<double> rhs(interior.size());
  for (std::size_t ii = 0; ii < interior.size(); ++ii) {
    const int v = interior[ii];
    rhs[ii] = -rhs_full[static_cast<std::size_t>(v)];
    for (std::int64_t p = k_full.row_ptr()[static_cast<std::size_t>(v)];
         p < k_full.row_ptr()[static_cast<std::size_t>(v) + 1]; ++p) {
      const std::int32_t cj = to_interior[static_cast<std::size_t>(k_full.col_idx()[static_cast<std::size_t>(p)])];
      if (cj >= 0)
        trip.push_back({static_cast<std::int32_t>(ii), cj, k_full.vals()[static_cast<std::size_t>(p)]});
    }
  }
  const Csr k_int = Csr::from_triplets(static_cast<std::int32_t>(interior.size()),
                                       static_cast<std::int32_t>(interior.size()), std::move(trip));

  const linalg::Ic0 prec(k_int);
  std::vector<double> x(interior.size(), 0.0);
  const linalg::CgResult cg = linalg::pcg(k_int, rhs, x, &prec, tol, 20000);
  require(cg.converged, ErrorKind::Numeric,
          "solve_poisson_dirichlet: CG stalled at relative residual " + fmt17(cg.rel_residual));

  PoissonSolution sol;
  sol.psi.assign(static_cast<std::size_t>(m.nv()), 0.0);
  for (std::size_t ii = 0; ii < interior.size(); ++ii)
    sol.psi[static_cast<std::size_t>(interior[ii])] = x[ii];
  sol.residual_norm = cg.rel_residual * linalg::norm2(rhs);
  sol.iterations = cg.iters;

  const std::vector<double> k_psi = k_full.mul(sol.psi);
  sol.beta.assign(static_cast<std::size_t>(m.nv()), 0.0);
  for (int v = 0; v < m.nv(); ++v) {
    if (!m.on_boundary(v)) continue;
    sol.beta[static_cast<std::size_t>(v)] =
        k_psi[static_cast<std::size_t>(v)] + rhs_full[static_cast<std::size_t>(v)];
    sol.beta_total += sol.beta[static_cast<std::size_t>(v)];
  }
  return sol;
}

// === harmonic extension ====================================================

HarmonicExtension harmonic_extension(const TriMesh& closed, int n_domain,
                                     const std::vector<double>& values, double tol) {
  require(n_domain > 0 && n_domain < closed.nv(), ErrorKind::Usage,
          "harmonic_extension: domain vertex count out of range");
  require(values.size() == static_cast<std::size_t>(n_domain), ErrorKind::Usage,
          "harmonic_extension: boundary data size mismatch");

  const Csr k_full = stiffness_matrix(closed);
  const int nf = closed.nv() - n_domain;
  std::vector<Triplet> trip;
  std::vector<double> rhs(static_cast<std::size_t>(nf), 0.0);
  for (int r = n_domain; r < closed.nv(); ++r) {
    const std::int32_t ri = r - n_domain;
    for (std::int64_t p = k_full.row_ptr()[static_cast<std::size_t>(r)];
         p < k_full.row_ptr()[static_cast<std::size_t>(r) + 1]; ++p) {
      const std::int32_t c = k_full.col_idx()[static_cast<std::size_t>(p)];
      const double v = k_full.vals()[static_cast<std::size_t>(p)];
      if (c >= n_domain)
        trip.push_back({ri, c - n_domain, v});
      else
        rhs[static_cast<std::size_t>(ri)] -= v * values[static_cast<std::size_t>(c)];
    }
  }
  const Csr k_ff = Csr::from_triplets(nf, nf, std::move(trip));
  const linalg::Ic0 prec(k_ff);
  std::vector<double> u(static_cast<std::size_t>(nf), 0.0);
  const linalg::CgResult cg = linalg::pcg(k_ff, rhs, u, &prec, tol, 20000);
  require(cg.converged, ErrorKind::Numeric,
          "harmonic_extension: CG stalled at relative residual " + fmt17(cg.rel_residual));

  HarmonicExtension ext;
  ext.values = values;
  ext.values.insert(ext.values.end(), u.begin(), u.end());

  for (int t = 0; t < closed.nt(); ++t) {
    const auto c = closed.corners(t);
    const auto& tr = closed.tris[static_cast<std::size_t>(t)];
    const double area = 0.5 * norm(cross(c[1] - c[0], c[2] - c[0]));
    double e_t = 0.0;
    for (int a = 0; a < 3; ++a) {
      const Vec3 uu = c[static_cast<std::size_t>((a + 1) % 3)] - c[static_cast<std::size_t>(a)];
      const Vec3 ww = c[static_cast<std::size_t>((a + 2) % 3)] - c[static_cast<std::size_t>(a)];
      const double cot = dot(uu, ww) / (2.0 * area);
      const double dv = ext.values[static_cast<std::size_t>(tr[static_cast<std::size_t>((a + 1) % 3)])] -
                        ext.values[static_cast<std::size_t>(tr[static_cast<std::size_t>((a + 2) % 3)])];
      e_t += 0.5 * cot * dv * dv;
    }
    const bool filled = tr[0] >= n_domain || tr[1] >= n_domain || tr[2] >= n_domain;
    (filled ? ext.energy_inside : ext.energy_outside) += e_t;
  }
  return ext;
}

// === generalized eigensolver ===============================================

namespace {

double bdot(const std::vector<double>& w, const std::vector<double>& x,
            const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i] * y[i];
  return s;
}

}  // namespace

EigResult generalized_eigs(const linalg::Csr& k_mat, const NodalMeasure& b, int count,
                           std::uint64_t seed, double rel_tol) {
  const std::int32_t n = k_mat.rows();
  require(k_mat.cols() == n, ErrorKind::Usage, "generalized_eigs: matrix must be square");
  require(b.w.size() == static_cast<std::size_t>(n), ErrorKind::Usage,
          "generalized_eigs: measure size mismatch");
  require(count >= 1 && count < n, ErrorKind::Usage, "generalized_eigs: count out of range");
  require(b.total > 0.0, ErrorKind::Domain, "generalized_eigs: measure has no mass");

  double tr_k = 0.0;
  for (double d : k_mat.diagonal()) tr_k += d;
  require(tr_k > 0.0, ErrorKind::Domain, "generalized_eigs: zero stiffness trace");
  const double eps = 1e-8 * tr_k / b.total;

  std::vector<Triplet> btrip;
  btrip.reserve(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i) btrip.push_back({i, i, b.w[static_cast<std::size_t>(i)]});
  const Csr a_mat = Csr::add(k_mat, eps, Csr::from_triplets(n, n, std::move(btrip)));

  Eigen::SparseMatrix<double> ae = linalg::to_eigen(a_mat);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(ae);
  require(ldlt.info() == Eigen::Success, ErrorKind::Numeric,
          "generalized_eigs: shifted operator factorization failed");

  // Constant mode, B-normalized; every Krylov vector is kept B-orthogonal
  // to it so the exact zero eigenvalue never enters the tridiagonalization.
  const double cval = 1.0 / std::sqrt(b.total);
  std::vector<double> c0(static_cast<std::size_t>(n), cval);

  auto apply = [&](const std::vector<double>& x) {
    Eigen::VectorXd z(n);
    for (std::int32_t i = 0; i < n; ++i)
      z[i] = b.w[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    const Eigen::VectorXd y = ldlt.solve(z);
    return std::vector<double>(y.data(), y.data() + n);
  };
  auto deflate = [&](std::vector<double>& x) {
    const double p = bdot(b.w, c0, x);
    for (std::int32_t i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] -= p * cval;
  };

  const int m_dim = std::min<int>(n - 1, std::max(100, 6 * count + 40));
  std::vector<std::vector<double>> basis;
  basis.reserve(static_cast<std::size_t>(m_dim));
  std::vector<double> alpha, beta;  // tridiagonal entries

  std::mt19937_64 gen(mix_seed(seed, fnv1a(std::string("lanczos-start"))));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = unif(gen);
  v = apply(v);  // start inside the operator range
  deflate(v);
  {
    const double nb = std::sqrt(bdot(b.w, v, v));
    require(nb > 1e-300, ErrorKind::Numeric, "generalized_eigs: degenerate start vector");
    for (double& x : v) x /= nb;
  }

  for (int j = 0; j < m_dim; ++j) {
    basis.push_back(v);
    std::vector<double> w = apply(v);
    const double aj = bdot(b.w, w, v);
    alpha.push_back(aj);
    for (std::int32_t i = 0; i < n; ++i)
      w[static_cast<std::size_t>(i)] -= aj * v[static_cast<std::size_t>(i)];
    if (j > 0)
      for (std::int32_t i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] -= beta.back() * basis[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(i)];
    for (int pass = 0; pass < 2; ++pass) {
      deflate(w);
      for (const auto& q : basis) {
        const double p = bdot(b.w, q, w);
        for (std::int32_t i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] -= p * q[static_cast<std::size_t>(i)];
      }
    }
    const double bj = std::sqrt(std::max(0.0, bdot(b.w, w, w)));
    if (bj < 1e-13) break;  // Krylov space of the measure exhausted
    beta.push_back(bj);
    for (std::int32_t i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / bj;
  }

  // Krylov exhaustion means the pencil has fewer finite eigenvalues than
  // requested (the measure's support bounds the nonzero spectrum).
  const int mk = static_cast<int>(basis.size());
  require(mk >= count - 1, ErrorKind::Capacity,
          "generalized_eigs: requested count exceeds the pencil's available spectrum");

  Eigen::VectorXd diag(mk), sub(std::max(0, mk - 1));
  for (int i = 0; i < mk; ++i) diag[i] = alpha[static_cast<std::size_t>(i)];
  for (int i = 0; i + 1 < mk; ++i) sub[i] = beta[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  require(es.info() == Eigen::Success, ErrorKind::Numeric,
          "generalized_eigs: tridiagonal solve failed");

  EigResult out;
  out.zero_mode_flagged = true;
  out.eigenvalues.push_back(0.0);
  out.eigenvectors.push_back(c0);
  out.residuals.push_back(0.0);

  for (int r = 0; r < count - 1; ++r) {
    const int col = mk - 1 - r;  // Ritz values ascending; largest mu first
    require(col >= 0, ErrorKind::Numeric, "generalized_eigs: not enough Ritz pairs");
    const double mu = es.eigenvalues()[col];
    require(mu > 1e-300, ErrorKind::Numeric,
            "generalized_eigs: nonpositive Ritz value; Krylov space too small");
    const double lambda = 1.0 / mu - eps;
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < mk; ++i) {
      const double s = es.eigenvectors()(i, col);
      const auto& q = basis[static_cast<std::size_t>(i)];
      for (std::int32_t vv = 0; vv < n; ++vv) y[static_cast<std::size_t>(vv)] += s * q[static_cast<std::size_t>(vv)];
    }
    const double ynorm = std::sqrt(bdot(b.w, y, y));
    require(ynorm > 1e-300, ErrorKind::Numeric, "generalized_eigs: Ritz vector lost its mass");
    for (double& x : y) x /= ynorm;

    std::vector<double> ky = k_mat.mul(y);
    double rnum = 0.0, nky = 0.0, nby = 0.0;
    for (std::int32_t i = 0; i < n; ++i) {
      const double byi = b.w[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
      const double ri = ky[static_cast<std::size_t>(i)] - lambda * byi;
      rnum += ri * ri;
      nky += ky[static_cast<std::size_t>(i)] * ky[static_cast<std::size_t>(i)];
      nby += byi * byi;
    }
    const double scale = std::max({std::sqrt(nky), std::abs(lambda) * std::sqrt(nby), 1e-300});
    const double res = std::sqrt(rnum) / scale;
    require(res <= rel_tol, ErrorKind::Numeric,
            "generalized_eigs: eigenpair " + std::to_string(r + 1) +
                " failed the residual check (" + fmt17(res) + ")");
    out.eigenvalues.push_back(lambda);
    out.eigenvectors.push_back(std::move(y));
    out.residuals.push_back(res);
  }
  return out;
}

}  // namespace steklab::fem

#include "steklab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace steklab::spectra {

using fem::NodalMeasure;
using mesh::TriMesh;
using surface::ModelSurface;

// === pencil spectra ========================================================

SpectralResult measure_spectrum(const TriMesh& m, const NodalMeasure& mu, int count,
                                std::uint64_t seed, SpectralKind kind) {
  require(static_cast<int>(mu.w.size()) == m.nv(), ErrorKind::Usage,
          "measure_spectrum: measure size does not match vertex count");
  SpectralResult r;
  r.kind = kind;
  r.mass = mu.total;
  const linalg::Csr k_mat = fem::stiffness_matrix(m);
  r.eig = fem::generalized_eigs(k_mat, mu, count, seed);
  r.eigenvalues = r.eig.eigenvalues;
  r.normalized.reserve(r.eigenvalues.size());
  for (double v : r.eigenvalues) r.normalized.push_back(v * r.mass);
  return r;
}

SpectralResult laplace_normalized(const ModelSurface& s,
                                  const std::function<double(const Vec3&)>& f, double h, int count,
                                  std::uint64_t seed) {
  const TriMesh m = mesh::mesh_closed_surface(s, h);
  NodalMeasure mu;
  if (f) {
    std::vector<double> fv(static_cast<std::size_t>(m.nv()));
    for (int v = 0; v < m.nv(); ++v) fv[static_cast<std::size_t>(v)] = f(m.verts[static_cast<std::size_t>(v)]);
    mu = fem::area_measure(m, fv);
  } else {
    mu = fem::area_measure(m);
  }
  return measure_spectrum(m, mu, count, seed, SpectralKind::Laplace);
}

SpectralResult steklov_normalized(const TriMesh& domain, const NodalMeasure& boundary, int count,
                                  std::uint64_t seed) {
  require(!domain.closed, ErrorKind::Usage, "steklov_normalized: mesh has no boundary");
  return measure_spectrum(domain, boundary, count, seed, SpectralKind::Steklov);
}

// === multiplets ============================================================

double default_multiplet_tol(double h_max) { return std::max(1e-6, 10.0 * h_max * h_max); }

std::vector<std::vector<int>> group_multiplets(const std::vector<double>& values, double rel_tol) {
  require(rel_tol > 0.0, ErrorKind::Usage, "group_multiplets: tolerance must be positive");
  require(std::is_sorted(values.begin(), values.end()), ErrorKind::Usage,
          "group_multiplets: values must be nondecreasing");
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(values.size()); ++i) {
    const double v = values[static_cast<std::size_t>(i)];
    if (!groups.empty()) {
      const double head = values[static_cast<std::size_t>(groups.back().front())];
      if (v - head <= rel_tol * std::max(std::abs(head), 1.0)) {
        groups.back().push_back(i);
        continue;
      }
    }
    groups.push_back({i});
  }
  return groups;
}

EigenBasisV first_eigenspace(const TriMesh& closed, const NodalMeasure& mu, int count,
                             std::uint64_t seed) {
  require(closed.closed, ErrorKind::Usage, "first_eigenspace: mesh must be closed");
  const SpectralResult r = measure_spectrum(closed, mu, count, seed, SpectralKind::Laplace);
  const double tol = default_multiplet_tol(closed.h_max);
  const auto groups = group_multiplets(r.normalized, tol);
  require(groups.size() >= 2, ErrorKind::Capacity,
          "first_eigenspace: requested count resolves no nonzero eigenvalue");
  require(groups[0].size() == 1 && groups[0][0] == 0, ErrorKind::Numeric,
          "first_eigenspace: zero mode is not isolated at the grouping tolerance");
  const std::vector<int>& grp = groups[1];
  require(grp.back() + 1 < static_cast<int>(r.normalized.size()), ErrorKind::Capacity,
          "first_eigenspace: first eigenspace may extend past the computed range; raise count");
  EigenBasisV basis;
  basis.dim = static_cast<int>(grp.size());
  basis.grouping_tol = tol;
  double sum = 0.0;
  for (int idx : grp) {
    sum += r.normalized[static_cast<std::size_t>(idx)];
    basis.funcs.push_back(r.eig.eigenvectors[static_cast<std::size_t>(idx)]);
  }
  basis.lambda1_normalized = sum / static_cast<double>(basis.dim);
  return basis;
}

// === quasimode residuals ===================================================

QuasimodeReport quasimode_residual(const TriMesh& domain, const NodalMeasure& beta,
                                   const EigenBasisV& basis, const SpectralResult& steklov) {
  const int nd = domain.nv();
  require(!domain.closed, ErrorKind::Usage, "quasimode_residual: domain mesh must have boundary");
  require(static_cast<int>(beta.w.size()) == nd, ErrorKind::Usage,
          "quasimode_residual: measure size does not match domain vertex count");
  require(!basis.funcs.empty(), ErrorKind::Usage, "quasimode_residual: empty basis");
  require(!steklov.eig.eigenvectors.empty(), ErrorKind::Usage,
          "quasimode_residual: spectrum carries no eigenvectors");
  for (const auto& phi : basis.funcs)
    require(static_cast<int>(phi.size()) >= nd, ErrorKind::Usage,
            "quasimode_residual: basis function shorter than the domain vertex prefix");
  for (const auto& chi : steklov.eig.eigenvectors)
    require(static_cast<int>(chi.size()) == nd, ErrorKind::Usage,
            "quasimode_residual: eigenvector size does not match domain vertex count");

  const linalg::Csr k_dom = fem::stiffness_matrix(domain);
  const double lam = basis.lambda1_normalized;

  // Precompute K chi, B chi, and the test norm sqrt(chi'B chi) + sqrt(chi'K chi).
  const std::size_t nchi = steklov.eig.eigenvectors.size();
  std::vector<std::vector<double>> kchi(nchi), bchi(nchi);
  std::vector<double> test_norm(nchi);
  for (std::size_t c = 0; c < nchi; ++c) {
    const auto& chi = steklov.eig.eigenvectors[c];
    kchi[c].assign(static_cast<std::size_t>(nd), 0.0);
    k_dom.mul(chi.data(), kchi[c].data());
    bchi[c].resize(static_cast<std::size_t>(nd));
    for (int v = 0; v < nd; ++v)
      bchi[c][static_cast<std::size_t>(v)] = beta.w[static_cast<std::size_t>(v)] * chi[static_cast<std::size_t>(v)];
    const double eb = linalg::dotv(chi, bchi[c]);
    const double ek = linalg::dotv(chi, kchi[c]);
    test_norm[c] = std::sqrt(std::max(eb, 0.0)) + std::sqrt(std::max(ek, 0.0));
    require(test_norm[c] > 0.0, ErrorKind::Numeric, "quasimode_residual: degenerate test vector");
  }

  QuasimodeReport rep;
  std::vector<double> kphi(static_cast<std::size_t>(nd));
  for (const auto& phi_full : basis.funcs) {
    // Domain prefix of the closed-mesh vector.
    const std::vector<double> phi(phi_full.begin(), phi_full.begin() + nd);
    double worst = 0.0;
    for (std::size_t c = 0; c < nchi; ++c) {
      const double pairing = linalg::dotv(phi, kchi[c]) - lam * linalg::dotv(phi, bchi[c]);
      worst = std::max(worst, std::abs(pairing) / test_norm[c]);
    }
    rep.per_phi.push_back(worst);
    k_dom.mul(phi.data(), kphi.data());
    const double pkp = linalg::dotv(phi, kphi);
    double pbp = 0.0;
    for (int v = 0; v < nd; ++v)
      pbp += beta.w[static_cast<std::size_t>(v)] * phi[static_cast<std::size_t>(v)] * phi[static_cast<std::size_t>(v)];
    require(pbp > 0.0, ErrorKind::Numeric,
            "quasimode_residual: basis function vanishes on the measure support");
    rep.rayleigh_excess.push_back(pkp / pbp - lam);
  }
  rep.max_residual = *std::max_element(rep.per_phi.begin(), rep.per_phi.end());
  return rep;
}

// === windows ===============================================================

int window_count(const std::vector<double>& normalized, double center, double eta) {
  require(eta >= 0.0 && !std::isnan(eta), ErrorKind::Usage, "window_count: eta must be nonnegative");
  require(!normalized.empty(), ErrorKind::Usage, "window_count: empty spectrum");
  if (std::isinf(eta)) return static_cast<int>(normalized.size());
  require(center + eta <= normalized.back(), ErrorKind::Capacity,
          "window_count: window extends past the computed range; raise count");
  int n = 0;
  for (double v : normalized)
    if (v >= center - eta && v <= center + eta) ++n;
  return n;
}

int window_count(const SpectralResult& r, double center, double eta) {
  return window_count(r.normalized, center, eta);
}

}  // namespace steklab::spectra

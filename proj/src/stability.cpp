#include "steklab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include <Eigen/Dense>

namespace steklab::stability {

using fem::NodalMeasure;
using linalg::Csr;
using mesh::MeshGeom;
using mesh::TriMesh;

// === signed measure differences ============================================

double MeasureDiff::total() const { return std::accumulate(d.begin(), d.end(), 0.0); }

MeasureDiff MeasureDiff::probability(const NodalMeasure& mu, const NodalMeasure& nu) {
  require(mu.w.size() == nu.w.size(), ErrorKind::Usage,
          "measure difference: measures live on different vertex sets");
  require(mu.total > 0.0 && nu.total > 0.0, ErrorKind::Domain,
          "measure difference: cannot normalize a zero-mass measure");
  MeasureDiff md;
  md.mass_mu = 1.0;
  md.mass_nu = 1.0;
  md.d.resize(mu.w.size());
  for (std::size_t v = 0; v < mu.w.size(); ++v) md.d[v] = mu.w[v] / mu.total - nu.w[v] / nu.total;
  return md;
}

MeasureDiff MeasureDiff::raw(const NodalMeasure& mu, const NodalMeasure& nu) {
  require(mu.w.size() == nu.w.size(), ErrorKind::Usage,
          "measure difference: measures live on different vertex sets");
  MeasureDiff md;
  md.mass_mu = mu.total;
  md.mass_nu = nu.total;
  md.d.resize(mu.w.size());
  for (std::size_t v = 0; v < mu.w.size(); ++v) md.d[v] = mu.w[v] - nu.w[v];
  return md;
}

double dual_norm_dot(const Csr& k_mat, const MeasureDiff& diff, double tol) {
  require(k_mat.rows() == static_cast<std::int32_t>(diff.d.size()), ErrorKind::Usage,
          "dual_norm_dot: size mismatch");
  const double scale = std::max(std::abs(diff.mass_mu) + std::abs(diff.mass_nu), 1.0);
  require(std::abs(diff.total()) <= 1e-10 * scale, ErrorKind::Domain,
          "dual_norm_dot: difference has nonzero total mass, the homogeneous dual seminorm "
          "is infinite; use dual_norm_full");
  const std::vector<double> x = linalg::solve_spd(k_mat, diff.d, tol, /*project_out_mean=*/true);
  return std::sqrt(std::max(linalg::dotv(diff.d, x), 0.0));
}

namespace {

Csr diagonal_csr(const std::vector<double>& w) {
  std::vector<linalg::Triplet> t;
  t.reserve(w.size());
  for (std::size_t v = 0; v < w.size(); ++v)
    t.push_back({static_cast<std::int32_t>(v), static_cast<std::int32_t>(v), w[v]});
  const auto n = static_cast<std::int32_t>(w.size());
  return Csr::from_triplets(n, n, std::move(t));
}

}  // namespace

double dual_norm_full(const Csr& k_mat, const NodalMeasure& area, const MeasureDiff& diff,
                      double tol) {
  require(k_mat.rows() == static_cast<std::int32_t>(diff.d.size()) &&
              area.w.size() == diff.d.size(),
          ErrorKind::Usage, "dual_norm_full: size mismatch");
  require(area.total > 0.0, ErrorKind::Domain, "dual_norm_full: zero-mass area measure");
  const Csr a = Csr::add(k_mat, 1.0, diagonal_csr(area.w));
  const std::vector<double> x = linalg::solve_spd(a, diff.d, tol);
  return std::sqrt(std::max(linalg::dotv(diff.d, x), 0.0));
}

// === Moebius centering =====================================================

Vec3 mobius_apply(const Vec3& a, const Vec3& y) {
  const Vec3 w = y - a;
  const double ww = dot(w, w);
  const Vec3 im = ((1.0 - dot(a, a)) * w - ww * a) / ww;
  return im;
}

namespace {

Vec3 pushed_barycenter(const Vec3& a, const std::vector<Vec3>& pts, const std::vector<double>& w,
                       double wtot) {
  Vec3 g{};
  for (std::size_t i = 0; i < pts.size(); ++i) g += w[i] * mobius_apply(a, pts[i]);
  return g / wtot;
}

}  // namespace

CenteredMap mobius_center_points(const std::vector<Vec3>& unit_points,
                                 const std::vector<double>& weights) {
  const std::size_t n = unit_points.size();
  require(n == weights.size() && n > 0, ErrorKind::Usage, "mobius_center: size mismatch");
  double wtot = 0.0, wmax = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, ErrorKind::Domain,
            "mobius_center: weights must be nonnegative");
    wtot += w;
    wmax = std::max(wmax, w);
  }
  require(wtot > 0.0, ErrorKind::Domain, "mobius_center: zero-mass measure");
  int support = 0;
  for (std::size_t i = 0; i < n; ++i) {
    require(std::abs(norm(unit_points[i]) - 1.0) <= 1e-6, ErrorKind::Usage,
            "mobius_center: points must lie on the unit sphere");
    if (weights[i] > 1e-14 * wmax) ++support;
  }
  require(support >= 2, ErrorKind::Domain,
          "mobius_center: measure concentrated at a single point cannot be centered");

  std::vector<Vec3> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = normalized(unit_points[i]);

  const double gtol = 1e-8;
  CenteredMap cm;
  Vec3 a{};
  Vec3 g = pushed_barycenter(a, pts, weights, wtot);
  int it = 0;
  while (norm(g) > gtol) {
    require(it < 200, ErrorKind::Numeric, "mobius_center: no convergence within 200 iterations");
    ++it;
    // Central-difference Jacobian of the pushed barycenter in a.
    const double fd = 1e-6;
    Eigen::Matrix3d jac;
    for (int c = 0; c < 3; ++c) {
      Vec3 ap = a, am = a;
      if (c == 0) { ap.x += fd; am.x -= fd; }
      if (c == 1) { ap.y += fd; am.y -= fd; }
      if (c == 2) { ap.z += fd; am.z -= fd; }
      const Vec3 gp = pushed_barycenter(ap, pts, weights, wtot);
      const Vec3 gm = pushed_barycenter(am, pts, weights, wtot);
      const Vec3 col = (gp - gm) / (2.0 * fd);
      jac(0, c) = col.x;
      jac(1, c) = col.y;
      jac(2, c) = col.z;
    }
    const Eigen::Vector3d rhs(-g.x, -g.y, -g.z);
    const Eigen::Vector3d sv = jac.colPivHouseholderQr().solve(rhs);
    const Vec3 step{sv(0), sv(1), sv(2)};

    double alpha = 1.0;
    bool accepted = false;
    const double gn = norm(g);
    while (alpha >= std::ldexp(1.0, -30)) {
      const Vec3 cand = a + alpha * step;
      if (norm(cand) < 0.999999) {
        const Vec3 gc = pushed_barycenter(cand, pts, weights, wtot);
        if (norm(gc) < gn * (1.0 - 1e-4 * alpha)) {
          a = cand;
          g = gc;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    require(accepted, ErrorKind::Numeric, "mobius_center: line search stalled");
  }

  cm.a = a;
  cm.residual = norm(g);
  cm.iterations = it;
  cm.images.resize(n);
  for (std::size_t i = 0; i < n; ++i) cm.images[i] = normalized(mobius_apply(a, pts[i]));
  return cm;
}

CenteredMap mobius_center(const TriMesh& sphere_mesh, const NodalMeasure& mu) {
  require(sphere_mesh.geom == MeshGeom::Sphere, ErrorKind::Usage,
          "mobius_center: mesh must live on the sphere");
  require(static_cast<int>(mu.w.size()) == sphere_mesh.nv(), ErrorKind::Usage,
          "mobius_center: measure size does not match vertex count");
  std::vector<Vec3> pts(sphere_mesh.verts.size());
  for (std::size_t v = 0; v < pts.size(); ++v) pts[v] = normalized(sphere_mesh.verts[v]);
  return mobius_center_points(pts, mu.w);
}

// === gap certificate =======================================================

CertificateRecord gap_certificate_sphere(const TriMesh& domain, const NodalMeasure& mu,
                                         const CenteredMap& map, std::uint64_t seed, double tol) {
  const int n = domain.nv();
  require(domain.geom == MeshGeom::Sphere && !domain.closed, ErrorKind::Usage,
          "gap_certificate_sphere: needs a sphere domain mesh with boundary");
  require(static_cast<int>(mu.w.size()) == n, ErrorKind::Usage,
          "gap_certificate_sphere: measure size does not match vertex count");
  require(static_cast<int>(map.images.size()) == n, ErrorKind::Usage,
          "gap_certificate_sphere: image count does not match vertex count");
  require(mu.total > 0.0, ErrorKind::Domain, "gap_certificate_sphere: zero-mass measure");

  Vec3 bc{};
  for (int v = 0; v < n; ++v) {
    const Vec3& im = map.images[static_cast<std::size_t>(v)];
    require(std::abs(norm(im) - 1.0) <= 1e-6, ErrorKind::Usage,
            "gap_certificate_sphere: images must lie on the unit sphere");
    bc += mu.w[static_cast<std::size_t>(v)] * im;
  }
  bc = bc / mu.total;
  require(norm(bc) <= 1e-6, ErrorKind::Usage,
          "gap_certificate_sphere: measure barycenter is off-center; run mobius_center first");

  // Mapped copy of the domain on the unit sphere. The cotangent stiffness is
  // conformally natural, so it is simply reassembled on the mapped geometry.
  TriMesh mapped = domain;
  mapped.surf.reset();
  for (int v = 0; v < n; ++v)
    mapped.verts[static_cast<std::size_t>(v)] = normalized(map.images[static_cast<std::size_t>(v)]);
  double hm = 0.0;
  for (int t = 0; t < mapped.nt(); ++t) {
    const auto c = mapped.corners(t);
    for (int e = 0; e < 3; ++e) hm = std::max(hm, dist(c[static_cast<std::size_t>(e)], c[static_cast<std::size_t>((e + 1) % 3)]));
  }
  mapped.h_max = hm;

  const Csr k_map = fem::stiffness_matrix(mapped);
  const fem::EigResult eig = fem::generalized_eigs(k_map, mu, 2, seed);
  const double sigma1 = eig.eigenvalues[1];

  CertificateRecord rec;
  rec.center = map.a;
  rec.centering_residual = map.residual;
  rec.h_max_mapped = hm;
  rec.sigma1_bar = sigma1 * mu.total;

  const NodalMeasure area = fem::area_measure(mapped);
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v)
    d[static_cast<std::size_t>(v)] =
        sigma1 * mu.w[static_cast<std::size_t>(v)] - 2.0 * area.w[static_cast<std::size_t>(v)];
  const Csr a_full = Csr::add(k_map, 1.0, diagonal_csr(area.w));
  const std::vector<double> x = linalg::solve_spd(a_full, d, tol);
  rec.dual_sq = std::max(linalg::dotv(d, x), 0.0);
  rec.area_defect = 6.0 * (4.0 * kPi - area.total);
  rec.lhs = rec.dual_sq + rec.area_defect;
  rec.rhs = 3.0 * (8.0 * kPi - rec.sigma1_bar);

  // Dirichlet energy of the identity map; for inscribed flat triangles this
  // equals the mapped area exactly.
  double e_id = 0.0;
  std::vector<double> coord(static_cast<std::size_t>(n));
  for (int c = 0; c < 3; ++c) {
    for (int v = 0; v < n; ++v) coord[static_cast<std::size_t>(v)] = mapped.verts[static_cast<std::size_t>(v)][c];
    e_id += 0.5 * k_map.quad(coord, coord);
  }
  rec.raw_pairing = 2.0 * e_id - rec.sigma1_bar;

  rec.tol_discr = 5.0 * hm + tol;
  rec.certified = rec.lhs <= rec.rhs * (1.0 + rec.tol_discr);
  rec.slack = rec.rhs * (1.0 + rec.tol_discr) - rec.lhs;
  return rec;
}

CertificateRecord certify_domain(const TriMesh& domain, const NodalMeasure& mu,
                                 std::uint64_t seed, double tol) {
  const CenteredMap cm = mobius_center(domain, mu);
  return gap_certificate_sphere(domain, mu, cm, seed, tol);
}

// === logarithmic test functions ============================================

std::vector<double> log_test_function(const surface::ModelSurface& s,
                                      const std::vector<surface::SurfacePoint>& centers,
                                      double delta, int k, const TriMesh& m) {
  require(k >= 2, ErrorKind::Usage, "log_test_function: needs k >= 2");
  require(static_cast<int>(centers.size()) == k, ErrorKind::Usage,
          "log_test_function: center count must equal k");
  require(delta > 0.0 && delta < 1.0 / std::sqrt(static_cast<double>(k)), ErrorKind::Domain,
          "log_test_function: delta must lie in (0, 1/sqrt(k))");
  const bool sphere = s.kind() == surface::SurfaceKind::Sphere;
  require((m.geom == MeshGeom::Sphere) == sphere, ErrorKind::Usage,
          "log_test_function: mesh geometry does not match the surface");

  const double cap = std::log(static_cast<double>(k));
  const double sq = std::sqrt(delta);
  std::vector<double> phi(static_cast<std::size_t>(m.nv()));
  for (int v = 0; v < m.nv(); ++v) {
    const surface::SurfacePoint q = s.make_point(m.verts[static_cast<std::size_t>(v)]);
    double dmin = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) dmin = std::min(dmin, s.distance(q, c));
    double val = cap;
    if (dmin > 1e-300) val = std::clamp(std::log(sq / dmin), 0.0, cap);
    phi[static_cast<std::size_t>(v)] = val;
  }
  return phi;
}

TestFunctionReport test_function_ratio(const TriMesh& m, const std::vector<double>& phi,
                                       const NodalMeasure& mu, const NodalMeasure& nu,
                                       double delta, int k) {
  const int n = m.nv();
  require(static_cast<int>(phi.size()) == n && static_cast<int>(mu.w.size()) == n &&
              static_cast<int>(nu.w.size()) == n,
          ErrorKind::Usage, "test_function_ratio: size mismatch");
  require(mu.total > 0.0 && nu.total > 0.0, ErrorKind::Domain,
          "test_function_ratio: zero-mass measure");
  require(k >= 2 && delta > 0.0, ErrorKind::Usage, "test_function_ratio: bad delta or k");

  TestFunctionReport rep;
  for (int v = 0; v < n; ++v)
    rep.pairing += phi[static_cast<std::size_t>(v)] *
                   (mu.w[static_cast<std::size_t>(v)] / mu.total - nu.w[static_cast<std::size_t>(v)] / nu.total);
  const Csr k_mat = fem::stiffness_matrix(m);
  const NodalMeasure area = fem::area_measure(m);
  double sob2 = k_mat.quad(phi, phi);
  for (int v = 0; v < n; ++v)
    sob2 += area.w[static_cast<std::size_t>(v)] * phi[static_cast<std::size_t>(v)] * phi[static_cast<std::size_t>(v)];
  require(sob2 > 0.0, ErrorKind::Usage, "test_function_ratio: zero test function");
  rep.sobolev_norm = std::sqrt(sob2);
  rep.ratio = rep.pairing / rep.sobolev_norm;
  rep.k_delta = static_cast<double>(k) * delta;
  rep.sqrt_delta_k_logk = std::sqrt(delta * static_cast<double>(k) * std::log(static_cast<double>(k)));
  return rep;
}

double measure_mass_on_holes(const NodalMeasure& mu, const std::vector<int>& hole_of_vertex,
                             const std::vector<int>& holes) {
  require(mu.total > 0.0, ErrorKind::Domain, "measure_mass_on_holes: zero-mass measure");
  const std::set<int> sel(holes.begin(), holes.end());
  double mass = 0.0;
  const std::size_t n = std::min(mu.w.size(), hole_of_vertex.size());
  for (std::size_t v = 0; v < n; ++v)
    if (hole_of_vertex[v] >= 0 && sel.count(hole_of_vertex[v])) mass += mu.w[v];
  return mass / mu.total;
}

}  // namespace steklab::stability

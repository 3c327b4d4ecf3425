#pragma once

// Quantitative stability toolbox: signed measure differences and their
// negative-Sobolev dual norms, Moebius centering of measures on the sphere,
// a certified lower bound linking the centered first-eigenvalue defect to a
// dual-norm distance plus an area defect, and logarithmic-cutoff test
// functions with their Rayleigh-type pairing ratios.

#include <cstdint>
#include <vector>

#include "steklab/fem.hpp"
#include "steklab/linalg.hpp"
#include "steklab/mesh.hpp"
#include "steklab/surface.hpp"

namespace steklab::stability {

// === signed measure differences ============================================

// Difference of two nodal measures on a common vertex set.
struct MeasureDiff {
  std::vector<double> d;  // signed per-vertex weights (mu - nu)
  double mass_mu = 0.0;   // total of the first measure after normalization
  double mass_nu = 0.0;

  double total() const;

  // Normalizes each side to a probability measure first (masses become 1).
  static MeasureDiff probability(const fem::NodalMeasure& mu, const fem::NodalMeasure& nu);
  // Keeps the given weights.
  static MeasureDiff raw(const fem::NodalMeasure& mu, const fem::NodalMeasure& nu);
};

// Homogeneous dual seminorm sqrt(d^T K^+ d) of a zero-total difference:
// solves K x = d on the mean-zero complement by projected CG. A nonzero
// total makes the seminorm infinite and is rejected as a domain error.
double dual_norm_dot(const linalg::Csr& k_mat, const MeasureDiff& diff, double tol = 1e-12);

// Inhomogeneous dual norm sqrt(d^T (K + M)^{-1} d) with M the lumped area
// measure; finite for any signed difference.
double dual_norm_full(const linalg::Csr& k_mat, const fem::NodalMeasure& area,
                      const MeasureDiff& diff, double tol = 1e-12);

// === Moebius centering =====================================================

// Conformal dilation of the unit sphere with parameter |a| < 1; the identity
// at a = 0, concentrating mass near -a/|a| as |a| -> 1.
Vec3 mobius_apply(const Vec3& a, const Vec3& y);

struct CenteredMap {
  Vec3 a{};                  // dilation parameter, |a| < 1
  std::vector<Vec3> images;  // unit-sphere images of the input points
  double residual = 0.0;     // |barycenter| of the pushed probability measure
  int iterations = 0;
};

// Finds the dilation whose pushforward of the weighted point set has
// barycenter zero (damped Newton from a = 0, deterministic). Weights must be
// nonnegative with at least two support points; points must be unit vectors.
CenteredMap mobius_center_points(const std::vector<Vec3>& unit_points,
                                 const std::vector<double>& weights);

// Same, for a measure on a sphere mesh; vertices are first rescaled to the
// unit sphere.
CenteredMap mobius_center(const mesh::TriMesh& sphere_mesh, const fem::NodalMeasure& mu);

// === gap certificate =======================================================

struct CertificateRecord {
  double sigma1_bar = 0.0;     // normalized first eigenvalue on the mapped mesh
  double dual_sq = 0.0;        // squared dual norm of sigma1*mu - 2*area restricted to the domain
  double area_defect = 0.0;    // 6 * (4 pi - mapped domain area)
  double lhs = 0.0;            // dual_sq + area_defect
  double rhs = 0.0;            // 3 * (8 pi - sigma1_bar)
  double raw_pairing = 0.0;    // 2 E(identity) - sigma1 * mass
  double tol_discr = 0.0;      // 5 h_max of the mapped mesh + solver tolerance
  double slack = 0.0;          // rhs * (1 + tol_discr) - lhs
  bool certified = false;
  Vec3 center{};               // dilation parameter that balanced the measure
  double centering_residual = 0.0;
  double h_max_mapped = 0.0;
};

// Evaluates the certificate for a sphere domain mesh and a boundary measure,
// with vertex images (on the unit sphere) produced by mobius_center. The
// pushed measure must have barycenter within 1e-6 of zero; an unbalanced
// measure is a usage error directing the caller to mobius_center.
CertificateRecord gap_certificate_sphere(const mesh::TriMesh& domain, const fem::NodalMeasure& mu,
                                         const CenteredMap& map, std::uint64_t seed,
                                         double tol = 1e-10);

// Centering plus certificate in one call.
CertificateRecord certify_domain(const mesh::TriMesh& domain, const fem::NodalMeasure& mu,
                                 std::uint64_t seed, double tol = 1e-10);

// === logarithmic test functions ============================================

// Values at mesh vertices of the cutoff log(sqrt(delta)/d_S) clamped to
// [0, log k], where d_S is the geodesic distance to the nearest center.
// Requires 0 < delta < 1/sqrt(k) and k >= 2 matching the center count.
std::vector<double> log_test_function(const surface::ModelSurface& s,
                                      const std::vector<surface::SurfacePoint>& centers,
                                      double delta, int k, const mesh::TriMesh& m);

struct TestFunctionReport {
  double pairing = 0.0;       // <phi, mu_hat - nu_hat>, probability-normalized
  double sobolev_norm = 0.0;  // sqrt(phi^T K phi + phi^T M phi)
  double ratio = 0.0;         // pairing / sobolev_norm
  double k_delta = 0.0;
  double sqrt_delta_k_logk = 0.0;
};

// Rayleigh-type pairing ratio of a test function against the difference of
// two measures on one mesh, with the bound components it is compared to.
TestFunctionReport test_function_ratio(const mesh::TriMesh& m, const std::vector<double>& phi,
                                       const fem::NodalMeasure& mu, const fem::NodalMeasure& nu,
                                       double delta, int k);

// Fraction of a measure's mass sitting on the listed holes (by the domain
// mesh's per-vertex hole tags).
double measure_mass_on_holes(const fem::NodalMeasure& mu, const std::vector<int>& hole_of_vertex,
                             const std::vector<int>& holes);

}  // namespace steklab::stability

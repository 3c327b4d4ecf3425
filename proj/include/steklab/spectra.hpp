#pragma once

// Normalized spectra in the eigenvalues-of-measures framework: one pencil
// (stiffness, nodal measure) covers both closed-surface Laplace spectra
// (area measure) and Steklov spectra (boundary measure). Also multiplet
// grouping, extraction of the first eigenspace basis, approximate-eigenpair
// residuals of restricted basis functions against a Steklov spectrum, and
// eigenvalue window counting.

#include <cstdint>
#include <functional>
#include <vector>

#include "steklab/fem.hpp"
#include "steklab/mesh.hpp"
#include "steklab/surface.hpp"

namespace steklab::spectra {

enum class SpectralKind { Laplace, Steklov };

struct SpectralResult {
  SpectralKind kind = SpectralKind::Laplace;
  double mass = 0.0;                // total mass of the measure
  std::vector<double> eigenvalues;  // raw pencil eigenvalues, [0] = 0 flagged
  std::vector<double> normalized;   // eigenvalue * mass, scaling-invariant
  fem::EigResult eig;               // vectors, residuals, zero-mode flag
};

// Smallest `count` eigenvalues (zero mode included) of the pencil
// (stiffness(m), mu), with normalized values eigenvalue * mu.total.
SpectralResult measure_spectrum(const mesh::TriMesh& m, const fem::NodalMeasure& mu, int count,
                                std::uint64_t seed, SpectralKind kind);

// Closed-surface Laplace spectrum: meshes the surface at target edge length
// h and uses the lumped area measure with density f (sampled at vertices).
SpectralResult laplace_normalized(const surface::ModelSurface& s,
                                  const std::function<double(const Vec3&)>& f, double h, int count,
                                  std::uint64_t seed);

// Steklov spectrum of a domain mesh against a boundary-supported measure.
SpectralResult steklov_normalized(const mesh::TriMesh& domain, const fem::NodalMeasure& boundary,
                                  int count, std::uint64_t seed);

// Groups a nondecreasing eigenvalue list into multiplets: consecutive values
// within rel_tol * max(|value|, 1) of the group head join the group.
std::vector<std::vector<int>> group_multiplets(const std::vector<double>& values, double rel_tol);

// Discretization-aware grouping tolerance.
double default_multiplet_tol(double h_max);

// Basis of the first nonzero eigenspace of a closed-surface pencil.
struct EigenBasisV {
  double lambda1_normalized = 0.0;
  int dim = 0;
  std::vector<std::vector<double>> funcs;  // measure-orthonormal, on closed mesh
  double grouping_tol = 0.0;
};
EigenBasisV first_eigenspace(const mesh::TriMesh& closed, const fem::NodalMeasure& mu, int count,
                             std::uint64_t seed);

// Residuals of the restricted first-eigenspace functions as approximate
// Steklov eigenpairs at eigenvalue lambda1: for each basis function phi
// (restricted to the domain vertex prefix of the filled mesh), the maximum
// over low Steklov eigenvectors chi of
//   |phi^T K_domain chi - lambda1 phi^T B_beta chi| / (sqrt(chi^T B chi) + sqrt(chi^T K chi)).
// Also reports each phi's Rayleigh quotient excess over lambda1.
struct QuasimodeReport {
  std::vector<double> per_phi;          // max normalized residual per basis function
  std::vector<double> rayleigh_excess;  // phi^T K phi / phi^T B phi - lambda1
  double max_residual = 0.0;
};
QuasimodeReport quasimode_residual(const mesh::TriMesh& domain, const fem::NodalMeasure& beta,
                                   const EigenBasisV& basis, const SpectralResult& steklov);

// Number of normalized eigenvalues in [center - eta, center + eta]. An
// infinite eta counts everything; otherwise the window must not extend past
// the computed range.
int window_count(const SpectralResult& r, double center, double eta);
int window_count(const std::vector<double>& normalized, double center, double eta);

}  // namespace steklab::spectra

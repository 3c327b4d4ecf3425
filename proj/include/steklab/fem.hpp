#pragma once

// First-order finite elements on triangle meshes: cotangent stiffness,
// lumped nodal measures (area, weighted boundary length), the interior
// Poisson solve whose weak boundary residual defines the boundary weights,
// harmonic extension across filled holes, and a shift-inverted Lanczos
// eigensolver for pencils (K, B) with a diagonal, possibly singular B.

#include <cstdint>
#include <vector>

#include "steklab/linalg.hpp"
#include "steklab/mesh.hpp"

namespace steklab::fem {

// Diagonal nodal measure: one nonnegative weight per vertex.
struct NodalMeasure {
  std::vector<double> w;
  double total = 0.0;

  static NodalMeasure from_weights(std::vector<double> weights);
};

// Cotangent stiffness matrix (symmetric positive semidefinite, zero row
// sums). Triangles are taken flat with their unwrapped corner coordinates.
linalg::Csr stiffness_matrix(const mesh::TriMesh& m);

// Lumped P1 area measure: a third of each incident triangle's area.
NodalMeasure area_measure(const mesh::TriMesh& m);

// Lumped area measure scaled by a nodal density f (one sample per vertex,
// all samples nonnegative).
NodalMeasure area_measure(const mesh::TriMesh& m, const std::vector<double>& f);

// Lumped boundary-length measure weighted by a nodal density (empty =
// density one): each boundary vertex gets half its incident loop-edge
// lengths times its density value. Requires a mesh with boundary.
NodalMeasure boundary_measure(const mesh::TriMesh& m, const std::vector<double>& density = {});

struct PoissonSolution {
  std::vector<double> psi;   // potential, zero on the boundary
  std::vector<double> beta;  // weak boundary masses, zero off the boundary
  double beta_total = 0.0;
  double residual_norm = 0.0;  // Euclidean norm of the interior CG residual
  int iterations = 0;
};

// Solves the interior Dirichlet problem K_II psi_I = -F_I with F = M_area f
// and psi = 0 on every hole boundary, then reads off the boundary masses
// beta = (K psi + F) restricted to the boundary. For f >= 0 on a Delaunay
// mesh, psi <= 0 and beta > 0, and sum(beta) equals the lumped integral of f
// up to the solver residual.
PoissonSolution solve_poisson_dirichlet(const mesh::TriMesh& m, const std::vector<double>& f,
                                        double tol = 1e-12);

struct HarmonicExtension {
  std::vector<double> values;   // all vertices of the closed mesh
  double energy_inside = 0.0;   // Dirichlet energy over filled triangles
  double energy_outside = 0.0;  // Dirichlet energy over original triangles
};

// Extends values given on vertices 0..n_domain-1 of a (fully or partially)
// filled mesh harmonically across the fill vertices. A triangle counts as
// filled when any of its corners is a fill vertex.
HarmonicExtension harmonic_extension(const mesh::TriMesh& closed, int n_domain,
                                     const std::vector<double>& values, double tol = 1e-12);

struct EigResult {
  std::vector<double> eigenvalues;                // ascending, [0] = 0 flagged
  std::vector<std::vector<double>> eigenvectors;  // B-normalized columns
  std::vector<double> residuals;                  // relative, per pair
  bool zero_mode_flagged = false;
};

// Smallest `count` eigenvalues of K x = lambda B x, including the exact
// constant mode lambda_0 = 0 at index 0. K must be symmetric positive
// semidefinite with constants in its kernel; B diagonal nonnegative with
// positive total, possibly supported on few vertices. Shift-invert Lanczos
// on (K + eps B)^{-1} B in the B-inner product with full
// reorthogonalization and explicit deflation of the constant;
// eps = 1e-8 tr(K)/tr(B), so results are invariant under scaling of B.
EigResult generalized_eigs(const linalg::Csr& k_mat, const NodalMeasure& b, int count,
                           std::uint64_t seed, double rel_tol = 1e-7);

}  // namespace steklab::fem

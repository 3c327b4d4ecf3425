#pragma once

// Unit-area constant-curvature model surfaces (round sphere, flat tori) with
// exact geodesic primitives: distances, geodesic circles, and the closed-form
// boundary-length / area laws of geodesic disks. Everything here is exact up
// to floating point; no quadrature.

#include <array>
#include <vector>

#include "steklab/core.hpp"

namespace steklab::surface {

enum class SurfaceKind { Sphere, FlatTorus };

// Sphere points live on the radius-(4*pi)^{-1/2} sphere in R^3 (unit area).
// Torus points are 2-vectors (z = 0) reduced to the fundamental domain
// { s*a1 + t*a2 : s,t in [0,1) }.
struct SurfacePoint {
  Vec3 p;
};

using Vec2 = std::array<double, 2>;

class ModelSurface {
 public:
  static ModelSurface sphere();
  static ModelSurface square_torus();
  static ModelSurface equilateral_torus();
  // Arbitrary lattice, rescaled uniformly so the fundamental domain has unit
  // area. The basis must be linearly independent and reasonably reduced.
  static ModelSurface flat_torus(Vec2 a1, Vec2 a2);

  SurfaceKind kind() const { return kind_; }
  int euler_char() const { return kind_ == SurfaceKind::Sphere ? 2 : 0; }
  double gauss_curvature() const { return 2.0 * kPi * euler_char(); }
  double sphere_radius() const;
  const std::array<Vec2, 2>& lattice_basis() const;

  double injectivity_radius() const { return inj_; }
  double geodesic_diameter() const { return diameter_; }
  // Largest radius at which the (3/4, 5/4) linear/quadratic brackets on the
  // disk laws hold (infinite on the torus, where they are identities).
  double bracket_radius() const { return r0_; }
  double max_disk_radius() const { return std::min(r0_, inj_); }

  double distance(const SurfacePoint& a, const SurfacePoint& b) const;
  // Boundary length of the geodesic disk of radius t. Valid for t in
  // [0, injectivity_radius]; the brackets are only guaranteed below
  // bracket_radius().
  double disk_boundary_length(double t) const;
  double disk_area(double t) const;
  std::vector<SurfacePoint> geodesic_circle_points(const SurfacePoint& c, double r, int n) const;

  // Validates / canonicalizes raw coordinates (projects to the sphere,
  // reduces torus points to the fundamental domain).
  SurfacePoint make_point(const Vec3& raw) const;
  bool is_valid_point(const SurfacePoint& q, double tol = 1e-12) const;

  // Torus only: the displacement from a to b through the nearest lattice
  // translate, plus the integer shift applied to b's representative.
  Vec2 torus_delta(const SurfacePoint& a, const SurfacePoint& b, Vec2i* shift = nullptr) const;
  Vec2 torus_coords(const SurfacePoint& q) const;  // lattice coordinates in [0,1)
  SurfacePoint torus_point(double s, double t) const;  // from lattice coordinates

 private:
  ModelSurface() = default;
  void finish_torus();

  SurfaceKind kind_ = SurfaceKind::Sphere;
  std::array<Vec2, 2> basis_{};  // torus lattice basis (unit-area)
  double inj_ = 0.0;
  double diameter_ = 0.0;
  double r0_ = 0.0;
};

// Deterministic orthonormal frame perpendicular to a unit vector; the same
// input always yields the same frame (meshing relies on this for ring
// alignment).
std::array<Vec3, 2> tangent_frame(const Vec3& unit_normal);

}  // namespace steklab::surface

#include "steklab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace steklab::surface {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Largest t where (3/4)*2*pi*t <= L(t) <= (5/4)*2*pi*t and
// (3/4)*pi*t^2 <= A(t) <= (5/4)*pi*t^2. On the sphere the binding constraint
// is the lower length bracket sin(x) >= (3/4) x with x = 2*sqrt(pi)*t.
double sphere_bracket_radius() {
  const double c = 2.0 * std::sqrt(kPi);
  auto ok = [&](double t) {
    const double L = std::sqrt(kPi) * std::sin(c * t);
    const double A = 0.5 * (1.0 - std::cos(c * t));
    const double lin = 2.0 * kPi * t, quad = kPi * t * t;
    return L >= 0.75 * lin && L <= 1.25 * lin && A >= 0.75 * quad && A <= 1.25 * quad;
  };
  double lo = 1e-6, hi = 0.5 * std::sqrt(kPi);
  require(ok(lo) && !ok(hi), ErrorKind::Numeric, "bracket radius: bisection not bracketed");
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

ModelSurface ModelSurface::sphere() {
  ModelSurface s;
  s.kind_ = SurfaceKind::Sphere;
  s.inj_ = kPi * s.sphere_radius();  // = sqrt(pi)/2, also the diameter
  s.diameter_ = s.inj_;
  s.r0_ = sphere_bracket_radius();
  return s;
}

ModelSurface ModelSurface::square_torus() { return flat_torus({1.0, 0.0}, {0.0, 1.0}); }

ModelSurface ModelSurface::equilateral_torus() {
  const double s = std::sqrt(2.0 / std::sqrt(3.0));
  return flat_torus({s, 0.0}, {0.5 * s, 0.5 * std::sqrt(3.0) * s});
}

ModelSurface ModelSurface::flat_torus(Vec2 a1, Vec2 a2) {
  double det = a1[0] * a2[1] - a1[1] * a2[0];
  require(std::abs(det) > 1e-12, ErrorKind::Domain, "torus lattice basis is degenerate");
  if (det < 0.0) {
    std::swap(a1, a2);  // keep the basis positively oriented
    det = -det;
  }
  const double scale = 1.0 / std::sqrt(std::abs(det));
  ModelSurface s;
  s.kind_ = SurfaceKind::FlatTorus;
  s.basis_ = {Vec2{a1[0] * scale, a1[1] * scale}, Vec2{a2[0] * scale, a2[1] * scale}};
  s.finish_torus();
  return s;
}

void ModelSurface::finish_torus() {
  // Injectivity radius: half the shortest nonzero lattice vector.
  double shortest = kInf;
  for (int i = -3; i <= 3; ++i) {
    for (int j = -3; j <= 3; ++j) {
      if (i == 0 && j == 0) continue;
      const double x = i * basis_[0][0] + j * basis_[1][0];
      const double y = i * basis_[0][1] + j * basis_[1][1];
      shortest = std::min(shortest, std::hypot(x, y));
    }
  }
  inj_ = 0.5 * shortest;
  r0_ = kInf;  // flat disk laws are exactly linear/quadratic

  // Geodesic diameter: max distance from the origin over the fundamental
  // domain, estimated on a grid; the distance function is 1-Lipschitz, so the
  // grid underestimates by at most one cell diagonal, which we add back.
  const int n = 400;
  const SurfacePoint origin{{0.0, 0.0, 0.0}};
  double best = 0.0, cell = 0.0;
  for (int a = 0; a < 2; ++a) cell = std::max(cell, std::hypot(basis_[a][0], basis_[a][1]) / n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = (i + 0.5) / n, t = (j + 0.5) / n;
      const SurfacePoint q{{s * basis_[0][0] + t * basis_[1][0],
                            s * basis_[0][1] + t * basis_[1][1], 0.0}};
      best = std::max(best, distance(origin, q));
    }
  }
  diameter_ = best + cell * std::sqrt(2.0);
}

double ModelSurface::sphere_radius() const {
  require(kind_ == SurfaceKind::Sphere, ErrorKind::Usage, "sphere_radius: not a sphere");
  return 1.0 / std::sqrt(4.0 * kPi);
}

const std::array<Vec2, 2>& ModelSurface::lattice_basis() const {
  require(kind_ == SurfaceKind::FlatTorus, ErrorKind::Usage, "lattice_basis: not a torus");
  return basis_;
}

double ModelSurface::distance(const SurfacePoint& a, const SurfacePoint& b) const {
  if (kind_ == SurfaceKind::Sphere) {
    const double R = sphere_radius();
    return R * std::atan2(norm(cross(a.p, b.p)), dot(a.p, b.p));
  }
  const Vec2 d = torus_delta(a, b);
  return std::hypot(d[0], d[1]);
}

double ModelSurface::disk_boundary_length(double t) const {
  require(t >= 0.0 && t <= inj_ * (1.0 + 1e-12), ErrorKind::Domain,
          "disk_boundary_length: radius outside [0, injectivity radius]");
  if (kind_ == SurfaceKind::FlatTorus) return 2.0 * kPi * t;
  return std::sqrt(kPi) * std::sin(2.0 * std::sqrt(kPi) * t);
}

double ModelSurface::disk_area(double t) const {
  require(t >= 0.0 && t <= inj_ * (1.0 + 1e-12), ErrorKind::Domain,
          "disk_area: radius outside [0, injectivity radius]");
  if (kind_ == SurfaceKind::FlatTorus) return kPi * t * t;
  return 0.5 * (1.0 - std::cos(2.0 * std::sqrt(kPi) * t));
}

std::array<Vec3, 2> tangent_frame(const Vec3& n) {
  // Pick the coordinate axis least aligned with n (smallest |component|,
  // lowest index on ties) so the frame is a deterministic function of n.
  int axis = 0;
  double best = std::abs(n.x);
  if (std::abs(n.y) < best) {
    axis = 1;
    best = std::abs(n.y);
  }
  if (std::abs(n.z) < best) axis = 2;
  const Vec3 a{axis == 0 ? 1.0 : 0.0, axis == 1 ? 1.0 : 0.0, axis == 2 ? 1.0 : 0.0};
  const Vec3 e1 = normalized(cross(n, a));
  const Vec3 e2 = cross(n, e1);
  return {e1, e2};
}

std::vector<SurfacePoint> ModelSurface::geodesic_circle_points(const SurfacePoint& c, double r,
                                                               int n) const {
  require(n >= 3, ErrorKind::Usage, "geodesic_circle_points: need at least 3 points");
  require(r > 0.0 && r < inj_, ErrorKind::Domain,
          "geodesic_circle_points: radius outside (0, injectivity radius)");
  std::vector<SurfacePoint> pts;
  pts.reserve(static_cast<std::size_t>(n));
  if (kind_ == SurfaceKind::Sphere) {
    const double R = sphere_radius();
    const Vec3 nhat = normalized(c.p);
    const auto frame = tangent_frame(nhat);
    const double theta = r / R;
    for (int i = 0; i < n; ++i) {
      const double phi = 2.0 * kPi * i / n;
      const Vec3 dir = frame[0] * std::cos(phi) + frame[1] * std::sin(phi);
      pts.push_back({(nhat * std::cos(theta) + dir * std::sin(theta)) * R});
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const double phi = 2.0 * kPi * i / n;
      pts.push_back(make_point({c.p.x + r * std::cos(phi), c.p.y + r * std::sin(phi), 0.0}));
    }
  }
  return pts;
}

SurfacePoint ModelSurface::make_point(const Vec3& raw) const {
  if (kind_ == SurfaceKind::Sphere) {
    const double R = sphere_radius();
    const double n = norm(raw);
    require(n > 1e-300, ErrorKind::Domain, "make_point: zero vector cannot be projected");
    return {raw * (R / n)};
  }
  // Reduce lattice coordinates to [0,1).
  const double c0 = raw.x, c1 = raw.y;
  const double det = basis_[0][0] * basis_[1][1] - basis_[0][1] * basis_[1][0];
  double s = (c0 * basis_[1][1] - c1 * basis_[1][0]) / det;
  double t = (basis_[0][0] * c1 - basis_[0][1] * c0) / det;
  s -= std::floor(s);
  t -= std::floor(t);
  if (s >= 1.0) s = 0.0;
  if (t >= 1.0) t = 0.0;
  return torus_point(s, t);
}

bool ModelSurface::is_valid_point(const SurfacePoint& q, double tol) const {
  if (kind_ == SurfaceKind::Sphere)
    return std::abs(norm(q.p) - sphere_radius()) <= tol && std::isfinite(q.p.x);
  const Vec2 c = torus_coords(q);
  return q.p.z == 0.0 && c[0] >= -tol && c[0] < 1.0 + tol && c[1] >= -tol && c[1] < 1.0 + tol;
}

Vec2 ModelSurface::torus_coords(const SurfacePoint& q) const {
  require(kind_ == SurfaceKind::FlatTorus, ErrorKind::Usage, "torus_coords: not a torus");
  const double det = basis_[0][0] * basis_[1][1] - basis_[0][1] * basis_[1][0];
  return {(q.p.x * basis_[1][1] - q.p.y * basis_[1][0]) / det,
          (basis_[0][0] * q.p.y - basis_[0][1] * q.p.x) / det};
}

SurfacePoint ModelSurface::torus_point(double s, double t) const {
  require(kind_ == SurfaceKind::FlatTorus, ErrorKind::Usage, "torus_point: not a torus");
  return {{s * basis_[0][0] + t * basis_[1][0], s * basis_[0][1] + t * basis_[1][1], 0.0}};
}

Vec2 ModelSurface::torus_delta(const SurfacePoint& a, const SurfacePoint& b, Vec2i* shift) const {
  require(kind_ == SurfaceKind::FlatTorus, ErrorKind::Usage, "torus_delta: not a torus");
  const double dx = b.p.x - a.p.x, dy = b.p.y - a.p.y;
  // Remove the integer part of the lattice coordinates, then search the
  // neighboring translates for the shortest representative.
  const double det = basis_[0][0] * basis_[1][1] - basis_[0][1] * basis_[1][0];
  const double cs = (dx * basis_[1][1] - dy * basis_[1][0]) / det;
  const double ct = (basis_[0][0] * dy - basis_[0][1] * dx) / det;
  const int bs = static_cast<int>(std::lround(cs)), bt = static_cast<int>(std::lround(ct));
  double best = kInf;
  Vec2 out{0.0, 0.0};
  Vec2i sh{0, 0};
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      const int ns = bs + i, nt = bt + j;
      const double x = dx - ns * basis_[0][0] - nt * basis_[1][0];
      const double y = dy - ns * basis_[0][1] - nt * basis_[1][1];
      const double d2 = x * x + y * y;
      if (d2 < best) {
        best = d2;
        out = {x, y};
        sh = {-ns, -nt};
      }
    }
  }
  if (shift) *shift = sh;
  return out;
}

}  // namespace steklab::surface

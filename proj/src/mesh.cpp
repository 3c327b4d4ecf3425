#include "steklab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace steklab::mesh {

using surface::ModelSurface;
using surface::SurfaceKind;
using surface::SurfacePoint;
using surface::Vec2;

// === basic geometry =======================================================

std::array<Vec3, 3> TriMesh::corners(int t) const {
  const auto& tr = tris[static_cast<std::size_t>(t)];
  std::array<Vec3, 3> c{verts[static_cast<std::size_t>(tr[0])],
                        verts[static_cast<std::size_t>(tr[1])],
                        verts[static_cast<std::size_t>(tr[2])]};
  if (geom == MeshGeom::Torus) {
    const auto& b = surf->lattice_basis();
    const auto& sh = shifts[static_cast<std::size_t>(t)];
    for (int i = 0; i < 3; ++i) {
      c[static_cast<std::size_t>(i)].x += sh[static_cast<std::size_t>(i)][0] * b[0][0] +
                                          sh[static_cast<std::size_t>(i)][1] * b[1][0];
      c[static_cast<std::size_t>(i)].y += sh[static_cast<std::size_t>(i)][0] * b[0][1] +
                                          sh[static_cast<std::size_t>(i)][1] * b[1][1];
    }
  }
  return c;
}

double triangle_area(const TriMesh& m, int t) {
  const auto c = m.corners(t);
  return 0.5 * norm(cross(c[1] - c[0], c[2] - c[0]));
}

double total_area(const TriMesh& m) {
  double a = 0.0;
  for (int t = 0; t < m.nt(); ++t) a += triangle_area(m, t);
  return a;
}

namespace {

double compute_h_max(const TriMesh& m) {
  double h = 0.0;
  for (int t = 0; t < m.nt(); ++t) {
    const auto c = m.corners(t);
    h = std::max({h, dist(c[0], c[1]), dist(c[1], c[2]), dist(c[2], c[0])});
  }
  return h;
}

std::array<double, 3> triangle_angles(const std::array<Vec3, 3>& c) {
  std::array<double, 3> a{};
  for (int i = 0; i < 3; ++i) {
    const Vec3 u = c[static_cast<std::size_t>((i + 1) % 3)] - c[static_cast<std::size_t>(i)];
    const Vec3 w = c[static_cast<std::size_t>((i + 2) % 3)] - c[static_cast<std::size_t>(i)];
    a[static_cast<std::size_t>(i)] = std::atan2(norm(cross(u, w)), dot(u, w));
  }
  return a;
}

// Orientation of a triangle given coherent corner positions: on the sphere
// the outward normal must point away from the origin, elsewhere the +z
// normal must be positive.
double orientation_measure(MeshGeom geom, const std::array<Vec3, 3>& c) {
  const Vec3 n = cross(c[1] - c[0], c[2] - c[0]);
  if (geom == MeshGeom::Sphere) return dot(n, c[0] + c[1] + c[2]);
  return n.z;
}

}  // namespace

// === edge topology ========================================================

std::vector<EdgeRec> collect_edges(const TriMesh& m) {
  std::unordered_map<std::int64_t, EdgeRec> map;
  map.reserve(static_cast<std::size_t>(m.nt()) * 2);
  const std::int64_t nv = m.nv();
  for (int t = 0; t < m.nt(); ++t) {
    for (int e = 0; e < 3; ++e) {
      const int u = m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)];
      const int v = m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>((e + 1) % 3)];
      const int a = std::min(u, v), b = std::max(u, v);
      auto [it, fresh] = map.try_emplace(a * nv + b, EdgeRec{a, b, t, -1});
      if (!fresh) {
        if (it->second.t1 != -1)
          fail(ErrorKind::Meshing, "edge " + std::to_string(a) + "-" + std::to_string(b) +
                                       " shared by more than two triangles");
        it->second.t1 = t;
      }
    }
  }
  std::vector<EdgeRec> out;
  out.reserve(map.size());
  for (const auto& kv : map) out.push_back(kv.second);
  std::sort(out.begin(), out.end(),
            [](const EdgeRec& x, const EdgeRec& y) { return x.a != y.a ? x.a < y.a : x.b < y.b; });
  return out;
}

namespace {

bool directed_edges_consistent(const TriMesh& m) {
  std::unordered_set<std::int64_t> seen;
  seen.reserve(static_cast<std::size_t>(m.nt()) * 3);
  const std::int64_t nv = m.nv();
  for (const auto& tr : m.tris)
    for (int e = 0; e < 3; ++e) {
      const std::int64_t key = tr[static_cast<std::size_t>(e)] * nv +
                               tr[static_cast<std::size_t>((e + 1) % 3)];
      if (!seen.insert(key).second) return false;  // same directed edge twice
    }
  return true;
}

// Reconstructs boundary loops from directed boundary edges, validates vertex
// tags, and stores loops indexed by hole id, each rotated to start at its
// smallest vertex.
void rebuild_loops(TriMesh& m) {
  const std::vector<EdgeRec> edges = collect_edges(m);
  const std::int64_t nv = m.nv();
  std::unordered_set<std::int64_t> boundary;
  for (const EdgeRec& e : edges)
    if (e.t1 == -1) boundary.insert(e.a * nv + e.b);

  std::unordered_map<int, int> next;
  for (const auto& tr : m.tris) {
    for (int e = 0; e < 3; ++e) {
      const int u = tr[static_cast<std::size_t>(e)];
      const int v = tr[static_cast<std::size_t>((e + 1) % 3)];
      if (boundary.count(std::int64_t(std::min(u, v)) * nv + std::max(u, v))) {
        if (!next.emplace(u, v).second)
          fail(ErrorKind::Meshing, "non-manifold boundary at vertex " + std::to_string(u));
      }
    }
  }

  std::vector<std::pair<int, std::vector<int>>> cycles;  // (hole id, cycle)
  std::unordered_set<int> visited;
  std::vector<int> starts;
  starts.reserve(next.size());
  for (const auto& kv : next) starts.push_back(kv.first);
  std::sort(starts.begin(), starts.end());
  for (int s : starts) {
    if (visited.count(s)) continue;
    std::vector<int> cycle;
    int v = s;
    do {
      cycle.push_back(v);
      visited.insert(v);
      auto it = next.find(v);
      require(it != next.end(), ErrorKind::Meshing, "open boundary chain at vertex " + std::to_string(v));
      v = it->second;
    } while (v != s && cycle.size() <= next.size());
    require(v == s, ErrorKind::Meshing, "boundary walk failed to close");
    const std::size_t pivot = static_cast<std::size_t>(
        std::min_element(cycle.begin(), cycle.end()) - cycle.begin());
    std::rotate(cycle.begin(), cycle.begin() + static_cast<std::ptrdiff_t>(pivot), cycle.end());
    const int tag = m.hole_of_vertex[static_cast<std::size_t>(cycle[0])];
    require(tag >= 0, ErrorKind::Meshing, "boundary vertex without a hole tag");
    for (int u : cycle)
      require(m.hole_of_vertex[static_cast<std::size_t>(u)] == tag, ErrorKind::Meshing,
              "boundary loop mixes hole tags");
    cycles.emplace_back(tag, std::move(cycle));
  }
  for (int v = 0; v < m.nv(); ++v)
    require(m.hole_of_vertex[static_cast<std::size_t>(v)] < 0 || visited.count(v),
            ErrorKind::Meshing, "tagged vertex is not on any boundary loop");

  std::sort(cycles.begin(), cycles.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  m.loops.clear();
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    require(cycles[i].first == static_cast<int>(i), ErrorKind::Meshing,
            "hole ids are not consecutive from 0");
    m.loops.push_back(std::move(cycles[i].second));
  }
  m.closed = m.loops.empty();
}

void finalize_mesh(TriMesh& m) {
  require(!m.tris.empty(), ErrorKind::Meshing, "mesh has no triangles");
  if (m.geom == MeshGeom::Torus)
    require(m.shifts.size() == m.tris.size(), ErrorKind::Meshing, "torus mesh missing shifts");
  for (int t = 0; t < m.nt(); ++t)
    require(orientation_measure(m.geom, m.corners(t)) > 0.0, ErrorKind::Meshing,
            "inverted triangle " + std::to_string(t));
  require(directed_edges_consistent(m), ErrorKind::Meshing, "inconsistent triangle orientation");
  rebuild_loops(m);
  m.h_max = compute_h_max(m);

  const std::vector<EdgeRec> edges = collect_edges(m);
  const int chi = m.nv() - static_cast<int>(edges.size()) + m.nt();
  const int chi0 = (m.geom == MeshGeom::Torus) ? 0 : 2;
  require(chi == chi0 - m.n_holes(), ErrorKind::Meshing,
          "Euler characteristic " + std::to_string(chi) + " does not match expected " +
              std::to_string(chi0 - m.n_holes()));
}

// === closed-surface meshers ===============================================

TriMesh icosphere(const ModelSurface& s, double target_h, int vertex_cap) {
  const double R = s.sphere_radius();
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                         {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                         {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& p : v) p = p * (R / norm(p));
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& tr : f) {
    const Vec3 a = v[static_cast<std::size_t>(tr[0])], b = v[static_cast<std::size_t>(tr[1])],
               c = v[static_cast<std::size_t>(tr[2])];
    if (dot(cross(b - a, c - a), a + b + c) < 0.0) std::swap(tr[1], tr[2]);
  }

  TriMesh m;
  m.geom = MeshGeom::Sphere;
  m.surf = s;
  m.verts = std::move(v);
  m.tris = std::move(f);
  m.hole_of_vertex.assign(m.verts.size(), -1);
  m.closed = true;

  while (compute_h_max(m) > target_h) {
    std::unordered_map<std::int64_t, int> midpoint;
    const std::int64_t nv0 = m.nv();
    auto mid = [&](int a, int b) {
      const std::int64_t key = std::int64_t(std::min(a, b)) * nv0 + std::max(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 p = m.verts[static_cast<std::size_t>(a)] + m.verts[static_cast<std::size_t>(b)];
      p = p * (R / norm(p));
      const int id = m.nv();
      m.verts.push_back(p);
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> nf;
    nf.reserve(m.tris.size() * 4);
    for (const auto& tr : m.tris) {
      const int a = tr[0], b = tr[1], c = tr[2];
      const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      nf.push_back({a, ab, ca});
      nf.push_back({ab, b, bc});
      nf.push_back({ca, bc, c});
      nf.push_back({ab, bc, ca});
    }
    m.tris = std::move(nf);
    m.hole_of_vertex.assign(m.verts.size(), -1);
    require(m.nv() <= vertex_cap, ErrorKind::Capacity,
            "icosphere refinement exceeds the vertex budget (" + std::to_string(vertex_cap) + ")");
  }
  finalize_mesh(m);
  return m;
}

TriMesh torus_grid(const ModelSurface& s, double target_h, int vertex_cap) {
  const auto& bb = s.lattice_basis();
  const Vec3 a1{bb[0][0], bb[0][1], 0.0}, a2{bb[1][0], bb[1][1], 0.0};
  // Split each lattice cell along its shorter diagonal.
  const bool diag_up = norm(a2 - a1) <= norm(a1 + a2);
  const double e_max = std::max({norm(a1), norm(a2), diag_up ? norm(a2 - a1) : norm(a1 + a2)});
  const int n = std::max(8, static_cast<int>(std::ceil(e_max / target_h)));
  require(static_cast<std::int64_t>(n) * n <= vertex_cap, ErrorKind::Capacity,
          "torus grid exceeds the vertex budget (" + std::to_string(vertex_cap) + ")");

  TriMesh m;
  m.geom = MeshGeom::Torus;
  m.surf = s;
  m.verts.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m.verts.push_back(s.torus_point(static_cast<double>(i) / n, static_cast<double>(j) / n).p);

  auto id = [n](int i, int j) { return (i % n) * n + (j % n); };
  auto sh = [n](int i, int j) { return Vec2i{i == n ? 1 : 0, j == n ? 1 : 0}; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // Cell corners with explicit wrap shifts.
      const int p00 = id(i, j), p10 = id(i + 1, j), p01 = id(i, j + 1), p11 = id(i + 1, j + 1);
      const Vec2i s00 = sh(i, j), s10 = sh(i + 1, j), s01 = sh(i, j + 1), s11 = sh(i + 1, j + 1);
      if (diag_up) {
        m.tris.push_back({p00, p10, p01});
        m.shifts.push_back({s00, s10, s01});
        m.tris.push_back({p10, p11, p01});
        m.shifts.push_back({s10, s11, s01});
      } else {
        m.tris.push_back({p00, p10, p11});
        m.shifts.push_back({s00, s10, s11});
        m.tris.push_back({p00, p11, p01});
        m.shifts.push_back({s00, s11, s01});
      }
    }
  }
  m.hole_of_vertex.assign(m.verts.size(), -1);
  m.closed = true;
  finalize_mesh(m);
  return m;
}

}  // namespace

TriMesh mesh_closed_surface(const ModelSurface& s, double target_h, int vertex_cap) {
  require(target_h > 0.0 && target_h < s.injectivity_radius(), ErrorKind::Domain,
          "mesh_closed_surface: target edge length outside (0, injectivity radius)");
  return s.kind() == SurfaceKind::Sphere ? icosphere(s, target_h, vertex_cap)
                                         : torus_grid(s, target_h, vertex_cap);
}

// === charts and ring machinery ============================================

namespace {

// Geodesic polar chart around a center point; consistent with tangent_frame,
// so generated ring vertices land at exact angles 2*pi*i/n.
struct Chart {
  MeshGeom geom = MeshGeom::Plane;
  const ModelSurface* surf = nullptr;
  Vec3 center{};
  Vec3 nhat{}, e1{}, e2{};
  double R = 0.0;

  static Chart at(MeshGeom geom, const ModelSurface* surf, const Vec3& center) {
    Chart c;
    c.geom = geom;
    c.surf = surf;
    c.center = center;
    if (geom == MeshGeom::Sphere) {
      c.R = surf->sphere_radius();
      c.nhat = normalized(center);
      const auto fr = surface::tangent_frame(c.nhat);
      c.e1 = fr[0];
      c.e2 = fr[1];
    }
    return c;
  }

  Vec2 map(const Vec3& rep) const {
    if (geom == MeshGeom::Sphere) {
      const Vec3 q = normalized(rep);
      const double ct = std::clamp(dot(q, nhat), -1.0, 1.0);
      const double theta = std::acos(ct);
      const Vec3 d = q - nhat * ct;
      const double dn = norm(d);
      if (dn < 1e-300) return {0.0, 0.0};
      const double t = R * theta;
      return {t * dot(d, e1) / dn, t * dot(d, e2) / dn};
    }
    if (geom == MeshGeom::Torus)
      return surf->torus_delta(SurfacePoint{center}, SurfacePoint{rep});
    return {rep.x - center.x, rep.y - center.y};
  }

  // Representative coordinates of n ring points at geodesic radius t,
  // at chart angles exactly 2*pi*i/n.
  std::vector<Vec3> ring(double t, int n) const {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(n));
    if (geom == MeshGeom::Plane) {
      for (int i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * i / n;
        out.push_back({center.x + t * std::cos(a), center.y + t * std::sin(a), 0.0});
      }
      return out;
    }
    const auto pts = surf->geodesic_circle_points(SurfacePoint{center}, t, n);
    for (const auto& p : pts) out.push_back(p.p);
    return out;
  }

  double circumference(double t) const {
    if (geom == MeshGeom::Plane) return 2.0 * kPi * t;
    return surf->disk_boundary_length(t);
  }

  // Representative at geodesic radius t and chart angle th; exact inverse of
  // map on the polar chart.
  Vec3 at_angle(double t, double th) const {
    if (geom == MeshGeom::Sphere) {
      const double a = t / R;
      const Vec3 q = nhat * std::cos(a) + (e1 * std::cos(th) + e2 * std::sin(th)) * std::sin(a);
      return q * R;
    }
    const Vec3 raw{center.x + t * std::cos(th), center.y + t * std::sin(th), 0.0};
    if (geom == MeshGeom::Torus) return surf->make_point(raw).p;
    return raw;
  }
};

struct Cycle {
  std::vector<int> ids;
  std::vector<double> ang;  // chart angles, same order
  std::vector<Vec2> xy;     // chart positions, same order (used by the zipper)
};

// Merges two star-shaped cycles around the chart origin (a strictly inside
// b, both counterclockwise) into a band of |a| + |b| triangles.
bool zip_cycles(const Cycle& a, const Cycle& b, std::vector<std::array<int, 3>>& out) {
  const std::size_t na = a.ids.size(), nb = b.ids.size();
  if (na < 3 || nb < 3) return false;

  // Unwrap a cyclically-monotone angle sequence starting at index s: every
  // consecutive step must be counterclockwise (nearest-branch difference
  // nonnegative) and the steps must close up to exactly one revolution.
  auto unwrap = [](const std::vector<double>& ang, std::size_t s, std::vector<double>& u) {
    const std::size_t n = ang.size();
    u.resize(n + 1);
    u[0] = ang[s];
    for (std::size_t i = 1; i <= n; ++i) {
      const double step =
          std::remainder(ang[(s + i) % n] - ang[(s + i - 1) % n], 2.0 * kPi);
      if (step < -1e-12) return false;
      u[i] = u[i - 1] + step;
    }
    return std::abs(u[n] - u[0] - 2.0 * kPi) < 1e-9;
  };

  const std::size_t sa = static_cast<std::size_t>(
      std::min_element(a.ang.begin(), a.ang.end()) - a.ang.begin());
  std::vector<double> ua;
  if (!unwrap(a.ang, sa, ua)) return false;

  // Start b at the vertex angularly nearest a's start, signed into
  // [ua[0] - pi, ua[0] + pi).
  std::size_t sb = 0;
  double best = 1e300;
  for (std::size_t j = 0; j < nb; ++j) {
    double d = std::remainder(b.ang[j] - ua[0], 2.0 * kPi);
    if (std::abs(d) < best) {
      best = std::abs(d);
      sb = j;
    }
  }
  std::vector<double> ub;
  if (!unwrap(b.ang, sb, ub)) return false;
  const double off = std::remainder(ub[0] - ua[0], 2.0 * kPi);
  const double shift = (ua[0] + off) - ub[0];
  for (double& v : ub) v += shift;

  // Advance by angle, but veto a candidate triangle that would collapse or
  // invert in the chart (near-radial jagged edges can defeat the angle rule);
  // the signed-area veto needs chart positions on both cycles.
  const bool have_xy = a.xy.size() == na && b.xy.size() == nb;
  auto area2 = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
  };
  std::size_t i = 0, j = 0;
  while (i < na || j < nb) {
    const std::size_t ia = (sa + i) % na, jb = (sb + j) % nb;
    const int A = a.ids[ia], B = b.ids[jb];
    bool take_a;
    if (i == na)
      take_a = false;
    else if (j == nb)
      take_a = true;
    else
      take_a = ua[i + 1] <= ub[j + 1];
    if (have_xy && i < na && j < nb) {
      const double qa = area2(a.xy[ia], b.xy[jb], a.xy[(sa + i + 1) % na]);
      const double qb = area2(a.xy[ia], b.xy[jb], b.xy[(sb + j + 1) % nb]);
      if (take_a && qa <= 1e-18 && qb > 1e-18) take_a = false;
      if (!take_a && qb <= 1e-18 && qa > 1e-18) take_a = true;
    }
    if (take_a) {
      out.push_back({A, B, a.ids[(sa + i + 1) % na]});
      ++i;
    } else {
      out.push_back({A, B, b.ids[(sb + j + 1) % nb]});
      ++j;
    }
  }
  return true;
}

struct Ring {
  double t = 0.0;
  int n = 0;
};

// Ring radii and counts from the hole circle (radius r) out to t_out:
// geometric grading near the hole, uniform steps once the gap reaches the
// background scale, at least rings_min rings beyond the hole circle.
std::vector<Ring> hole_ladder(const Chart& chart, double r, double t_out, double h0, double ratio,
                              int rings_min) {
  std::vector<double> ts{r};
  if (t_out > 1.05 * r) {
    double t = r;
    while (true) {
      const double gap = std::min(0.9 * h0, t * (ratio - 1.0));
      const double next = t + gap;
      if (next >= t_out - 0.45 * gap) {
        ts.push_back(t_out);
        break;
      }
      ts.push_back(next);
      t = next;
    }
    if (static_cast<int>(ts.size()) < rings_min + 1) {
      ts.clear();
      const double rho = std::pow(t_out / r, 1.0 / rings_min);
      for (int m = 0; m <= rings_min; ++m) ts.push_back(r * std::pow(rho, m));
      ts.back() = t_out;
    }
  }
  std::vector<Ring> rings;
  int prev_n = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double gap = (i + 1 < ts.size()) ? ts[i + 1] - ts[i]
                       : (i > 0)           ? ts[i] - ts[i - 1]
                                           : 0.9 * h0;
    int n = std::max(16, static_cast<int>(std::ceil(chart.circumference(ts[i]) / gap)));
    n = std::max(n, prev_n);
    rings.push_back({ts[i], n});
    prev_n = n;
  }
  return rings;
}

// Appends ring vertices; returns the cycle (exact angles). On the torus the
// caller later derives triangle shifts through the chart.
Cycle append_ring(TriMesh& m, const Chart& chart, const Ring& ring, int hole_tag) {
  Cycle c;
  const std::vector<Vec3> pts = chart.ring(ring.t, ring.n);
  for (int i = 0; i < ring.n; ++i) {
    c.ids.push_back(m.nv());
    c.ang.push_back(2.0 * kPi * i / ring.n);
    c.xy.push_back(chart.map(pts[static_cast<std::size_t>(i)]));
    m.verts.push_back(pts[static_cast<std::size_t>(i)]);
    m.hole_of_vertex.push_back(hole_tag);
  }
  return c;
}

// Per-corner lattice shifts for torus triangles generated inside one chart:
// every corner is translated to the representative nearest the chart center.
void assign_chart_shifts(TriMesh& m, const Chart& chart, std::size_t first_tri) {
  if (m.geom != MeshGeom::Torus) return;
  const SurfacePoint c{chart.center};
  m.shifts.resize(m.tris.size(), {Vec2i{0, 0}, Vec2i{0, 0}, Vec2i{0, 0}});
  for (std::size_t t = first_tri; t < m.tris.size(); ++t) {
    for (int e = 0; e < 3; ++e) {
      Vec2i sh{0, 0};
      chart.surf->torus_delta(c, SurfacePoint{m.verts[static_cast<std::size_t>(
                                     m.tris[t][static_cast<std::size_t>(e)])]},
                              &sh);
      m.shifts[t][static_cast<std::size_t>(e)] = sh;
    }
  }
}

// Chart-space orientation check for the triangles in [first, end).
bool chart_triangles_ccw(const TriMesh& m, const Chart& chart, std::size_t first) {
  for (std::size_t t = first; t < m.tris.size(); ++t) {
    Vec2 p[3];
    for (int e = 0; e < 3; ++e)
      p[e] = chart.map(m.verts[static_cast<std::size_t>(m.tris[t][static_cast<std::size_t>(e)])]);
    const double az = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) -
                      (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    if (!(az > 1e-18)) return false;
  }
  return true;
}

// === Delaunay edge flips ===================================================

// Unwraps the two triangles adjacent to an interior edge into one coherent
// chart. Returns corner positions of (u, v, w0, w1) where w0/w1 are the
// third corners of t0/t1, plus the local corner indices.
struct QuadView {
  int u = -1, v = -1, w0 = -1, w1 = -1;
  Vec3 pu, pv, pw0, pw1;
};

bool quad_view(const TriMesh& m, const EdgeRec& e, QuadView& q) {
  const auto& T0 = m.tris[static_cast<std::size_t>(e.t0)];
  const auto& T1 = m.tris[static_cast<std::size_t>(e.t1)];
  // Locate the directed edge (u, v) in t0 (and its reverse in t1).
  int i0 = -1;
  for (int i = 0; i < 3; ++i) {
    const int a = T0[static_cast<std::size_t>(i)], b = T0[static_cast<std::size_t>((i + 1) % 3)];
    if ((a == e.a && b == e.b) || (a == e.b && b == e.a)) i0 = i;
  }
  if (i0 < 0) return false;
  q.u = T0[static_cast<std::size_t>(i0)];
  q.v = T0[static_cast<std::size_t>((i0 + 1) % 3)];
  q.w0 = T0[static_cast<std::size_t>((i0 + 2) % 3)];
  int i1 = -1;
  for (int i = 0; i < 3; ++i)
    if (T1[static_cast<std::size_t>(i)] == q.v && T1[static_cast<std::size_t>((i + 1) % 3)] == q.u)
      i1 = i;
  if (i1 < 0) return false;  // orientation anomaly
  q.w1 = T1[static_cast<std::size_t>((i1 + 2) % 3)];

  const auto c0 = m.corners(e.t0), c1 = m.corners(e.t1);
  q.pu = c0[static_cast<std::size_t>(i0)];
  q.pv = c0[static_cast<std::size_t>((i0 + 1) % 3)];
  q.pw0 = c0[static_cast<std::size_t>((i0 + 2) % 3)];
  // Align t1's chart to t0's through the shared corner v.
  const Vec3 tau = q.pv - c1[static_cast<std::size_t>(i1)];
  if (norm((c1[static_cast<std::size_t>((i1 + 1) % 3)] + tau) - q.pu) > 1e-9) return false;
  q.pw1 = c1[static_cast<std::size_t>((i1 + 2) % 3)] + tau;
  return true;
}

double cot_at(const Vec3& apex, const Vec3& a, const Vec3& b) {
  const Vec3 u = a - apex, w = b - apex;
  const double cr = norm(cross(u, w));
  if (cr < 1e-300) return 1e300;
  return dot(u, w) / cr;
}

Vec2i shift_from_position(const ModelSurface& s, const Vec3& pos, const Vec3& rep) {
  const auto& b = s.lattice_basis();
  const double det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
  const double dx = pos.x - rep.x, dy = pos.y - rep.y;
  return {static_cast<int>(std::lround((dx * b[1][1] - dy * b[1][0]) / det)),
          static_cast<int>(std::lround((b[0][0] * dy - b[0][1] * dx) / det))};
}

void set_triangle(TriMesh& m, int t, const std::array<int, 3>& ids,
                  const std::array<Vec3, 3>& pos) {
  m.tris[static_cast<std::size_t>(t)] = ids;
  if (m.geom == MeshGeom::Torus) {
    for (int e = 0; e < 3; ++e)
      m.shifts[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)] = shift_from_position(
          *m.surf, pos[static_cast<std::size_t>(e)],
          m.verts[static_cast<std::size_t>(ids[static_cast<std::size_t>(e)])]);
  }
}

int flip_pass(TriMesh& m) {
  const std::vector<EdgeRec> edges = collect_edges(m);
  std::unordered_set<std::int64_t> edge_set;
  edge_set.reserve(edges.size());
  const std::int64_t nv = m.nv();
  for (const EdgeRec& e : edges) edge_set.insert(std::int64_t(e.a) * nv + e.b);

  // Triangles change as we flip; track which are stale within this pass.
  std::vector<char> dirty(static_cast<std::size_t>(m.nt()), 0);
  int flips = 0;
  for (const EdgeRec& e : edges) {
    if (e.t1 == -1) continue;
    if (dirty[static_cast<std::size_t>(e.t0)] || dirty[static_cast<std::size_t>(e.t1)]) continue;
    QuadView q;
    if (!quad_view(m, e, q)) continue;
    const double crit = cot_at(q.pw0, q.pu, q.pv) + cot_at(q.pw1, q.pv, q.pu);
    if (crit >= -1e-10) continue;
    const std::int64_t newkey = std::int64_t(std::min(q.w0, q.w1)) * nv + std::max(q.w0, q.w1);
    if (q.w0 == q.w1 || edge_set.count(newkey)) continue;
    // New triangles (w0, u, w1) and (w1, v, w0) must stay valid.
    const std::array<Vec3, 3> n0{q.pw0, q.pu, q.pw1}, n1{q.pw1, q.pv, q.pw0};
    if (orientation_measure(m.geom, n0) <= 0.0 || orientation_measure(m.geom, n1) <= 0.0) continue;
    if (norm(cross(n0[1] - n0[0], n0[2] - n0[0])) < 1e-16 ||
        norm(cross(n1[1] - n1[0], n1[2] - n1[0])) < 1e-16)
      continue;
    set_triangle(m, e.t0, {q.w0, q.u, q.w1}, n0);
    set_triangle(m, e.t1, {q.w1, q.v, q.w0}, n1);
    dirty[static_cast<std::size_t>(e.t0)] = dirty[static_cast<std::size_t>(e.t1)] = 1;
    edge_set.erase(std::int64_t(std::min(q.u, q.v)) * nv + std::max(q.u, q.v));
    edge_set.insert(newkey);
    ++flips;
  }
  return flips;
}

void flip_to_delaunay(TriMesh& m, int max_sweeps = 60) {
  for (int s = 0; s < max_sweeps; ++s)
    if (flip_pass(m) == 0) return;
}

// === smoothing =============================================================

std::vector<std::vector<int>> vertex_triangles(const TriMesh& m) {
  std::vector<std::vector<int>> vt(static_cast<std::size_t>(m.nv()));
  for (int t = 0; t < m.nt(); ++t)
    for (int e = 0; e < 3; ++e) vt[static_cast<std::size_t>(m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)])].push_back(t);
  return vt;
}

// Laplacian smoothing of the given vertices (boundary vertices are skipped),
// with an inversion guard; returns how many vertices moved.
// Commit a tentative move of v to target (a representative near v's current
// one): rejects stars that invert or degenerate, keeps torus shifts coherent.
bool commit_move(TriMesh& m, int v, const std::vector<std::vector<int>>& vt, const Vec3& target) {
  const Vec3 rep = m.verts[static_cast<std::size_t>(v)];
  Vec3 new_rep = target;
  if (m.geom == MeshGeom::Torus) new_rep = m.surf->make_point(target).p;
  const Vec3 delta_world = target - rep;
  for (int t : vt[static_cast<std::size_t>(v)]) {
    auto c = m.corners(t);
    for (int e = 0; e < 3; ++e)
      if (m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)] == v)
        c[static_cast<std::size_t>(e)] += delta_world;
    if (orientation_measure(m.geom, c) <= 0.0 ||
        norm(cross(c[1] - c[0], c[2] - c[0])) < 1e-16)
      return false;
  }
  if (m.geom == MeshGeom::Torus) {
    for (int t : vt[static_cast<std::size_t>(v)]) {
      const auto c = m.corners(t);
      for (int e = 0; e < 3; ++e)
        if (m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)] == v)
          m.shifts[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)] =
              shift_from_position(*m.surf, c[static_cast<std::size_t>(e)] + delta_world, new_rep);
    }
  }
  m.verts[static_cast<std::size_t>(v)] = new_rep;
  return true;
}

// Minimum corner angle over v's star when v is displaced by delta within each
// incident triangle's representative frame; -1 when the star inverts.
double star_min_angle_if(const TriMesh& m, int v, const std::vector<std::vector<int>>& vt,
                         const Vec3& delta) {
  double amin = 1e9;
  for (int t : vt[static_cast<std::size_t>(v)]) {
    auto c = m.corners(t);
    for (int e = 0; e < 3; ++e)
      if (m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)] == v)
        c[static_cast<std::size_t>(e)] += delta;
    if (orientation_measure(m.geom, c) <= 0.0 ||
        norm(cross(c[1] - c[0], c[2] - c[0])) < 1e-16)
      return -1.0;
    const auto ang = triangle_angles(c);
    amin = std::min({amin, ang[0], ang[1], ang[2]});
  }
  return amin;
}

int smooth_vertices(TriMesh& m, const std::vector<int>& verts_to_move,
                    const std::vector<std::vector<int>>& vt) {
  int moved = 0;
  for (int v : verts_to_move) {
    if (vt[static_cast<std::size_t>(v)].empty()) continue;
    // Boundary vertices may only slide along their hole circle, and only once
    // the circle's center and radius are on record.
    const int tag = m.on_boundary(v) ? m.hole_of_vertex[static_cast<std::size_t>(v)] : -1;
    if (m.on_boundary(v) &&
        (tag < 0 || tag >= static_cast<int>(m.hole_centers.size()) ||
         tag >= static_cast<int>(m.hole_radii.size())))
      continue;
    const Vec3 rep = m.verts[static_cast<std::size_t>(v)];
    Vec3 acc{0, 0, 0};
    int cnt = 0;
    for (int t : vt[static_cast<std::size_t>(v)]) {
      const auto c = m.corners(t);
      int lv = -1;
      for (int e = 0; e < 3; ++e)
        if (m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)] == v) lv = e;
      const Vec3 off = c[static_cast<std::size_t>(lv)] - rep;  // chart translation
      for (int e = 0; e < 3; ++e) {
        if (e == lv) continue;
        acc += c[static_cast<std::size_t>(e)] - off;
        ++cnt;
      }
    }
    Vec3 target = acc / static_cast<double>(cnt);
    if (tag >= 0) {
      const Chart hc =
          Chart::at(m.geom, m.surf ? &*m.surf : nullptr, m.hole_centers[static_cast<std::size_t>(tag)]);
      const Vec2 xy = hc.map(target);
      if (std::hypot(xy[0], xy[1]) < 1e-300) continue;
      Vec3 proj = hc.at_angle(m.hole_radii[static_cast<std::size_t>(tag)], std::atan2(xy[1], xy[0]));
      if (m.geom == MeshGeom::Torus) {
        const Vec2 d = m.surf->torus_delta(SurfacePoint{rep}, SurfacePoint{proj});
        proj = rep + Vec3{d[0], d[1], 0.0};
      }
      target = proj;
    } else if (m.geom == MeshGeom::Sphere) {
      target = target * (m.surf->sphere_radius() / norm(target));
    } else if (m.geom == MeshGeom::Plane) {
      target.z = 0.0;
    }

    if (commit_move(m, v, vt, target)) ++moved;
  }
  return moved;
}

// Greedy per-vertex pattern search maximizing the star's minimum angle; used
// on the pockets Laplacian smoothing leaves at a poor equilibrium. Boundary
// vertices search along their hole circle, interior ones over the tangent
// plane (sphere candidates re-projected to the surface).
int polish_vertices(TriMesh& m, const std::vector<int>& verts,
                    const std::vector<std::vector<int>>& vt) {
  int moved = 0;
  for (int v : verts) {
    if (vt[static_cast<std::size_t>(v)].empty()) continue;
    const int tag = m.on_boundary(v) ? m.hole_of_vertex[static_cast<std::size_t>(v)] : -1;
    if (m.on_boundary(v) &&
        (tag < 0 || tag >= static_cast<int>(m.hole_centers.size()) ||
         tag >= static_cast<int>(m.hole_radii.size())))
      continue;
    double scale = 0.0;
    int ne = 0;
    for (int t : vt[static_cast<std::size_t>(v)]) {
      const auto c = m.corners(t);
      scale += norm(c[1] - c[0]) + norm(c[2] - c[1]) + norm(c[0] - c[2]);
      ne += 3;
    }
    scale /= static_cast<double>(ne);
    bool vertex_moved = false;
    for (int shrink = 0; shrink < 4; ++shrink) {
      const double step = 0.3 * scale * std::pow(0.4, shrink);
      for (int pass = 0; pass < 8; ++pass) {
        const Vec3 rep = m.verts[static_cast<std::size_t>(v)];
        const double cur = star_min_angle_if(m, v, vt, Vec3{0, 0, 0});
        std::vector<Vec3> cands;
        if (tag >= 0) {
          const Chart hc = Chart::at(m.geom, m.surf ? &*m.surf : nullptr,
                                     m.hole_centers[static_cast<std::size_t>(tag)]);
          const double r = m.hole_radii[static_cast<std::size_t>(tag)];
          const Vec2 xy = hc.map(rep);
          const double th = std::atan2(xy[1], xy[0]);
          for (const double sgn : {1.0, -1.0}) {
            Vec3 proj = hc.at_angle(r, th + sgn * step / r);
            if (m.geom == MeshGeom::Torus) {
              const Vec2 d = m.surf->torus_delta(SurfacePoint{rep}, SurfacePoint{proj});
              proj = rep + Vec3{d[0], d[1], 0.0};
            }
            cands.push_back(proj);
          }
        } else {
          Vec3 b1{1, 0, 0}, b2{0, 1, 0};
          if (m.geom == MeshGeom::Sphere) {
            const auto fr = surface::tangent_frame(normalized(rep));
            b1 = fr[0];
            b2 = fr[1];
          }
          for (int d = 0; d < 8; ++d) {
            const double a = 2.0 * kPi * d / 8.0;
            Vec3 cand = rep + (b1 * std::cos(a) + b2 * std::sin(a)) * step;
            if (m.geom == MeshGeom::Sphere)
              cand = cand * (m.surf->sphere_radius() / norm(cand));
            if (m.geom != MeshGeom::Sphere) cand.z = 0.0;
            cands.push_back(cand);
          }
        }
        Vec3 best{};
        double best_gain = 1e-12;
        for (const Vec3& cand : cands) {
          const double a = star_min_angle_if(m, v, vt, cand - rep);
          if (a - cur > best_gain) {
            best_gain = a - cur;
            best = cand;
          }
        }
        if (best_gain <= 1e-12 || !commit_move(m, v, vt, best)) break;
        vertex_moved = true;
      }
    }
    if (vertex_moved) ++moved;
  }
  return moved;
}

double min_angle_deg(const TriMesh& m) {
  double a = 1e300;
  for (int t = 0; t < m.nt(); ++t) {
    const auto ang = triangle_angles(m.corners(t));
    a = std::min({a, ang[0], ang[1], ang[2]});
  }
  return a * 180.0 / kPi;
}

void improve_quality(TriMesh& m, double target_deg = 20.0, int rounds = 24) {
  flip_to_delaunay(m);
  for (int r = 0; r < rounds; ++r) {
    if (min_angle_deg(m) >= target_deg) return;
    const auto vt = vertex_triangles(m);
    std::vector<int> bad;
    const double thresh = (target_deg + 1.5) * kPi / 180.0;
    for (int t = 0; t < m.nt(); ++t) {
      const auto ang = triangle_angles(m.corners(t));
      if (std::min({ang[0], ang[1], ang[2]}) < thresh)
        for (int e = 0; e < 3; ++e) bad.push_back(m.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)]);
    }
    std::sort(bad.begin(), bad.end());
    bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
    int moved = smooth_vertices(m, bad, vt);
    flip_to_delaunay(m);
    if (min_angle_deg(m) >= target_deg) return;
    const auto vt_post = vertex_triangles(m);
    moved += polish_vertices(m, bad, vt_post);
    flip_to_delaunay(m);
    if (moved == 0) break;
  }
}

}  // namespace

// === domain mesher =========================================================

TriMesh mesh_domain(const ModelSurface& s, const packing::DomainSpec& d, const Grading& g) {
  require(g.ring_ratio > 1.0 && g.ring_ratio <= 2.0, ErrorKind::Usage,
          "mesh_domain: ring_ratio must lie in (1, 2]");
  require(g.rings_min >= 1, ErrorKind::Usage, "mesh_domain: rings_min must be at least 1");
  const int k = d.pack.k();
  if (k == 0) return mesh_closed_surface(s, g.h0, g.vertex_cap);

  TriMesh bg = mesh_closed_surface(s, g.h0, g.vertex_cap);
  const double hb = bg.h_max;
  const double inj = s.injectivity_radius();

  // Matching radius: ~ min_separation / 4, shrunk when the background is too
  // coarse to keep carve regions disjoint, capped by the chart range.
  std::vector<double> t_out(static_cast<std::size_t>(k)), t_carve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const double r = d.pack.radii[static_cast<std::size_t>(j)];
    double base = std::min({d.pack.min_separation / 4.0, d.pack.min_separation / 2.0 - 3.2 * hb,
                            inj / 3.0});
    if (base < 1.05 * r) base = r;  // giant hole: mesh the circle, zip directly
    require(base >= r, ErrorKind::Meshing,
            "hole " + std::to_string(j) + ": background too coarse for this hole radius");
    require(base + 3.2 * hb < 0.98 * inj, ErrorKind::Meshing,
            "hole " + std::to_string(j) + ": carve region exceeds the chart range");
    t_out[static_cast<std::size_t>(j)] = base;
    t_carve[static_cast<std::size_t>(j)] = base + 0.7 * hb;
  }
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      require(t_carve[static_cast<std::size_t>(i)] + t_carve[static_cast<std::size_t>(j)] +
                      2.2 * hb <
                  s.distance(d.pack.centers[static_cast<std::size_t>(i)],
                             d.pack.centers[static_cast<std::size_t>(j)]),
              ErrorKind::Meshing,
              "holes " + std::to_string(i) + " and " + std::to_string(j) +
                  " are too close for the background resolution");

  // Carve: a triangle goes away when any corner vertex lies inside a carve
  // disk (per-vertex geodesic distances, so torus wrap is handled).
  std::vector<int> vert_hole(static_cast<std::size_t>(bg.nv()), -1);
  for (int v = 0; v < bg.nv(); ++v) {
    const SurfacePoint p{bg.verts[static_cast<std::size_t>(v)]};
    for (int j = 0; j < k; ++j) {
      if (s.distance(p, d.pack.centers[static_cast<std::size_t>(j)]) <
          t_carve[static_cast<std::size_t>(j)]) {
        require(vert_hole[static_cast<std::size_t>(v)] < 0, ErrorKind::Meshing,
                "carve disks overlap at a background vertex");
        vert_hole[static_cast<std::size_t>(v)] = j;
      }
    }
  }
  std::vector<int> tri_removed_by(static_cast<std::size_t>(bg.nt()), -1);
  for (int t = 0; t < bg.nt(); ++t) {
    for (int e = 0; e < 3; ++e) {
      const int h = vert_hole[static_cast<std::size_t>(
          bg.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)])];
      if (h >= 0) {
        require(tri_removed_by[static_cast<std::size_t>(t)] < 0 ||
                    tri_removed_by[static_cast<std::size_t>(t)] == h,
                ErrorKind::Meshing, "carve disks overlap inside one triangle");
        tri_removed_by[static_cast<std::size_t>(t)] = h;
      }
    }
  }

  TriMesh m;
  m.geom = bg.geom;
  m.surf = bg.surf;
  std::vector<int> vmap(static_cast<std::size_t>(bg.nv()), -1);
  for (int t = 0; t < bg.nt(); ++t) {
    if (tri_removed_by[static_cast<std::size_t>(t)] >= 0) continue;
    std::array<int, 3> ids{};
    for (int e = 0; e < 3; ++e) {
      const int ov = bg.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)];
      if (vmap[static_cast<std::size_t>(ov)] < 0) {
        vmap[static_cast<std::size_t>(ov)] = m.nv();
        m.verts.push_back(bg.verts[static_cast<std::size_t>(ov)]);
        m.hole_of_vertex.push_back(-1);
      }
      ids[static_cast<std::size_t>(e)] = vmap[static_cast<std::size_t>(ov)];
    }
    m.tris.push_back(ids);
    if (m.geom == MeshGeom::Torus) m.shifts.push_back(bg.shifts[static_cast<std::size_t>(t)]);
  }
  require(!m.tris.empty(), ErrorKind::Meshing, "carving removed the entire background mesh");

  // Cavity cycles: boundary edges of the kept background whose reverse sat in
  // a removed triangle, grouped by the hole that removed it.
  std::vector<std::unordered_map<int, int>> cavity_next(static_cast<std::size_t>(k));
  {
    std::unordered_map<std::int64_t, int> owner;  // directed edge -> removing hole
    const std::int64_t nv0 = bg.nv();
    for (int t = 0; t < bg.nt(); ++t) {
      const int h = tri_removed_by[static_cast<std::size_t>(t)];
      if (h < 0) continue;
      for (int e = 0; e < 3; ++e) {
        const int u = bg.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)];
        const int v = bg.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>((e + 1) % 3)];
        owner[std::int64_t(u) * nv0 + v] = h;
      }
    }
    for (int t = 0; t < bg.nt(); ++t) {
      if (tri_removed_by[static_cast<std::size_t>(t)] >= 0) continue;
      for (int e = 0; e < 3; ++e) {
        const int u = bg.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)];
        const int v = bg.tris[static_cast<std::size_t>(t)][static_cast<std::size_t>((e + 1) % 3)];
        auto it = owner.find(std::int64_t(v) * nv0 + u);
        if (it == owner.end()) continue;
        const int h = it->second;
        // Kept triangles are CCW, so these directed edges run clockwise
        // around the cavity; record them reversed to walk counterclockwise.
        if (!cavity_next[static_cast<std::size_t>(h)]
                 .emplace(vmap[static_cast<std::size_t>(v)], vmap[static_cast<std::size_t>(u)])
                 .second)
          fail(ErrorKind::Meshing, "hole " + std::to_string(h) + ": pinched cavity boundary");
      }
    }
  }

  for (int j = 0; j < k; ++j) {
    const Chart chart =
        Chart::at(m.geom, m.surf ? &*m.surf : nullptr, d.pack.centers[static_cast<std::size_t>(j)].p);
    Cycle cavity;
    {
      auto& nextmap = cavity_next[static_cast<std::size_t>(j)];
      require(!nextmap.empty(), ErrorKind::Meshing,
              "hole " + std::to_string(j) + ": carve produced no cavity");
      int start = nextmap.begin()->first;
      for (const auto& kv : nextmap) start = std::min(start, kv.first);
      int v = start;
      do {
        cavity.ids.push_back(v);
        auto it = nextmap.find(v);
        require(it != nextmap.end(), ErrorKind::Meshing,
                "hole " + std::to_string(j) + ": open cavity chain");
        v = it->second;
      } while (v != start && cavity.ids.size() <= nextmap.size());
      require(v == start && cavity.ids.size() == nextmap.size(), ErrorKind::Meshing,
              "hole " + std::to_string(j) + ": cavity boundary is not a single cycle");
      for (int id : cavity.ids) {
        const Vec2 xy = chart.map(m.verts[static_cast<std::size_t>(id)]);
        cavity.ang.push_back(std::atan2(xy[1], xy[0]));
        cavity.xy.push_back(xy);
      }
    }

    const std::vector<Ring> rings =
        hole_ladder(chart, d.pack.radii[static_cast<std::size_t>(j)],
                    t_out[static_cast<std::size_t>(j)], hb, g.ring_ratio, g.rings_min);
    const std::size_t first_tri = m.tris.size();
    Cycle prev;
    for (std::size_t ri = 0; ri < rings.size(); ++ri) {
      Cycle cur = append_ring(m, chart, rings[ri], ri == 0 ? j : -1);
      if (ri > 0)
        require(zip_cycles(prev, cur, m.tris), ErrorKind::Meshing,
                "hole " + std::to_string(j) + ": ring stitch failed");
      prev = std::move(cur);
    }
    assign_chart_shifts(m, chart, first_tri);

    // The cavity polygon can fail to be star-shaped when the background is
    // coarse relative to the carve radius; smoothing its vertices rounds it.
    bool stitched = false;
    for (int attempt = 0; attempt < 4 && !stitched; ++attempt) {
      const std::size_t band_tri = m.tris.size();
      if (zip_cycles(prev, cavity, m.tris)) {
        assign_chart_shifts(m, chart, band_tri);
        if (chart_triangles_ccw(m, chart, first_tri)) {
          stitched = true;
          break;
        }
        m.tris.resize(band_tri);
        if (m.geom == MeshGeom::Torus) m.shifts.resize(band_tri);
      }
      const auto vt = vertex_triangles(m);
      smooth_vertices(m, cavity.ids, vt);
      for (std::size_t i = 0; i < cavity.ids.size(); ++i) {
        const Vec2 xy = chart.map(m.verts[static_cast<std::size_t>(cavity.ids[i])]);
        cavity.ang[i] = std::atan2(xy[1], xy[0]);
        cavity.xy[i] = xy;
      }
    }
    require(stitched, ErrorKind::Meshing, "hole " + std::to_string(j) + ": cavity stitch failed");
    m.hole_centers.push_back(d.pack.centers[static_cast<std::size_t>(j)].p);
    m.hole_radii.push_back(d.pack.radii[static_cast<std::size_t>(j)]);
  }

  require(m.nv() <= g.vertex_cap, ErrorKind::Capacity,
          "domain mesh exceeds the vertex budget (" + std::to_string(g.vertex_cap) + ")");
  improve_quality(m);
  require(min_angle_deg(m) >= 20.0 - 1e-9, ErrorKind::Meshing,
          "domain mesh quality below 20 degrees; refine h0");
  finalize_mesh(m);
  return m;
}

// === planar validation meshers ============================================

namespace {

// Concentric-ring triangulation helper shared by the disk and annulus
// meshers; rings listed inside-out, first cycle may be a center fan.
TriMesh rings_mesh(const std::vector<Ring>& rings, bool center_fan, int inner_tag, int outer_tag) {
  TriMesh m;
  m.geom = MeshGeom::Plane;
  const Chart chart = Chart::at(MeshGeom::Plane, nullptr, Vec3{0, 0, 0});
  Cycle prev;
  for (std::size_t i = 0; i < rings.size(); ++i) {
    int tag = -1;
    if (i == 0 && !center_fan && inner_tag >= 0) tag = inner_tag;
    if (i + 1 == rings.size() && outer_tag >= 0) tag = outer_tag;
    Cycle cur = append_ring(m, chart, rings[i], tag);
    if (i == 0 && center_fan) {
      const int cid = m.nv();
      m.verts.push_back({0, 0, 0});
      m.hole_of_vertex.push_back(-1);
      for (std::size_t a = 0; a < cur.ids.size(); ++a)
        m.tris.push_back({cid, cur.ids[a], cur.ids[(a + 1) % cur.ids.size()]});
    }
    if (i > 0)
      require(zip_cycles(prev, cur, m.tris), ErrorKind::Meshing, "ring stitch failed");
    prev = std::move(cur);
  }
  improve_quality(m);
  require(min_angle_deg(m) >= 20.0 - 1e-9, ErrorKind::Meshing,
          "planar mesh quality below 20 degrees; refine h");
  finalize_mesh(m);
  return m;
}

}  // namespace

TriMesh unit_disk_mesh(double h, double radius) {
  require(h > 0.0 && h < radius, ErrorKind::Usage, "unit_disk_mesh: edge target out of range");
  const int mrings = std::max(2, static_cast<int>(std::ceil(radius / (0.95 * h))));
  const double gp = radius / mrings;
  std::vector<Ring> rings;
  int prev_n = 0;
  for (int i = 1; i <= mrings; ++i) {
    int n = std::max(6, static_cast<int>(std::ceil(2.0 * kPi * (i * gp) / gp)));
    n = std::max(n, prev_n);
    rings.push_back({i * gp, n});
    prev_n = n;
  }
  return rings_mesh(rings, true, -1, 0);
}

TriMesh planar_annulus_mesh(double r_in, double r_out, double h) {
  require(r_in > 0.0 && r_out > r_in, ErrorKind::Usage, "planar_annulus_mesh: bad radii");
  require(h > 0.0 && h < r_out - r_in, ErrorKind::Usage, "planar_annulus_mesh: edge target out of range");
  const int mrings = std::max(1, static_cast<int>(std::ceil((r_out - r_in) / (0.95 * h))));
  const double gp = (r_out - r_in) / mrings;
  std::vector<Ring> rings;
  int prev_n = 0;
  for (int i = 0; i <= mrings; ++i) {
    const double t = r_in + i * gp;
    int n = std::max(16, static_cast<int>(std::ceil(2.0 * kPi * t / gp)));
    n = std::max(n, prev_n);
    rings.push_back({t, n});
    prev_n = n;
  }
  return rings_mesh(rings, false, 0, 1);
}

// === hole filling ==========================================================

TriMesh fill_holes(const TriMesh& domain, const std::vector<int>& holes) {
  require(!domain.closed, ErrorKind::Usage, "fill_holes: mesh has no holes");
  std::vector<int> list = holes;
  if (list.empty())
    for (int j = 0; j < domain.n_holes(); ++j) list.push_back(j);
  for (int j : list)
    require(j >= 0 && j < domain.n_holes(), ErrorKind::Usage, "fill_holes: hole id out of range");

  TriMesh m = domain;
  std::vector<char> filled(static_cast<std::size_t>(domain.n_holes()), 0);
  for (int j : list) {
    require(!filled[static_cast<std::size_t>(j)], ErrorKind::Usage, "fill_holes: hole listed twice");
    filled[static_cast<std::size_t>(j)] = 1;
    const std::vector<int>& loop = domain.loops[static_cast<std::size_t>(j)];

    // Chart center: unwrap the loop around its first vertex and average.
    Vec3 center{0, 0, 0};
    if (m.geom == MeshGeom::Torus) {
      const SurfacePoint p0{m.verts[static_cast<std::size_t>(loop[0])]};
      Vec3 acc{0, 0, 0};
      for (int v : loop) {
        const Vec2 dxy = m.surf->torus_delta(p0, SurfacePoint{m.verts[static_cast<std::size_t>(v)]});
        acc += Vec3{p0.p.x + dxy[0], p0.p.y + dxy[1], 0.0};
      }
      center = m.surf->make_point(acc / static_cast<double>(loop.size())).p;
    } else {
      Vec3 acc{0, 0, 0};
      for (int v : loop) acc += m.verts[static_cast<std::size_t>(v)];
      acc = acc / static_cast<double>(loop.size());
      if (m.geom == MeshGeom::Sphere) acc = acc * (m.surf->sphere_radius() / norm(acc));
      center = acc;
    }
    const Chart chart = Chart::at(m.geom, m.surf ? &*m.surf : nullptr, center);

    Cycle cur;
    double r_est = 0.0;
    for (int v : loop) {
      const Vec2 xy = chart.map(m.verts[static_cast<std::size_t>(v)]);
      cur.ids.push_back(v);
      cur.ang.push_back(std::atan2(xy[1], xy[0]));
      cur.xy.push_back(xy);
      r_est += std::hypot(xy[0], xy[1]);
    }
    r_est /= static_cast<double>(loop.size());
    // The loop must run counterclockwise in the chart for the zipper.
    {
      double wind = 0.0;
      for (std::size_t i = 0; i < cur.ang.size(); ++i)
        wind += std::remainder(cur.ang[(i + 1) % cur.ang.size()] - cur.ang[i], 2.0 * kPi);
      if (wind < 0.0) {
        std::reverse(cur.ids.begin(), cur.ids.end());
        std::reverse(cur.ang.begin(), cur.ang.end());
        std::reverse(cur.xy.begin(), cur.xy.end());
      }
    }

    const std::size_t first_tri = m.tris.size();
    double cur_t = r_est;
    int cur_n = static_cast<int>(loop.size());
    const double ratio = 1.4;
    while (true) {
      const double spacing = chart.circumference(cur_t) / cur_n;
      const double gap = std::min(spacing, cur_t * (ratio - 1.0));
      const double next_t = cur_t - gap;
      if (cur_n <= 13 || next_t < 0.6 * gap) {
        const int cid = m.nv();
        m.verts.push_back(center);
        m.hole_of_vertex.push_back(-1);
        for (std::size_t a = 0; a < cur.ids.size(); ++a)
          m.tris.push_back({cid, cur.ids[a], cur.ids[(a + 1) % cur.ids.size()]});
        break;
      }
      const int next_n = std::max(
          10, std::min(cur_n, static_cast<int>(std::ceil(chart.circumference(next_t) / gap))));
      Cycle inner = append_ring(m, chart, Ring{next_t, next_n}, -1);
      require(zip_cycles(inner, cur, m.tris), ErrorKind::Meshing,
              "fill_holes: stitch failed at hole " + std::to_string(j));
      cur = std::move(inner);
      cur_t = next_t;
      cur_n = next_n;
    }
    assign_chart_shifts(m, chart, first_tri);
    require(chart_triangles_ccw(m, chart, first_tri), ErrorKind::Meshing,
            "fill_holes: inverted triangle at hole " + std::to_string(j));
  }

  // Only appended vertices may move: the original submesh must stay intact.
  {
    std::vector<int> movable;
    for (int v = domain.nv(); v < m.nv(); ++v) movable.push_back(v);
    if (!movable.empty()) {
      const auto vt = vertex_triangles(m);
      for (int r = 0; r < 12; ++r) {
        if (min_angle_deg(m) >= 20.0) break;
        int moved = smooth_vertices(m, movable, vt);
        moved += polish_vertices(m, movable, vt);
        if (moved == 0) break;
      }
    }
  }

  // Filled loops become interior; remaining holes get consecutive ids.
  std::vector<int> remap(static_cast<std::size_t>(domain.n_holes()), -1);
  int next_id = 0;
  for (int j = 0; j < domain.n_holes(); ++j)
    if (!filled[static_cast<std::size_t>(j)]) remap[static_cast<std::size_t>(j)] = next_id++;
  for (int v = 0; v < m.nv(); ++v) {
    int& tag = m.hole_of_vertex[static_cast<std::size_t>(v)];
    if (tag >= 0 && tag < domain.n_holes()) tag = remap[static_cast<std::size_t>(tag)];
  }
  m.hole_centers.clear();
  m.hole_radii.clear();
  for (int j = 0; j < domain.n_holes(); ++j) {
    if (filled[static_cast<std::size_t>(j)]) continue;
    if (j < static_cast<int>(domain.hole_centers.size())) {
      m.hole_centers.push_back(domain.hole_centers[static_cast<std::size_t>(j)]);
      m.hole_radii.push_back(domain.hole_radii[static_cast<std::size_t>(j)]);
    }
  }
  finalize_mesh(m);
  return m;
}

// === quality ===============================================================

QualityReport mesh_quality(const TriMesh& m) {
  QualityReport q;
  q.n_vertices = m.nv();
  q.n_triangles = m.nt();
  q.n_holes = m.n_holes();
  q.h_max = compute_h_max(m);
  q.total_area = total_area(m);
  double amin = 1e300, amax = 0.0;
  for (int t = 0; t < m.nt(); ++t) {
    const auto a = triangle_angles(m.corners(t));
    amin = std::min({amin, a[0], a[1], a[2]});
    amax = std::max({amax, a[0], a[1], a[2]});
  }
  q.min_angle_deg = amin * 180.0 / kPi;
  q.max_angle_deg = amax * 180.0 / kPi;
  const std::vector<EdgeRec> edges = collect_edges(m);
  q.euler_char = m.nv() - static_cast<int>(edges.size()) + m.nt();
  q.orientation_consistent = directed_edges_consistent(m);
  for (int j = 0; j < m.n_holes(); ++j) {
    q.loop_sizes.push_back(static_cast<int>(m.loops[static_cast<std::size_t>(j)].size()));
    q.loop_lengths.push_back(loop_length(m, j));
  }
  return q;
}

double loop_length(const TriMesh& m, int hole) {
  require(hole >= 0 && hole < m.n_holes(), ErrorKind::Usage, "loop_length: hole id out of range");
  const std::vector<int>& loop = m.loops[static_cast<std::size_t>(hole)];
  double len = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec3 a = m.verts[static_cast<std::size_t>(loop[i])];
    const Vec3 b = m.verts[static_cast<std::size_t>(loop[(i + 1) % loop.size()])];
    if (m.geom == MeshGeom::Torus) {
      const Vec2 dxy = m.surf->torus_delta(SurfacePoint{a}, SurfacePoint{b});
      len += std::hypot(dxy[0], dxy[1]);
    } else {
      len += dist(a, b);
    }
  }
  return len;
}

// === text format ===========================================================

void write_surfmesh(const TriMesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << "SURFMESH 1\n";
  if (m.geom == MeshGeom::Sphere) {
    out << "# surface sphere\n";
  } else if (m.geom == MeshGeom::Torus) {
    const auto& b = m.surf->lattice_basis();
    out << "# surface flat-torus " << fmt17(b[0][0]) << ' ' << fmt17(b[0][1]) << ' '
        << fmt17(b[1][0]) << ' ' << fmt17(b[1][1]) << '\n';
  } else {
    out << "# surface plane\n";
  }
  std::size_t eb = 0;
  for (const auto& loop : m.loops) eb += loop.size();
  out << m.nv() << ' ' << eb << ' ' << m.nt() << ' ' << m.n_holes() << '\n';
  for (int v = 0; v < m.nv(); ++v) {
    const Vec3& p = m.verts[static_cast<std::size_t>(v)];
    if (m.geom == MeshGeom::Sphere)
      out << fmt17(p.x) << ' ' << fmt17(p.y) << ' ' << fmt17(p.z);
    else
      out << fmt17(p.x) << ' ' << fmt17(p.y);
    const int tag = m.hole_of_vertex[static_cast<std::size_t>(v)];
    out << ' ' << (tag >= 0 ? 1 : 0) << ' ' << tag << '\n';
  }
  for (int t = 0; t < m.nt(); ++t) {
    const auto& tr = m.tris[static_cast<std::size_t>(t)];
    out << tr[0] << ' ' << tr[1] << ' ' << tr[2];
    if (m.geom == MeshGeom::Torus) {
      const auto& sh = m.shifts[static_cast<std::size_t>(t)];
      for (int e = 0; e < 3; ++e) out << ' ' << sh[static_cast<std::size_t>(e)][0] << ' ' << sh[static_cast<std::size_t>(e)][1];
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

TriMesh read_surfmesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "SURFMESH 1", ErrorKind::Io,
          "'" + path + "': missing SURFMESH 1 header");

  TriMesh m;
  bool have_geom = false;
  std::string counts_line;
  while (std::getline(in, line)) {
    if (line.rfind("# surface ", 0) == 0) {
      std::istringstream ss(line.substr(10));
      std::string kind;
      ss >> kind;
      if (kind == "sphere") {
        m.geom = MeshGeom::Sphere;
        m.surf = ModelSurface::sphere();
      } else if (kind == "flat-torus") {
        double a0, a1, b0, b1;
        require(static_cast<bool>(ss >> a0 >> a1 >> b0 >> b1), ErrorKind::Io,
                "'" + path + "': malformed torus lattice");
        m.geom = MeshGeom::Torus;
        m.surf = ModelSurface::flat_torus({a0, a1}, {b0, b1});
      } else if (kind == "plane") {
        m.geom = MeshGeom::Plane;
      } else {
        fail(ErrorKind::Io, "'" + path + "': unknown surface kind '" + kind + "'");
      }
      have_geom = true;
      continue;
    }
    if (!line.empty() && line[0] == '#') continue;
    if (line.empty()) continue;
    counts_line = line;
    break;
  }
  require(have_geom, ErrorKind::Io, "'" + path + "': missing surface metadata line");
  std::int64_t nv = 0, eb = 0, nt = 0, nh = 0;
  {
    std::istringstream ss(counts_line);
    require(static_cast<bool>(ss >> nv >> eb >> nt >> nh), ErrorKind::Io,
            "'" + path + "': malformed counts line");
  }
  require(nv >= 3 && nt >= 1 && nh >= 0, ErrorKind::Io, "'" + path + "': implausible counts");

  m.verts.reserve(static_cast<std::size_t>(nv));
  m.hole_of_vertex.reserve(static_cast<std::size_t>(nv));
  for (std::int64_t v = 0; v < nv; ++v) {
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io,
            "'" + path + "': truncated vertex list");
    std::istringstream ss(line);
    Vec3 p{0, 0, 0};
    int tag = 0, hole = -1;
    if (m.geom == MeshGeom::Sphere)
      require(static_cast<bool>(ss >> p.x >> p.y >> p.z >> tag >> hole), ErrorKind::Io,
              "'" + path + "': malformed vertex line");
    else
      require(static_cast<bool>(ss >> p.x >> p.y >> tag >> hole), ErrorKind::Io,
              "'" + path + "': malformed vertex line");
    require((tag == 1) == (hole >= 0), ErrorKind::Io, "'" + path + "': inconsistent vertex tags");
    m.verts.push_back(p);
    m.hole_of_vertex.push_back(hole);
  }
  for (std::int64_t t = 0; t < nt; ++t) {
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io,
            "'" + path + "': truncated triangle list");
    std::istringstream ss(line);
    std::array<int, 3> tr{};
    require(static_cast<bool>(ss >> tr[0] >> tr[1] >> tr[2]), ErrorKind::Io,
            "'" + path + "': malformed triangle line");
    for (int e = 0; e < 3; ++e)
      require(tr[static_cast<std::size_t>(e)] >= 0 && tr[static_cast<std::size_t>(e)] < nv,
              ErrorKind::Io, "'" + path + "': triangle index out of range");
    m.tris.push_back(tr);
    if (m.geom == MeshGeom::Torus) {
      std::array<Vec2i, 3> sh{};
      require(static_cast<bool>(ss >> sh[0][0] >> sh[0][1] >> sh[1][0] >> sh[1][1] >> sh[2][0] >>
                                sh[2][1]),
              ErrorKind::Io, "'" + path + "': triangle line missing lattice shifts");
      m.shifts.push_back(sh);
    }
  }
  finalize_mesh(m);
  std::size_t eb_actual = 0;
  for (const auto& loop : m.loops) eb_actual += loop.size();
  require(static_cast<std::int64_t>(eb_actual) == eb && m.n_holes() == nh, ErrorKind::Io,
          "'" + path + "': boundary counts disagree with the mesh");
  return m;
}

}  // namespace steklab::mesh

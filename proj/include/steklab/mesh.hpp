#pragma once

// Conforming triangulations: subdivided icosahedra and periodic structured
// grids for closed surfaces, and hole-carved domain meshes with geometrically
// graded annuli resolving tiny geodesic disks. Also planar disk/annulus
// meshers for validation oracles, hole filling (domain mesh -> closed mesh
// with the domain vertices as an index prefix), quality reports and a
// line-oriented text format.
//
// Torus meshes carry per-triangle per-corner lattice shifts: corner position
// = vertex representative + shift * lattice basis. Only intra-triangle
// coherence matters; geometry helpers always use unwrapped corners.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "steklab/packing.hpp"
#include "steklab/surface.hpp"

namespace steklab::mesh {

enum class MeshGeom { Sphere, Torus, Plane };

struct TriMesh {
  MeshGeom geom = MeshGeom::Plane;
  std::optional<surface::ModelSurface> surf;           // Sphere/Torus only
  std::vector<Vec3> verts;                             // torus/plane: z = 0
  std::vector<std::array<int, 3>> tris;                // CCW (outward / +z)
  std::vector<std::array<Vec2i, 3>> shifts;            // torus only
  std::vector<int> hole_of_vertex;                     // -1 interior
  std::vector<std::vector<int>> loops;                 // per hole, canonical
  std::vector<Vec3> hole_centers;                      // chart centers, optional
  std::vector<double> hole_radii;                      // nominal radii, optional
  double h_max = 0.0;
  bool closed = false;

  int nv() const { return static_cast<int>(verts.size()); }
  int nt() const { return static_cast<int>(tris.size()); }
  int n_holes() const { return static_cast<int>(loops.size()); }
  bool on_boundary(int v) const { return hole_of_vertex[static_cast<std::size_t>(v)] >= 0; }
  std::array<Vec3, 3> corners(int t) const;
};

struct Grading {
  double h0 = 0.01;        // background edge-length target
  double ring_ratio = 1.4; // geometric grading ratio, in (1, 2]
  int rings_min = 3;       // minimum ring count per hole (when radii allow)
  int vertex_cap = 600000;
};

TriMesh mesh_closed_surface(const surface::ModelSurface& s, double target_h,
                            int vertex_cap = 600000);
TriMesh mesh_domain(const surface::ModelSurface& s, const packing::DomainSpec& d,
                    const Grading& g);

// Planar validation meshers (geom = Plane). The disk is centered at the
// origin with boundary loop 0 at radius `radius`; the annulus has loop 0 at
// r_in and loop 1 at r_out.
TriMesh unit_disk_mesh(double h, double radius = 1.0);
TriMesh planar_annulus_mesh(double r_in, double r_out, double h);

// Triangulates the listed holes (all when empty) of a domain mesh with
// inward-graded rings and a center fan. Output vertices 0..domain.nv()-1 are
// the domain vertices unchanged.
TriMesh fill_holes(const TriMesh& domain, const std::vector<int>& holes = {});

struct QualityReport {
  double min_angle_deg = 0.0;
  double max_angle_deg = 0.0;
  double h_max = 0.0;
  double total_area = 0.0;
  int euler_char = 0;
  int n_vertices = 0;
  int n_triangles = 0;
  int n_holes = 0;
  std::vector<int> loop_sizes;
  std::vector<double> loop_lengths;
  bool orientation_consistent = false;
};
QualityReport mesh_quality(const TriMesh& m);

struct EdgeRec {
  int a = 0, b = 0;    // a < b
  int t0 = -1, t1 = -1;  // adjacent triangles, t1 = -1 on the boundary
};
// Sorted by (a, b); throws Meshing if an edge has more than two triangles.
std::vector<EdgeRec> collect_edges(const TriMesh& m);

double total_area(const TriMesh& m);
double triangle_area(const TriMesh& m, int t);
double loop_length(const TriMesh& m, int hole);

void write_surfmesh(const TriMesh& m, const std::string& path);
TriMesh read_surfmesh(const std::string& path);

}  // namespace steklab::mesh

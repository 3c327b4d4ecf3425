#pragma once

// Well-separated, well-covering center selection by greedy farthest-point
// sampling over a fixed quasi-uniform candidate grid, and the domain
// specification "surface minus k tiny geodesic disks". Separation and
// covering constants are measured and asserted post hoc, never assumed.

#include <cstdint>
#include <string>
#include <vector>

#include "steklab/surface.hpp"

namespace steklab::packing {

struct DiskPacking {
  explicit DiskPacking(surface::ModelSurface s) : surf(std::move(s)) {}

  surface::ModelSurface surf;
  std::vector<surface::SurfacePoint> centers;
  std::vector<double> radii;  // empty until a domain spec assigns them
  double min_separation = 0.0;
  double covering_radius = 0.0;  // dense-grid estimate
  double grid_spacing = 0.0;     // nominal resolution of the validation grid
  std::uint64_t seed = 0;

  int k() const { return static_cast<int>(centers.size()); }
};

struct DomainSpec {
  explicit DomainSpec(DiskPacking p) : pack(std::move(p)) {}

  DiskPacking pack;  // radii filled in
  double alpha = 1.5;
};

// Quasi-uniform candidate/validation grid (Fibonacci points on the sphere, a
// lattice-coordinate grid on the torus); >= 100k samples.
std::vector<surface::SurfacePoint> candidate_grid(const surface::ModelSurface& s);

// Greedy farthest-point selection of k centers, deterministic given seed.
// k = 1 records min_separation = geodesic diameter (no pairs exist).
DiskPacking select_separated_points(const surface::ModelSurface& s, int k, std::uint64_t seed,
                                    int k_cap = 4096);

// Equal radii k^{-alpha}; verifies the radii are embeddable and the doubled
// disks pairwise disjoint.
DomainSpec make_domain_spec(const DiskPacking& p, double alpha);
// Per-hole radii for diagnostics; same disjointness checks.
DomainSpec make_domain_spec_radii(const DiskPacking& p, std::vector<double> radii);

// Indices with r_j >= sqrt(delta) * k^{-1/4} (the large holes) and the rest.
struct HoleSplit {
  std::vector<int> large;
  std::vector<int> small;
};
HoleSplit split_large_holes(const DomainSpec& d, double delta);

std::string domain_spec_to_json(const DomainSpec& d);
DomainSpec domain_spec_from_json(const std::string& text);

}  // namespace steklab::packing

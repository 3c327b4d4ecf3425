#include "steklab/packing.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

namespace steklab::packing {

using surface::ModelSurface;
using surface::SurfaceKind;
using surface::SurfacePoint;

std::vector<SurfacePoint> candidate_grid(const ModelSurface& s) {
  std::vector<SurfacePoint> pts;
  if (s.kind() == SurfaceKind::Sphere) {
    const int n = 131072;
    pts.reserve(static_cast<std::size_t>(n));
    const double R = s.sphere_radius();
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / n;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * i;
      pts.push_back({Vec3{R * rho * std::cos(phi), R * rho * std::sin(phi), R * z}});
    }
  } else {
    const int n = 363;  // 363^2 = 131769 samples
    pts.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        pts.push_back(s.torus_point((i + 0.5) / n, (j + 0.5) / n));
  }
  return pts;
}

DiskPacking select_separated_points(const ModelSurface& s, int k, std::uint64_t seed, int k_cap) {
  require(k >= 1, ErrorKind::Usage, "select_separated_points: k must be at least 1");
  require(k <= k_cap, ErrorKind::Capacity,
          "select_separated_points: k = " + std::to_string(k) + " exceeds cap " +
              std::to_string(k_cap));

  const std::vector<SurfacePoint> grid = candidate_grid(s);
  const std::size_t n = grid.size();
  // Nominal grid resolution: unit total area spread over n cells.
  const double spacing = std::sqrt(1.0 / static_cast<double>(n));

  std::mt19937_64 rng(mix_seed(seed, fnv1a(std::string("packing-start"))));
  std::size_t pick = static_cast<std::size_t>(rng() % n);

  DiskPacking p(s);
  p.seed = seed;
  p.grid_spacing = spacing;
  p.centers.reserve(static_cast<std::size_t>(k));
  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  for (int round = 0; round < k; ++round) {
    p.centers.push_back(grid[pick]);
    const SurfacePoint& c = grid[pick];
    for (std::size_t i = 0; i < n; ++i) mind[i] = std::min(mind[i], s.distance(grid[i], c));
    // Next center: farthest grid point, ties broken by the smallest index.
    pick = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (mind[i] > mind[pick]) pick = i;
  }
  p.covering_radius = mind[pick];

  if (k == 1) {
    p.min_separation = s.geodesic_diameter();  // vacuous-pair sentinel
  } else {
    double sep = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) sep = std::min(sep, s.distance(p.centers[i], p.centers[j]));
    p.min_separation = sep;
  }
  return p;
}

namespace {

void check_domain_radii(const DiskPacking& p, const std::vector<double>& radii) {
  const int k = p.k();
  require(static_cast<int>(radii.size()) == k, ErrorKind::Usage,
          "domain spec: radii count differs from center count");
  for (int i = 0; i < k; ++i) {
    require(radii[i] > 0.0, ErrorKind::Geometry, "domain spec: nonpositive hole radius");
    require(radii[i] < p.surf.injectivity_radius(), ErrorKind::Geometry,
            "domain spec: hole radius " + fmt17(radii[i]) + " is not below the injectivity radius " +
                fmt17(p.surf.injectivity_radius()));
  }
  // Doubled disks must stay pairwise disjoint.
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double d = p.surf.distance(p.centers[i], p.centers[j]);
      if (d <= 2.0 * radii[i] + 2.0 * radii[j]) {
        fail(ErrorKind::Geometry, "domain spec: doubled disks around centers " + std::to_string(i) +
                                      " and " + std::to_string(j) + " overlap (distance " +
                                      fmt17(d) + ")");
      }
    }
  }
}

}  // namespace

DomainSpec make_domain_spec(const DiskPacking& p, double alpha) {
  require(alpha >= 1.0, ErrorKind::Usage, "make_domain_spec: alpha must be at least 1");
  const double r = std::pow(static_cast<double>(p.k()), -alpha);
  std::vector<double> radii(static_cast<std::size_t>(p.k()), r);
  DomainSpec d = make_domain_spec_radii(p, std::move(radii));
  d.alpha = alpha;
  return d;
}

DomainSpec make_domain_spec_radii(const DiskPacking& p, std::vector<double> radii) {
  check_domain_radii(p, radii);
  DomainSpec d(p);
  d.pack.radii = std::move(radii);
  d.alpha = 0.0;  // radii not derived from an exponent
  return d;
}

HoleSplit split_large_holes(const DomainSpec& d, double delta) {
  require(delta > 0.0, ErrorKind::Usage, "split_large_holes: delta must be positive");
  const double threshold = std::sqrt(delta) * std::pow(static_cast<double>(d.pack.k()), -0.25);
  HoleSplit out;
  for (int j = 0; j < d.pack.k(); ++j)
    (d.pack.radii[static_cast<std::size_t>(j)] >= threshold ? out.large : out.small).push_back(j);
  return out;
}

std::string domain_spec_to_json(const DomainSpec& d) {
  nlohmann::json j;
  const ModelSurface& s = d.pack.surf;
  if (s.kind() == SurfaceKind::Sphere) {
    j["surface"] = {{"kind", "sphere"}};
  } else {
    const auto& b = s.lattice_basis();
    j["surface"] = {{"kind", "flat-torus"},
                    {"lattice", {{b[0][0], b[0][1]}, {b[1][0], b[1][1]}}}};
  }
  j["seed"] = d.pack.seed;
  j["k"] = d.pack.k();
  j["alpha"] = d.alpha;
  j["min_separation"] = d.pack.min_separation;
  j["covering_radius"] = d.pack.covering_radius;
  j["grid_spacing"] = d.pack.grid_spacing;
  nlohmann::json centers = nlohmann::json::array();
  for (const SurfacePoint& c : d.pack.centers) {
    if (s.kind() == SurfaceKind::Sphere)
      centers.push_back({c.p.x, c.p.y, c.p.z});
    else
      centers.push_back({c.p.x, c.p.y});
  }
  j["centers"] = std::move(centers);
  j["radii"] = d.pack.radii;
  return j.dump(2) + "\n";
}

DomainSpec domain_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorKind::Io, std::string("domain spec json: ") + e.what());
  }
  try {
    const std::string kind = j.at("surface").at("kind").get<std::string>();
    ModelSurface ms = ModelSurface::sphere();
    if (kind == "flat-torus") {
      const auto& lat = j.at("surface").at("lattice");
      ms = ModelSurface::flat_torus({lat[0][0], lat[0][1]}, {lat[1][0], lat[1][1]});
    } else if (kind != "sphere") {
      fail(ErrorKind::Io, "domain spec json: unknown surface kind '" + kind + "'");
    }
    DomainSpec d(DiskPacking{ms});
    d.pack.seed = j.at("seed").get<std::uint64_t>();
    d.alpha = j.at("alpha").get<double>();
    d.pack.min_separation = j.at("min_separation").get<double>();
    d.pack.covering_radius = j.at("covering_radius").get<double>();
    d.pack.grid_spacing = j.value("grid_spacing", 0.0);
    for (const auto& c : j.at("centers")) {
      if (d.pack.surf.kind() == SurfaceKind::Sphere)
        d.pack.centers.push_back({Vec3{c[0], c[1], c[2]}});
      else
        d.pack.centers.push_back(d.pack.surf.make_point({c[0], c[1], 0.0}));
    }
    d.pack.radii = j.at("radii").get<std::vector<double>>();
    require(d.pack.radii.size() == d.pack.centers.size(), ErrorKind::Io,
            "domain spec json: radii/centers size mismatch");
    const int expect_k = j.at("k").get<int>();
    require(expect_k == d.pack.k(), ErrorKind::Io, "domain spec json: k mismatch");
    return d;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, std::string("domain spec json: ") + e.what());
  }
}

}  // namespace steklab::packing

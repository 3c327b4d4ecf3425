#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <steklab/fem.hpp>
#include <steklab/mesh.hpp>
#include <steklab/packing.hpp>
#include <steklab/stability.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace steklab;
using fem::NodalMeasure;
using mesh::TriMesh;
using stability::MeasureDiff;
using surface::ModelSurface;

namespace {

TriMesh sphere_domain(int k, std::uint64_t seed, double h0) {
  const auto s = ModelSurface::sphere();
  const auto p = packing::select_separated_points(s, k, seed);
  const auto d = packing::make_domain_spec(p, 1.5);
  mesh::Grading g;
  g.h0 = h0;
  return mesh::mesh_domain(s, d, g);
}

NodalMeasure random_measure(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (auto& x : w) x = u(rng);
  return NodalMeasure::from_weights(std::move(w));
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Poisson normal-derivative weights of the unit source, as a boundary measure.
NodalMeasure flux_measure(const TriMesh& dom) {
  const std::vector<double> f(static_cast<std::size_t>(dom.nv()), 1.0);
  const auto sol = fem::solve_poisson_dirichlet(dom, f);
  const auto plain = fem::boundary_measure(dom);
  std::vector<double> density(static_cast<std::size_t>(dom.nv()), 0.0);
  for (int v = 0; v < dom.nv(); ++v)
    if (plain.w[static_cast<std::size_t>(v)] > 0.0)
      density[static_cast<std::size_t>(v)] =
          sol.beta[static_cast<std::size_t>(v)] / plain.w[static_cast<std::size_t>(v)];
  return fem::boundary_measure(dom, density);
}

}  // namespace

// ===========================================================================
// measure differences
// ===========================================================================

TEST_CASE("measure differences normalize and subtract as advertised") {
  const auto mu = NodalMeasure::from_weights({1.0, 2.0, 3.0});
  const auto nu = NodalMeasure::from_weights({3.0, 2.0, 1.0});

  const auto p = MeasureDiff::probability(mu, nu);
  CHECK(p.mass_mu == 1.0);
  CHECK(p.mass_nu == 1.0);
  CHECK(std::abs(p.total()) <= 1e-15);
  CHECK(p.d[0] == doctest::Approx(1.0 / 6.0 - 3.0 / 6.0).epsilon(1e-14));

  const auto r = MeasureDiff::raw(mu, nu);
  CHECK(r.mass_mu == 6.0);
  CHECK(r.mass_nu == 6.0);
  CHECK(r.d == std::vector<double>{-2.0, 0.0, 2.0});
  CHECK(r.total() == doctest::Approx(0.0).epsilon(1e-15));

  const auto shorter = NodalMeasure::from_weights({1.0, 1.0});
  CHECK_THROWS_AS((void)MeasureDiff::probability(mu, shorter), Error);
  NodalMeasure zero;
  zero.w = {0.0, 0.0, 0.0};
  zero.total = 0.0;
  try {
    (void)MeasureDiff::probability(mu, zero);
    FAIL("expected a domain error for a zero-mass measure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

// ===========================================================================
// dual norms against dense factorizations
// ===========================================================================

TEST_CASE("homogeneous dual seminorm matches the dense pseudoinverse") {
  const auto s = ModelSurface::sphere();
  const auto m = mesh::mesh_closed_surface(s, 0.28);
  const int n = m.nv();
  const auto k = fem::stiffness_matrix(m);
  const Eigen::MatrixXd kd = linalg::to_dense(k);

  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto diff = MeasureDiff::probability(random_measure(n, seed),
                                               random_measure(n, seed + 100));
    const double got = stability::dual_norm_dot(k, diff, 1e-13);

    // K is singular only along constants, so the min-norm least-squares
    // solution of K x = d is the pseudoinverse applied to a zero-total d.
    const Eigen::VectorXd d = to_eigen(diff.d);
    const Eigen::VectorXd x = kd.completeOrthogonalDecomposition().solve(d);
    const double want = std::sqrt(d.dot(x));
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("inhomogeneous dual norm matches a dense solve") {
  const auto s = ModelSurface::sphere();
  const auto m = mesh::mesh_closed_surface(s, 0.28);
  const int n = m.nv();
  const auto k = fem::stiffness_matrix(m);
  const auto area = fem::area_measure(m);

  Eigen::MatrixXd ad = linalg::to_dense(k);
  for (int v = 0; v < n; ++v) ad(v, v) += area.w[static_cast<std::size_t>(v)];

  // Raw differences carry nonzero total mass; the full norm stays finite.
  const auto diff = MeasureDiff::raw(random_measure(n, 7), random_measure(n, 8));
  const double got = stability::dual_norm_full(k, area, diff, 1e-13);
  const Eigen::VectorXd d = to_eigen(diff.d);
  const double want = std::sqrt(d.dot(ad.ldlt().solve(d).eval()));
  CHECK(got == doctest::Approx(want).epsilon(1e-9));

  // The seminorm rejects what the full norm accepts.
  try {
    (void)stability::dual_norm_dot(k, diff, 1e-12);
    FAIL("expected a domain error for nonzero total mass");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
    CHECK(std::string(e.what()).find("dual_norm_full") != std::string::npos);
  }
}

TEST_CASE("point-mass seminorm distances form a metric") {
  const auto s = ModelSurface::sphere();
  const auto m = mesh::mesh_closed_surface(s, 0.3);
  const int n = m.nv();
  const auto k = fem::stiffness_matrix(m);

  const auto point = [&](int v) {
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    w[static_cast<std::size_t>(v)] = 1.0;
    return NodalMeasure::from_weights(std::move(w));
  };
  const auto dd = [&](int u, int v) {
    return stability::dual_norm_dot(k, MeasureDiff::raw(point(u), point(v)), 1e-13);
  };

  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int trial = 0; trial < 10; ++trial) {
    int u = pick(rng), v = pick(rng), w = pick(rng);
    if (u == v || v == w || u == w) continue;
    const double duv = dd(u, v), duw = dd(u, w), dwv = dd(w, v);
    CHECK(duv > 0.0);
    CHECK(duv == doctest::Approx(dd(v, u)).epsilon(1e-10));
    CHECK(duv <= (duw + dwv) * (1.0 + 1e-10));
  }
}

// ===========================================================================
// pairing duality
// ===========================================================================

TEST_CASE("pairings never exceed the dual norm times the Sobolev norm") {
  const auto s = ModelSurface::sphere();
  const auto m = mesh::mesh_closed_surface(s, 0.3);
  const int n = m.nv();
  const auto k = fem::stiffness_matrix(m);
  const auto area = fem::area_measure(m);

  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto mu = random_measure(n, 1000 + static_cast<std::uint64_t>(trial));
    const auto nu = random_measure(n, 5000 + static_cast<std::uint64_t>(trial));
    const auto diff = MeasureDiff::probability(mu, nu);
    const double dual = stability::dual_norm_full(k, area, diff, 1e-13);

    std::vector<double> phi(static_cast<std::size_t>(n));
    for (auto& x : phi) x = u(rng);
    const auto rep = stability::test_function_ratio(m, phi, mu, nu, 0.1, 2);
    CHECK(std::abs(rep.pairing) <= dual * rep.sobolev_norm * (1.0 + 1e-9));
  }

  // The optimizer of the pairing attains the dual norm exactly.
  const auto mu = random_measure(n, 11);
  const auto nu = random_measure(n, 12);
  const auto diff = MeasureDiff::probability(mu, nu);
  const double dual = stability::dual_norm_full(k, area, diff, 1e-13);
  Eigen::MatrixXd ad = linalg::to_dense(k);
  for (int v = 0; v < n; ++v) ad(v, v) += area.w[static_cast<std::size_t>(v)];
  const Eigen::VectorXd star = ad.ldlt().solve(to_eigen(diff.d)).eval();
  std::vector<double> phi(star.data(), star.data() + n);
  const auto rep = stability::test_function_ratio(m, phi, mu, nu, 0.1, 2);
  CHECK(rep.ratio == doctest::Approx(dual).epsilon(1e-8));
}

// ===========================================================================
// Moebius dilations
// ===========================================================================

TEST_CASE("mobius_apply is the identity at zero and preserves the sphere") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto rand_unit = [&]() {
    Vec3 v;
    do {
      v = Vec3{u(rng), u(rng), u(rng)};
    } while (norm(v) < 0.1 || norm(v) > 1.0);
    return normalized(v);
  };

  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 y = rand_unit();
    CHECK(dist(stability::mobius_apply(Vec3{}, y), y) <= 1e-12);
    const Vec3 a = (0.9 * u(rng)) * rand_unit();
    CHECK(std::abs(norm(stability::mobius_apply(a, y)) - 1.0) <= 1e-12);
  }

  // The axis endpoints are fixed; everything else drifts toward -a/|a|.
  const Vec3 a{0.0, 0.0, 0.9};
  const Vec3 north{0.0, 0.0, 1.0}, south{0.0, 0.0, -1.0}, equator{1.0, 0.0, 0.0};
  CHECK(dist(stability::mobius_apply(a, north), north) <= 1e-12);
  CHECK(dist(stability::mobius_apply(a, south), south) <= 1e-12);
  CHECK(stability::mobius_apply(a, equator).z < -0.9);
}

TEST_CASE("centering a balanced pair is a no-op") {
  const std::vector<Vec3> pts{{0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}};
  const auto cm = stability::mobius_center_points(pts, {0.5, 0.5});
  CHECK(norm(cm.a) == 0.0);
  CHECK(cm.iterations == 0);
  CHECK(cm.residual <= 1e-15);
  CHECK(dist(cm.images[0], pts[0]) <= 1e-15);
  CHECK(dist(cm.images[1], pts[1]) <= 1e-15);
}

TEST_CASE("axisymmetric centering agrees with a one-dimensional bisection") {
  // Three points at polar angle pi/3 plus the south pole, equal weights: the
  // balancing dilation lies on the z-axis by symmetry, so its parameter is
  // the root of a scalar monotone function we can bracket independently.
  const double st = std::sin(kPi / 3.0), ct = std::cos(kPi / 3.0);
  std::vector<Vec3> pts;
  for (int j = 0; j < 3; ++j) {
    const double ph = 2.0 * kPi * j / 3.0;
    pts.push_back(Vec3{st * std::cos(ph), st * std::sin(ph), ct});
  }
  pts.push_back(Vec3{0.0, 0.0, -1.0});
  const std::vector<double> w(4, 1.0);

  const auto mean_z = [&](double t) {
    const Vec3 a{0.0, 0.0, t};
    double g = 0.0;
    for (const auto& p : pts) g += stability::mobius_apply(a, p).z;
    return g / 4.0;
  };

  double lo = 0.0, hi = 0.99;
  REQUIRE(mean_z(lo) > 0.0);
  REQUIRE(mean_z(hi) < 0.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_z(mid) > 0.0 ? lo : hi) = mid;
  }
  const double t_star = 0.5 * (lo + hi);

  const auto cm = stability::mobius_center_points(pts, w);
  CHECK(std::abs(cm.a.x) <= 1e-7);
  CHECK(std::abs(cm.a.y) <= 1e-7);
  CHECK(cm.a.z == doctest::Approx(t_star).epsilon(1e-6));
  CHECK(cm.residual <= 1e-8);

  Vec3 bc{};
  for (const auto& im : cm.images) {
    CHECK(std::abs(norm(im) - 1.0) <= 1e-12);
    bc += 0.25 * im;
  }
  CHECK(norm(bc) <= 1e-8);

  // Re-centering the centered configuration finds nothing left to move.
  const auto again = stability::mobius_center_points(cm.images, w);
  CHECK(norm(again.a) <= 1e-8);
  CHECK(again.iterations == 0);
}

TEST_CASE("mobius_center_points rejects impossible and degenerate inputs") {
  const Vec3 north{0.0, 0.0, 1.0}, south{0.0, 0.0, -1.0};

  // Two atoms with unequal weights can never balance: any dilation keeps
  // them two unit atoms, whose barycenter has norm at least the weight gap.
  try {
    (void)stability::mobius_center_points({north, south}, {0.75, 0.25});
    FAIL("expected a numeric error for an uncenterable pair");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }

  try {
    (void)stability::mobius_center_points({north, south}, {1.0, 0.0});
    FAIL("expected a domain error for a single support point");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
    CHECK(std::string(e.what()).find("single point") != std::string::npos);
  }

  CHECK_THROWS_AS((void)stability::mobius_center_points({north, south}, {1.0}), Error);
  CHECK_THROWS_AS((void)stability::mobius_center_points({}, {}), Error);
  CHECK_THROWS_AS((void)stability::mobius_center_points({north, south}, {1.0, -0.5}), Error);
  CHECK_THROWS_AS((void)stability::mobius_center_points({north, south}, {0.0, 0.0}), Error);
  CHECK_THROWS_AS(
      (void)stability::mobius_center_points({north, Vec3{0.0, 0.0, -0.5}}, {1.0, 1.0}), Error);
}

TEST_CASE("mesh-level centering checks geometry and finds small dilations") {
  const auto s = ModelSurface::sphere();
  const auto m = mesh::mesh_closed_surface(s, 0.25);
  const auto area = fem::area_measure(m);

  const auto cm = stability::mobius_center(m, area);
  CHECK(norm(cm.a) <= 0.1);  // the mesh is nearly balanced already
  CHECK(cm.residual <= 1e-8);

  const auto torus = mesh::mesh_closed_surface(ModelSurface::square_torus(), 0.2);
  CHECK_THROWS_AS((void)stability::mobius_center(torus, fem::area_measure(torus)), Error);

  NodalMeasure tiny = NodalMeasure::from_weights({1.0, 2.0});
  CHECK_THROWS_AS((void)stability::mobius_center(m, tiny), Error);
}

// ===========================================================================
// gap certificate
// ===========================================================================

TEST_CASE("the certificate holds on a six-hole construction domain") {
  const auto dom = sphere_domain(6, 1, 0.04);
  const auto mu = flux_measure(dom);

  const auto rec = stability::certify_domain(dom, mu, 1);
  CHECK(rec.certified);
  CHECK(rec.slack > 0.0);
  CHECK(rec.centering_residual <= 1e-6);
  CHECK(norm(rec.center) < 1.0);
  CHECK(rec.h_max_mapped > 0.0);

  CHECK(rec.sigma1_bar > 0.0);
  CHECK(rec.sigma1_bar < 8.0 * kPi);
  CHECK(rec.dual_sq >= 0.0);
  CHECK(rec.area_defect > 0.0);  // the mapped domain misses the hole area
  CHECK(rec.lhs == doctest::Approx(rec.dual_sq + rec.area_defect).epsilon(1e-14));
  CHECK(rec.rhs == doctest::Approx(3.0 * (8.0 * kPi - rec.sigma1_bar)).epsilon(1e-14));
  CHECK(rec.slack == doctest::Approx(rec.rhs * (1.0 + rec.tol_discr) - rec.lhs).epsilon(1e-12));
  CHECK(rec.tol_discr >= 5.0 * rec.h_max_mapped);

  // The identity map's energy pairing equals twice the mapped flat area
  // minus the normalized eigenvalue.
  const auto cm = stability::mobius_center(dom, mu);
  TriMesh mapped = dom;
  mapped.surf.reset();
  for (int v = 0; v < dom.nv(); ++v)
    mapped.verts[static_cast<std::size_t>(v)] = normalized(cm.images[static_cast<std::size_t>(v)]);
  const double mapped_area = fem::area_measure(mapped).total;
  CHECK(rec.raw_pairing ==
        doctest::Approx(2.0 * mapped_area - rec.sigma1_bar).epsilon(1e-9));
  CHECK(rec.area_defect == doctest::Approx(6.0 * (4.0 * kPi - mapped_area)).epsilon(1e-9));
}

TEST_CASE("the certificate demands a centered measure and a domain mesh") {
  const auto dom = sphere_domain(6, 1, 0.05);
  const auto mu = flux_measure(dom);

  // Identity images: the flux measure is off-center, so the gate trips.
  stability::CenteredMap identity;
  identity.images.resize(dom.verts.size());
  for (std::size_t v = 0; v < dom.verts.size(); ++v)
    identity.images[v] = normalized(dom.verts[v]);
  try {
    (void)stability::gap_certificate_sphere(dom, mu, identity, 1);
    FAIL("expected a usage error for an uncentered measure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Usage);
    CHECK(std::string(e.what()).find("mobius_center") != std::string::npos);
  }

  const auto s = ModelSurface::sphere();
  const auto closed = mesh::mesh_closed_surface(s, 0.25);
  const auto area = fem::area_measure(closed);
  const auto cm = stability::mobius_center(closed, area);
  CHECK_THROWS_AS((void)stability::gap_certificate_sphere(closed, area, cm, 1), Error);
}

// ===========================================================================
// logarithmic test functions
// ===========================================================================

TEST_CASE("log_test_function clamps the log of the distance ratio") {
  const auto s = ModelSurface::sphere();
  const auto m = mesh::mesh_closed_surface(s, 0.25);
  const std::vector<surface::SurfacePoint> centers{
      s.make_point(Vec3{0.0, 0.0, 1.0}), s.make_point(Vec3{0.0, 0.0, -1.0})};
  const int k = 2;
  const double delta = 0.3;

  const auto phi = stability::log_test_function(s, centers, delta, k, m);
  REQUIRE(static_cast<int>(phi.size()) == m.nv());
  const double cap = std::log(2.0);
  const double sq = std::sqrt(delta);
  // The model sphere has unit area, so geodesic distances are the unit-sphere
  // angles scaled by its radius (half the pole-to-pole distance over pi).
  const double radius = s.distance(centers[0], centers[1]) / kPi;
  CHECK(radius == doctest::Approx(1.0 / (2.0 * std::sqrt(kPi))).epsilon(1e-12));
  for (int v = 0; v < m.nv(); ++v) {
    const Vec3 p = normalized(m.verts[static_cast<std::size_t>(v)]);
    const double dmin = radius * std::acos(std::clamp(std::abs(p.z), 0.0, 1.0));
    const double want = std::clamp(std::log(sq / std::max(dmin, 1e-300)), 0.0, cap);
    CHECK(phi[static_cast<std::size_t>(v)] == doctest::Approx(want).epsilon(1e-9));
    CHECK(phi[static_cast<std::size_t>(v)] >= 0.0);
    CHECK(phi[static_cast<std::size_t>(v)] <= cap);
  }

  CHECK_THROWS_AS((void)stability::log_test_function(s, {centers[0]}, 0.3, 1, m), Error);
  CHECK_THROWS_AS((void)stability::log_test_function(s, centers, 0.3, 1, m), Error);
  try {
    (void)stability::log_test_function(s, centers, 0.8, k, m);  // 0.8 >= 1/sqrt(2)
    FAIL("expected a domain error for delta outside (0, 1/sqrt(k))");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
  CHECK_THROWS_AS((void)stability::log_test_function(s, centers, 0.0, k, m), Error);

  const auto torus = mesh::mesh_closed_surface(ModelSurface::square_torus(), 0.2);
  CHECK_THROWS_AS((void)stability::log_test_function(s, centers, delta, k, torus), Error);
}

TEST_CASE("test_function_ratio reports the pairing and norm it claims") {
  const auto s = ModelSurface::sphere();
  const auto m = mesh::mesh_closed_surface(s, 0.3);
  const int n = m.nv();
  const int k = 4;
  const double delta = 0.2;

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> phi(static_cast<std::size_t>(n));
  for (auto& x : phi) x = u(rng);
  const auto mu = random_measure(n, 21);
  const auto nu = random_measure(n, 22);

  const auto rep = stability::test_function_ratio(m, phi, mu, nu, delta, k);

  double pairing = 0.0;
  for (int v = 0; v < n; ++v)
    pairing += phi[static_cast<std::size_t>(v)] * (mu.w[static_cast<std::size_t>(v)] / mu.total -
                                                   nu.w[static_cast<std::size_t>(v)] / nu.total);
  CHECK(rep.pairing == doctest::Approx(pairing).epsilon(1e-12));

  const Eigen::MatrixXd kd = linalg::to_dense(fem::stiffness_matrix(m));
  const auto area = fem::area_measure(m);
  const Eigen::VectorXd pv = to_eigen(phi);
  double sob2 = pv.dot(kd * pv);
  for (int v = 0; v < n; ++v)
    sob2 += area.w[static_cast<std::size_t>(v)] * phi[static_cast<std::size_t>(v)] *
            phi[static_cast<std::size_t>(v)];
  CHECK(rep.sobolev_norm == doctest::Approx(std::sqrt(sob2)).epsilon(1e-10));
  CHECK(rep.ratio == doctest::Approx(rep.pairing / rep.sobolev_norm).epsilon(1e-12));
  CHECK(rep.k_delta == doctest::Approx(k * delta).epsilon(1e-15));
  CHECK(rep.sqrt_delta_k_logk ==
        doctest::Approx(std::sqrt(delta * k * std::log(static_cast<double>(k)))).epsilon(1e-15));

  const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
  CHECK_THROWS_AS((void)stability::test_function_ratio(m, zero, mu, nu, delta, k), Error);
  CHECK_THROWS_AS((void)stability::test_function_ratio(m, phi, mu, nu, 0.0, k), Error);
  CHECK_THROWS_AS((void)stability::test_function_ratio(m, phi, mu, nu, delta, 1), Error);
  std::vector<double> wrong(static_cast<std::size_t>(n - 1), 1.0);
  CHECK_THROWS_AS((void)stability::test_function_ratio(m, wrong, mu, nu, delta, k), Error);
}

// ===========================================================================
// mass localization
// ===========================================================================

TEST_CASE("measure_mass_on_holes partitions boundary mass by hole") {
  const auto dom = sphere_domain(6, 1, 0.05);
  const auto mu = flux_measure(dom);

  std::vector<int> all{0, 1, 2, 3, 4, 5};
  CHECK(stability::measure_mass_on_holes(mu, dom.hole_of_vertex, all) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stability::measure_mass_on_holes(mu, dom.hole_of_vertex, {}) == 0.0);
  CHECK(stability::measure_mass_on_holes(mu, dom.hole_of_vertex, {17}) == 0.0);

  double sum = 0.0;
  for (int j = 0; j < 6; ++j) {
    const double frac = stability::measure_mass_on_holes(mu, dom.hole_of_vertex, {j});
    CHECK(frac > 0.0);
    CHECK(frac < 1.0);
    sum += frac;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // The area measure mostly lives in the interior.
  const auto area = fem::area_measure(dom);
  CHECK(stability::measure_mass_on_holes(area, dom.hole_of_vertex, all) < 0.2);

  NodalMeasure zero;
  zero.w.assign(static_cast<std::size_t>(dom.nv()), 0.0);
  zero.total = 0.0;
  CHECK_THROWS_AS((void)stability::measure_mass_on_holes(zero, dom.hole_of_vertex, all), Error);
}

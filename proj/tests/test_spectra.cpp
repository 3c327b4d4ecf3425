#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <steklab/fem.hpp>
#include <steklab/mesh.hpp>
#include <steklab/packing.hpp>
#include <steklab/spectra.hpp>

#include <cmath>
#include <limits>
#include <vector>

using namespace steklab;
using mesh::TriMesh;
using surface::ModelSurface;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TriMesh sphere_domain(int k, std::uint64_t seed, double h0) {
  const auto s = ModelSurface::sphere();
  const auto p = packing::select_separated_points(s, k, seed);
  const auto d = packing::make_domain_spec(p, 1.5);
  mesh::Grading g;
  g.h0 = h0;
  return mesh::mesh_domain(s, d, g);
}

double unit_density(const Vec3&) { return 1.0; }

}  // namespace

// ===========================================================================
// closed-surface Laplace spectra
// ===========================================================================

TEST_CASE("sphere first Laplace multiplet is 8 pi with multiplicity 3") {
  const auto s = ModelSurface::sphere();
  const auto r = spectra::laplace_normalized(s, unit_density, 0.03, 6, 1);
  CHECK(r.kind == spectra::SpectralKind::Laplace);
  CHECK(r.eigenvalues[0] == 0.0);
  CHECK(r.mass == doctest::Approx(1.0).epsilon(0.01));
  for (int i = 1; i <= 3; ++i)
    CHECK(r.normalized[i] == doctest::Approx(8.0 * kPi).epsilon(0.005));
  // The next band (l = 2: 24 pi) is far away.
  CHECK(r.normalized[4] > 8.0 * kPi * 2.0);

  const auto groups = spectra::group_multiplets(
      r.normalized, spectra::default_multiplet_tol(0.03 * 1.5));
  REQUIRE(groups.size() >= 2);
  CHECK(groups[0] == std::vector<int>{0});
  CHECK(groups[1] == std::vector<int>{1, 2, 3});
}

TEST_CASE("square torus first multiplet is 4 pi^2 with multiplicity 4") {
  const auto s = ModelSurface::square_torus();
  const auto r = spectra::laplace_normalized(s, unit_density, 0.035, 7, 1);
  for (int i = 1; i <= 4; ++i)
    CHECK(r.normalized[i] == doctest::Approx(4.0 * kPi * kPi).epsilon(0.005));
  const auto groups = spectra::group_multiplets(
      r.normalized, spectra::default_multiplet_tol(0.035 * 1.5));
  REQUIRE(groups.size() >= 2);
  CHECK(groups[1].size() == 4);
}

TEST_CASE("first_eigenspace extracts an orthonormal coordinate basis") {
  const auto s = ModelSurface::sphere();
  const auto m = mesh::mesh_closed_surface(s, 0.045);
  const auto mu = fem::area_measure(m);
  const auto basis = spectra::first_eigenspace(m, mu, 8, 1);

  CHECK(basis.dim == 3);
  CHECK(basis.lambda1_normalized == doctest::Approx(8.0 * kPi).epsilon(0.01));
  REQUIRE(static_cast<int>(basis.funcs.size()) == 3);

  // Orthonormal in the area measure.
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      double p = 0.0;
      for (int v = 0; v < m.nv(); ++v) p += mu.w[v] * basis.funcs[i][v] * basis.funcs[j][v];
      if (i == j)
        CHECK(p == doctest::Approx(1.0).epsilon(1e-7));
      else
        CHECK(std::abs(p) <= 1e-6);
    }
  }

  // The span is the coordinate functions: each basis vector is a linear
  // combination of x, y, z, so its values are an affine function of the
  // vertex coordinates with zero constant part. Check via regression.
  for (const auto& phi : basis.funcs) {
    // Least squares fit phi ~ a.x + b.y + c.z over all vertices.
    double g[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}, rhs[3] = {0, 0, 0};
    for (int v = 0; v < m.nv(); ++v) {
      const double c[3] = {m.verts[v].x, m.verts[v].y, m.verts[v].z};
      for (int a = 0; a < 3; ++a) {
        rhs[a] += c[a] * phi[v];
        for (int b = 0; b < 3; ++b) g[a][b] += c[a] * c[b];
      }
    }
    // Solve the 3x3 system by Cramer's rule.
    auto det3 = [](const double mm[3][3]) {
      return mm[0][0] * (mm[1][1] * mm[2][2] - mm[1][2] * mm[2][1]) -
             mm[0][1] * (mm[1][0] * mm[2][2] - mm[1][2] * mm[2][0]) +
             mm[0][2] * (mm[1][0] * mm[2][1] - mm[1][1] * mm[2][0]);
    };
    const double dg = det3(g);
    REQUIRE(std::abs(dg) > 1e-12);
    double coef[3];
    for (int a = 0; a < 3; ++a) {
      double ga[3][3];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) ga[i][j] = (j == a) ? rhs[i] : g[i][j];
      coef[a] = det3(ga) / dg;
    }
    double ss_res = 0.0, ss_tot = 0.0;
    for (int v = 0; v < m.nv(); ++v) {
      const double fit = coef[0] * m.verts[v].x + coef[1] * m.verts[v].y + coef[2] * m.verts[v].z;
      ss_res += (phi[v] - fit) * (phi[v] - fit);
      ss_tot += phi[v] * phi[v];
    }
    CHECK(ss_res / ss_tot <= 1e-3);  // eigenfunctions are coordinates up to FEM error
  }
}

TEST_CASE("first_eigenspace propagates capacity errors when count is too small") {
  const auto s = ModelSurface::sphere();
  const auto m = mesh::mesh_closed_surface(s, 0.09);
  const auto mu = fem::area_measure(m);
  // count = 2 cannot hold the zero mode plus a 3-dim multiplet.
  CHECK_THROWS_AS((void)spectra::first_eigenspace(m, mu, 2, 1), Error);
}

// ===========================================================================
// Steklov spectra
// ===========================================================================

TEST_CASE("disk normalized Steklov eigenvalue is 2 pi and scale-invariant") {
  const auto m = mesh::unit_disk_mesh(0.03);
  auto b = fem::boundary_measure(m);
  const auto r = spectra::steklov_normalized(m, b, 4, 1);
  CHECK(r.kind == spectra::SpectralKind::Steklov);
  CHECK(r.normalized[1] == doctest::Approx(2.0 * kPi).epsilon(0.01));
  CHECK(r.mass == doctest::Approx(2.0 * kPi).epsilon(0.01));

  // Scaling the measure leaves normalized values unchanged to 1e-10.
  auto scaled = b;
  for (auto& w : scaled.w) w *= 37.5;
  scaled.total *= 37.5;
  const auto r2 = spectra::steklov_normalized(m, scaled, 4, 1);
  for (int i = 1; i < 4; ++i)
    CHECK(r2.normalized[i] == doctest::Approx(r.normalized[i]).epsilon(1e-10));
}

TEST_CASE("discrete monotonicity: sigma1_bar <= lambda1_bar for the same measure") {
  // The boundary measure of the domain mesh, reused verbatim on the filled
  // closed mesh (domain vertices form a prefix), must satisfy the
  // variational comparison exactly at the discrete level: the closed-mesh
  // pencil minimizes over a larger trial space restricted through the same
  // quadratic forms.
  const auto dom = sphere_domain(6, 2, 0.045);
  const auto beta = fem::boundary_measure(dom);
  const auto sig = spectra::steklov_normalized(dom, beta, 3, 1);

  const auto filled = mesh::fill_holes(dom);
  fem::NodalMeasure mu;
  mu.w = beta.w;
  mu.w.resize(static_cast<std::size_t>(filled.nv()), 0.0);
  mu = fem::NodalMeasure::from_weights(mu.w);
  const auto lam = spectra::measure_spectrum(filled, mu, 3, 1, spectra::SpectralKind::Laplace);

  CHECK(sig.normalized[1] <= lam.normalized[1] * (1.0 + 1e-9));
  CHECK(sig.normalized[1] > 0.0);
}

TEST_CASE("construction domain stays strictly below 8 pi") {
  const auto dom = sphere_domain(6, 1, 0.05);
  const std::vector<double> f(static_cast<std::size_t>(dom.nv()), 1.0);
  const auto sol = fem::solve_poisson_dirichlet(dom, f);
  std::vector<double> density(static_cast<std::size_t>(dom.nv()), 0.0);
  {
    // Convert weak masses to a nodal density against the plain boundary
    // measure (beta = density * lumped length).
    const auto plain = fem::boundary_measure(dom);
    for (int v = 0; v < dom.nv(); ++v)
      if (plain.w[v] > 0.0) density[v] = sol.beta[v] / plain.w[v];
  }
  const auto beta_measure = fem::boundary_measure(dom, density);
  CHECK(beta_measure.total == doctest::Approx(sol.beta_total).epsilon(1e-9));

  const auto sig = spectra::steklov_normalized(dom, beta_measure, 3, 1);
  CHECK(sig.normalized[1] < 8.0 * kPi);
  CHECK(sig.normalized[1] > 0.0);
}

// ===========================================================================
// multiplets and windows
// ===========================================================================

TEST_CASE("group_multiplets splits on the relative tolerance") {
  const std::vector<double> vals = {0.0, 1.0, 1.0001, 1.2, 5.0, 5.00004, 9.0};
  const auto g = spectra::group_multiplets(vals, 1e-3);
  REQUIRE(g.size() == 5);
  CHECK(g[0] == std::vector<int>{0});
  CHECK(g[1] == std::vector<int>{1, 2});
  CHECK(g[2] == std::vector<int>{3});
  CHECK(g[3] == std::vector<int>{4, 5});
  CHECK(g[4] == std::vector<int>{6});

  // Tolerance grows with h^2 but never drops below the solver floor.
  CHECK(spectra::default_multiplet_tol(0.0) == doctest::Approx(1e-6));
  CHECK(spectra::default_multiplet_tol(0.1) == doctest::Approx(10.0 * 0.01).epsilon(1e-12));
  CHECK_THROWS_AS((void)spectra::group_multiplets({1.0, 0.5}, 1e-6), Error);  // not sorted
}

TEST_CASE("window_count counts inside [center - eta, center + eta]") {
  const std::vector<double> spec = {0.0, 10.0, 11.0, 12.0, 30.0};
  CHECK(spectra::window_count(spec, 11.0, 1.5) == 3);
  CHECK(spectra::window_count(spec, 11.0, 0.5) == 1);
  CHECK(spectra::window_count(spec, 11.0, 0.0) == 1);   // exactly on a value
  CHECK(spectra::window_count(spec, 11.5, 0.0) == 0);
  CHECK(spectra::window_count(spec, 11.0, kInf) == 5);  // infinite window: everything

  // Finite windows reaching past the computed range are a capacity error.
  try {
    (void)spectra::window_count(spec, 11.0, 25.0);
    FAIL("expected a capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Capacity);
  }
  CHECK_THROWS_AS((void)spectra::window_count(spec, 11.0, -1.0), Error);
  CHECK_THROWS_AS((void)spectra::window_count(std::vector<double>{}, 0.0, 1.0), Error);
}

// ===========================================================================
// quasimode residuals
// ===========================================================================

TEST_CASE("quasimode residuals are small for the construction at k = 6") {
  const auto dom = sphere_domain(6, 1, 0.04);

  const std::vector<double> f(static_cast<std::size_t>(dom.nv()), 1.0);
  const auto sol = fem::solve_poisson_dirichlet(dom, f);
  std::vector<double> density(static_cast<std::size_t>(dom.nv()), 0.0);
  const auto plain = fem::boundary_measure(dom);
  for (int v = 0; v < dom.nv(); ++v)
    if (plain.w[v] > 0.0) density[v] = sol.beta[v] / plain.w[v];
  const auto beta = fem::boundary_measure(dom, density);

  const auto filled = mesh::fill_holes(dom);
  const auto mu = fem::area_measure(filled);
  const auto basis = spectra::first_eigenspace(filled, mu, 8, 1);
  REQUIRE(basis.dim == 3);

  const auto sig = spectra::steklov_normalized(dom, beta, 6, 1);
  const auto rep = spectra::quasimode_residual(dom, beta, basis, sig);

  REQUIRE(rep.per_phi.size() == 3);
  CHECK(rep.max_residual > 0.0);
  // log(6)/6 ~ 0.3: residuals of order C log k / k with moderate C.
  CHECK(rep.max_residual <= 10.0 * std::log(6.0) / 6.0);
  for (double r : rep.per_phi) CHECK(r <= rep.max_residual + 1e-15);

  // Rayleigh excess realizes the energy inequality: bounded by C log k / k.
  for (double e : rep.rayleigh_excess) {
    CHECK(e > -8.0 * kPi * 0.05);  // never significantly below lambda1
    CHECK(e <= 40.0 * std::log(6.0) / 6.0);
  }
}

TEST_CASE("quasimode_residual validates dimensions") {
  const auto dom = sphere_domain(6, 1, 0.06);
  const auto beta = fem::boundary_measure(dom);
  const auto sig = spectra::steklov_normalized(dom, beta, 3, 1);
  spectra::EigenBasisV bad;
  bad.dim = 1;
  bad.funcs = {std::vector<double>(7, 1.0)};  // wrong vertex count
  CHECK_THROWS_AS((void)spectra::quasimode_residual(dom, beta, bad, sig), Error);
}

// Command-line front end: pack | mesh | solve | sweep | fit | dualnorm | certify.
// Every failure maps an error kind to a stable exit code; partial sweep
// failures are reported per k and produce a nonzero exit.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "steklab/experiments.hpp"
#include "steklab/fem.hpp"
#include "steklab/mesh.hpp"
#include "steklab/packing.hpp"
#include "steklab/spectra.hpp"
#include "steklab/stability.hpp"
#include "steklab/surface.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace steklab;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage:
    case ErrorKind::Config: return 2;
    case ErrorKind::Domain: return 3;
    case ErrorKind::Geometry: return 4;
    case ErrorKind::Meshing: return 5;
    case ErrorKind::Numeric: return 6;
    case ErrorKind::Capacity: return 7;
    case ErrorKind::Io: return 8;
  }
  return 1;
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

surface::ModelSurface surface_by_name(const std::string& name) {
  if (name == "sphere") return surface::ModelSurface::sphere();
  if (name == "square-torus") return surface::ModelSurface::square_torus();
  if (name == "equilateral-torus") return surface::ModelSurface::equilateral_torus();
  fail(ErrorKind::Config, "unknown surface '" + name + "'");
}

void emit(const std::string& out_path, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty())
    std::fputs(text.c_str(), stdout);
  else
    experiments::write_text_file(out_path, text);
}

// Poisson boundary weights for unit density, shared by solve/dualnorm/certify.
fem::NodalMeasure boundary_weights(const mesh::TriMesh& dom, double tol, double* beta_total,
                                   double* div_rel) {
  const std::vector<double> ones(static_cast<std::size_t>(dom.nv()), 1.0);
  const fem::PoissonSolution pois = fem::solve_poisson_dirichlet(dom, ones, tol);
  if (beta_total) *beta_total = pois.beta_total;
  if (div_rel) {
    const double a = fem::area_measure(dom).total;
    *div_rel = std::abs(pois.beta_total - a) / a;
  }
  return fem::NodalMeasure::from_weights(pois.beta);
}

int cmd_pack(const std::string& surf, int k, double alpha, std::uint64_t seed,
             const std::string& out) {
  const surface::ModelSurface s = surface_by_name(surf);
  const packing::DiskPacking p = packing::select_separated_points(s, k, seed);
  const packing::DomainSpec d = packing::make_domain_spec(p, alpha);
  experiments::write_text_file(out, packing::domain_spec_to_json(d));
  std::printf("pack k=%d min_separation=%s covering_radius=%s radius=%s -> %s\n", p.k(),
              fmt17(p.min_separation).c_str(), fmt17(p.covering_radius).c_str(),
              fmt17(d.pack.radii.front()).c_str(), out.c_str());
  return 0;
}

int cmd_mesh(const std::string& spec_path, const std::string& surf, double h0, double ring_ratio,
             int rings_min, int vertex_cap, const std::string& out) {
  mesh::TriMesh m;
  if (!spec_path.empty()) {
    const packing::DomainSpec d =
        packing::domain_spec_from_json(experiments::read_text_file(spec_path));
    mesh::Grading g;
    g.h0 = h0;
    g.ring_ratio = ring_ratio;
    g.rings_min = rings_min;
    g.vertex_cap = vertex_cap;
    m = mesh::mesh_domain(d.pack.surf, d, g);
  } else {
    m = mesh::mesh_closed_surface(surface_by_name(surf), h0, vertex_cap);
  }
  mesh::write_surfmesh(m, out);
  const mesh::QualityReport q = mesh::mesh_quality(m);
  std::printf("mesh nv=%d nt=%d holes=%d h_max=%s min_angle=%s -> %s\n", q.n_vertices,
              q.n_triangles, q.n_holes, fmt17(q.h_max).c_str(), fmt17(q.min_angle_deg).c_str(),
              out.c_str());
  return 0;
}

int cmd_solve(const std::string& mesh_path, int count, std::uint64_t seed, double tol,
              const std::string& out) {
  const std::string bytes = experiments::read_text_file(mesh_path);
  const mesh::TriMesh m = mesh::read_surfmesh(mesh_path);
  json j;
  spectra::SpectralResult r;
  if (m.closed) {
    r = spectra::measure_spectrum(m, fem::area_measure(m), count, seed,
                                  spectra::SpectralKind::Laplace);
    j["kind"] = "laplace";
  } else {
    double beta_total = 0.0, div_rel = 0.0;
    const fem::NodalMeasure beta = boundary_weights(m, tol, &beta_total, &div_rel);
    r = spectra::steklov_normalized(m, beta, count, seed);
    j["kind"] = "steklov";
    j["beta_total"] = beta_total;
    j["divergence_rel"] = div_rel;
  }
  j["mass"] = r.mass;
  j["eigenvalues"] = r.eigenvalues;
  j["normalized"] = r.normalized;
  j["residuals"] = r.eig.residuals;
  j["mesh_hash"] = hex64(fnv1a(bytes));
  emit(out, j);
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_csv,
              const std::string& out_json) {
  experiments::SweepConfig cfg = experiments::sweep_config_from_file(config_path);
  if (!out_csv.empty()) cfg.out_csv = out_csv;
  if (!out_json.empty()) cfg.out_json = out_json;
  const experiments::SweepResult res = experiments::run_sweep(cfg);
  for (const auto& rec : res.records) {
    if (rec.ok())
      std::printf("k=%d sigma1_bar=%s gap=%s wall_ms=%.0f\n", rec.k, fmt17(rec.sigma1_bar).c_str(),
                  fmt17(rec.gap).c_str(), rec.wall_ms);
    else
      std::printf("k=%d FAILED %s\n", rec.k, rec.status.c_str());
  }
  if (res.has_fit) {
    const auto& best = res.fit.models[static_cast<std::size_t>(res.fit.best)];
    std::printf("fit best=%s coeff=%s rel_residual=%s\n", best.name.c_str(),
                fmt17(best.coeffs[0]).c_str(), fmt17(best.rel_residual).c_str());
  }
  return res.all_ok() ? 0 : 1;
}

int cmd_fit(const std::string& json_path) {
  const experiments::SweepResult res =
      experiments::sweep_from_json(experiments::read_text_file(json_path));
  const experiments::RateFit fit = experiments::fit_rate(res.records);
  for (const auto& m : fit.models) {
    std::string coeffs;
    for (double c : m.coeffs) coeffs += (coeffs.empty() ? "" : " ") + fmt17(c);
    std::printf("model %-22s coeffs=[%s] rel_residual=%s\n", m.name.c_str(), coeffs.c_str(),
                fmt17(m.rel_residual).c_str());
  }
  std::printf("best %s\n", fit.models[static_cast<std::size_t>(fit.best)].name.c_str());
  return 0;
}

int cmd_dualnorm(const std::string& mesh_path, int count, std::uint64_t seed, double tol,
                 const std::string& out) {
  const mesh::TriMesh dom = mesh::read_surfmesh(mesh_path);
  require(!dom.closed, ErrorKind::Usage, "dualnorm: needs a domain mesh with boundary");
  double beta_total = 0.0;
  const fem::NodalMeasure beta = boundary_weights(dom, tol, &beta_total, nullptr);
  const spectra::SpectralResult stek =
      spectra::steklov_normalized(dom, beta, std::max(count, 2), seed);
  const mesh::TriMesh closed = mesh::fill_holes(dom);
  const fem::NodalMeasure area = fem::area_measure(closed);
  const spectra::EigenBasisV basis = spectra::first_eigenspace(closed, area, 8, seed);

  const double sigma1_bar = stek.normalized[1];
  const double lambda1 = basis.lambda1_normalized;
  std::vector<double> wmu(static_cast<std::size_t>(closed.nv()), 0.0);
  for (int v = 0; v < dom.nv(); ++v)
    wmu[static_cast<std::size_t>(v)] = sigma1_bar * beta.w[static_cast<std::size_t>(v)] / beta.total;
  std::vector<double> wnu(static_cast<std::size_t>(closed.nv()));
  for (int v = 0; v < closed.nv(); ++v)
    wnu[static_cast<std::size_t>(v)] = lambda1 * area.w[static_cast<std::size_t>(v)] / area.total;
  const stability::MeasureDiff diff =
      stability::MeasureDiff::raw(fem::NodalMeasure::from_weights(std::move(wmu)),
                                  fem::NodalMeasure::from_weights(std::move(wnu)));
  const double dual =
      stability::dual_norm_full(fem::stiffness_matrix(closed), area, diff, tol);

  json j;
  j["sigma1_bar"] = sigma1_bar;
  j["lambda1_computed"] = lambda1;
  j["gap_computed"] = lambda1 - sigma1_bar;
  j["dual_dist"] = dual;
  j["beta_total"] = beta_total;
  emit(out, j);
  return 0;
}

int cmd_certify(const std::string& mesh_path, std::uint64_t seed, double tol,
                const std::string& out) {
  const mesh::TriMesh dom = mesh::read_surfmesh(mesh_path);
  double beta_total = 0.0;
  const fem::NodalMeasure beta = boundary_weights(dom, tol, &beta_total, nullptr);
  const stability::CertificateRecord c = stability::certify_domain(dom, beta, seed, tol);
  json j;
  j["sigma1_bar"] = c.sigma1_bar;
  j["dual_sq"] = c.dual_sq;
  j["area_defect"] = c.area_defect;
  j["lhs"] = c.lhs;
  j["rhs"] = c.rhs;
  j["raw_pairing"] = c.raw_pairing;
  j["tol_discr"] = c.tol_discr;
  j["slack"] = c.slack;
  j["certified"] = c.certified;
  j["center"] = {c.center.x, c.center.y, c.center.z};
  j["centering_residual"] = c.centering_residual;
  j["h_max_mapped"] = c.h_max_mapped;
  emit(out, j);
  return c.certified ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nearly-maximizing perforated domains: packing, meshing, spectra, certificates"};
  app.require_subcommand(1);

  std::string surf = "sphere", spec_path, mesh_path, config_path, json_path, out;
  std::string out_csv, out_json;
  int k = 12, count = 12, rings_min = 3, vertex_cap = 600000;
  double alpha = 1.5, h0 = 0.01, ring_ratio = 1.4, tol = 1e-12;
  std::uint64_t seed = 1;

  CLI::App* pack = app.add_subcommand("pack", "select separated centers and hole radii");
  pack->add_option("--surface", surf, "sphere | square-torus | equilateral-torus");
  pack->add_option("--k", k, "number of holes")->required();
  pack->add_option("--alpha", alpha, "radius exponent, r = k^-alpha");
  pack->add_option("--seed", seed, "deterministic seed");
  pack->add_option("--out", out, "domain spec json path")->required();

  CLI::App* mesh_cmd = app.add_subcommand("mesh", "triangulate a closed surface or a domain spec");
  mesh_cmd->add_option("--spec", spec_path, "domain spec json (from pack)");
  mesh_cmd->add_option("--surface", surf, "closed surface name (when no spec is given)");
  mesh_cmd->add_option("--h0", h0, "background edge-length target");
  mesh_cmd->add_option("--ring-ratio", ring_ratio, "annulus grading ratio");
  mesh_cmd->add_option("--rings-min", rings_min, "minimum rings per hole");
  mesh_cmd->add_option("--vertex-cap", vertex_cap, "vertex budget");
  mesh_cmd->add_option("--out", out, "output mesh path")->required();

  CLI::App* solve = app.add_subcommand("solve", "spectrum of a mesh file");
  solve->add_option("--mesh", mesh_path, "mesh path")->required();
  solve->add_option("--count", count, "eigenvalue count");
  solve->add_option("--seed", seed, "deterministic seed");
  solve->add_option("--tol", tol, "linear solver tolerance");
  solve->add_option("--out", out, "output json path (default stdout)");

  CLI::App* sweep = app.add_subcommand("sweep", "run a configured k sweep");
  sweep->add_option("--config", config_path, "toml config path")->required();
  sweep->add_option("--out-csv", out_csv, "override csv output path");
  sweep->add_option("--out-json", out_json, "override json output path");

  CLI::App* fit = app.add_subcommand("fit", "refit decay models to sweep results");
  fit->add_option("--json", json_path, "sweep json path")->required();

  CLI::App* dualnorm = app.add_subcommand("dualnorm", "dual-norm distance for a domain mesh");
  dualnorm->add_option("--mesh", mesh_path, "domain mesh path")->required();
  dualnorm->add_option("--count", count, "eigenvalue count");
  dualnorm->add_option("--seed", seed, "deterministic seed");
  dualnorm->add_option("--tol", tol, "linear solver tolerance");
  dualnorm->add_option("--out", out, "output json path (default stdout)");

  CLI::App* certify = app.add_subcommand("certify", "centered gap certificate for a sphere domain");
  certify->add_option("--mesh", mesh_path, "domain mesh path")->required();
  certify->add_option("--seed", seed, "deterministic seed");
  certify->add_option("--tol", tol, "linear solver tolerance");
  certify->add_option("--out", out, "output json path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pack->parsed()) return cmd_pack(surf, k, alpha, seed, out);
    if (mesh_cmd->parsed()) return cmd_mesh(spec_path, surf, h0, ring_ratio, rings_min, vertex_cap, out);
    if (solve->parsed()) return cmd_solve(mesh_path, count, seed, tol, out);
    if (sweep->parsed()) return cmd_sweep(config_path, out_csv, out_json);
    if (fit->parsed()) return cmd_fit(json_path);
    if (dualnorm->parsed()) return cmd_dualnorm(mesh_path, count, seed, tol, out);
    if (certify->parsed()) return cmd_certify(mesh_path, seed, tol, out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

#include "steklab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "steklab/fem.hpp"
#include "steklab/mesh.hpp"
#include "steklab/packing.hpp"
#include "steklab/spectra.hpp"
#include "steklab/stability.hpp"
#include "steklab/surface.hpp"

namespace steklab::experiments {

using json = nlohmann::ordered_json;

// === configuration =========================================================

double analytic_lambda1(const std::string& surface) {
  if (surface == "sphere") return 8.0 * kPi;
  if (surface == "square-torus") return 4.0 * kPi * kPi;
  if (surface == "equilateral-torus") return 8.0 * kPi * kPi / std::sqrt(3.0);
  fail(ErrorKind::Config, "unknown surface '" + surface + "'");
}

namespace {

surface::ModelSurface surface_by_name(const std::string& name) {
  if (name == "sphere") return surface::ModelSurface::sphere();
  if (name == "square-torus") return surface::ModelSurface::square_torus();
  if (name == "equilateral-torus") return surface::ModelSurface::equilateral_torus();
  fail(ErrorKind::Config, "unknown surface '" + name + "'");
}

void validate_config(const SweepConfig& c) {
  surface_by_name(c.surface);
  require(!c.k_values.empty(), ErrorKind::Config, "sweep: empty k list");
  for (std::size_t i = 0; i < c.k_values.size(); ++i) {
    require(c.k_values[i] >= 2, ErrorKind::Config, "sweep: every k must be at least 2");
    if (i > 0)
      require(c.k_values[i] > c.k_values[i - 1], ErrorKind::Config,
              "sweep: k values must be strictly increasing");
  }
  require(c.alpha >= 1.0 && c.alpha <= 4.0, ErrorKind::Config, "sweep: alpha out of range [1,4]");
  require(c.h0 > 0.0 && c.h0 < 0.2, ErrorKind::Config, "sweep: h0 out of range (0,0.2)");
  require(c.eigen_count >= 2, ErrorKind::Config, "sweep: eigen_count must be at least 2");
  require(c.basis_count >= 2, ErrorKind::Config, "sweep: basis_count must be at least 2");
  require(c.window_scale > 0.0, ErrorKind::Config, "sweep: window_scale must be positive");
  require(c.solver_tol > 0.0 && c.solver_tol <= 1e-6, ErrorKind::Config,
          "sweep: solver_tol out of range");
}

}  // namespace

SweepConfig sweep_config_from_toml(const toml::Table& t) {
  SweepConfig c;
  c.surface = t.get_string_or("sweep.surface", c.surface);
  if (t.has("sweep.k")) {
    c.k_values.clear();
    for (std::int64_t k : t.get_int_array("sweep.k")) c.k_values.push_back(static_cast<int>(k));
  }
  c.alpha = t.get_double_or("sweep.alpha", c.alpha);
  c.seed = static_cast<std::uint64_t>(t.get_int_or("sweep.seed", static_cast<std::int64_t>(c.seed)));
  c.h0 = t.get_double_or("sweep.h0", c.h0);
  c.ring_ratio = t.get_double_or("sweep.ring_ratio", c.ring_ratio);
  c.rings_min = static_cast<int>(t.get_int_or("sweep.rings_min", c.rings_min));
  c.vertex_cap = static_cast<int>(t.get_int_or("sweep.vertex_cap", c.vertex_cap));
  c.eigen_count = static_cast<int>(t.get_int_or("sweep.eigen_count", c.eigen_count));
  c.basis_count = static_cast<int>(t.get_int_or("sweep.basis_count", c.basis_count));
  c.solver_tol = t.get_double_or("sweep.solver_tol", c.solver_tol);
  c.window_scale = t.get_double_or("sweep.window_scale", c.window_scale);
  c.certify = t.get_bool_or("sweep.certify", c.certify);
  c.out_csv = t.get_string_or("sweep.out_csv", c.out_csv);
  c.out_json = t.get_string_or("sweep.out_json", c.out_json);
  validate_config(c);
  return c;
}

SweepConfig sweep_config_from_file(const std::string& path) {
  return sweep_config_from_toml(toml::parse_file(path));
}

// === per-k pipeline ========================================================

namespace {

SweepRecord run_one_k(const surface::ModelSurface& s, const SweepConfig& cfg, int k,
                      double lambda1) {
  SweepRecord rec;
  rec.k = k;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const packing::DiskPacking pack = packing::select_separated_points(s, k, cfg.seed);
    const packing::DomainSpec spec = packing::make_domain_spec(pack, cfg.alpha);
    mesh::Grading g;
    g.h0 = cfg.h0;
    g.ring_ratio = cfg.ring_ratio;
    g.rings_min = cfg.rings_min;
    g.vertex_cap = cfg.vertex_cap;
    const mesh::TriMesh dom = mesh::mesh_domain(s, spec, g);
    rec.h_max = dom.h_max;
    rec.n_vertices = dom.nv();

    // Interior Poisson solve for the boundary weights.
    const std::vector<double> ones(static_cast<std::size_t>(dom.nv()), 1.0);
    const fem::PoissonSolution pois = fem::solve_poisson_dirichlet(dom, ones, cfg.solver_tol);
    rec.beta_total = pois.beta_total;
    const fem::NodalMeasure area_dom = fem::area_measure(dom);
    rec.divergence_rel = std::abs(pois.beta_total - area_dom.total) / area_dom.total;
    require(rec.divergence_rel <= 1e-9, ErrorKind::Numeric,
            "weak divergence identity violated beyond 1e-9 relative");
    double l2 = 0.0, linf = 0.0;
    for (int v = 0; v < dom.nv(); ++v) {
      const double p = pois.psi[static_cast<std::size_t>(v)];
      l2 += area_dom.w[static_cast<std::size_t>(v)] * p * p;
      linf = std::max(linf, std::abs(p));
    }
    rec.psi_l2 = std::sqrt(l2);
    rec.psi_linf = linf;

    const fem::NodalMeasure beta = fem::NodalMeasure::from_weights(pois.beta);
    const spectra::SpectralResult stek = spectra::steklov_normalized(
        dom, beta, cfg.eigen_count, mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(k)));
    rec.steklov_normalized = stek.normalized;
    rec.sigma1_bar = stek.normalized[1];
    rec.gap = lambda1 - rec.sigma1_bar;

    // First eigenspace of the filled closed surface and quasimode residuals.
    const mesh::TriMesh closed = mesh::fill_holes(dom);
    const fem::NodalMeasure area_closed = fem::area_measure(closed);
    const spectra::EigenBasisV basis = spectra::first_eigenspace(
        closed, area_closed, cfg.basis_count, mix_seed(cfg.seed, 2000 + static_cast<std::uint64_t>(k)));
    rec.lambda1_computed = basis.lambda1_normalized;
    const spectra::QuasimodeReport quas = spectra::quasimode_residual(dom, beta, basis, stek);
    rec.quasimode_res = quas.max_residual;

    // Dual-norm distance of sigma1 * beta-hat from lambda1 * area-hat on the
    // filled surface, both probability-normalized then eigenvalue-scaled.
    std::vector<double> wmu(static_cast<std::size_t>(closed.nv()), 0.0);
    for (int v = 0; v < dom.nv(); ++v)
      wmu[static_cast<std::size_t>(v)] = rec.sigma1_bar * beta.w[static_cast<std::size_t>(v)] / beta.total;
    std::vector<double> wnu(static_cast<std::size_t>(closed.nv()));
    for (int v = 0; v < closed.nv(); ++v)
      wnu[static_cast<std::size_t>(v)] = lambda1 * area_closed.w[static_cast<std::size_t>(v)] / area_closed.total;
    const stability::MeasureDiff diff =
        stability::MeasureDiff::raw(fem::NodalMeasure::from_weights(std::move(wmu)),
                                    fem::NodalMeasure::from_weights(std::move(wnu)));
    const linalg::Csr k_closed = fem::stiffness_matrix(closed);
    rec.dual_dist = stability::dual_norm_full(k_closed, area_closed, diff, cfg.solver_tol);

    if (cfg.certify && s.kind() == surface::SurfaceKind::Sphere) {
      const stability::CertificateRecord cert = stability::certify_domain(
          dom, beta, mix_seed(cfg.seed, 3000 + static_cast<std::uint64_t>(k)), cfg.solver_tol);
      rec.has_certificate = true;
      rec.certified = cert.certified;
      rec.cert_lhs = cert.lhs;
      rec.cert_rhs = cert.rhs;
      rec.cert_slack = cert.slack;
    }
  } catch (const Error& e) {
    rec.status = e.what();
  } catch (const std::exception& e) {
    rec.status = e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return rec;
}

}  // namespace

// === rate fitting ==========================================================

namespace {

double basis_logk(double k) { return std::log(k) / k; }
double basis_inv(double k) { return 1.0 / k; }
double basis_sqrt(double k) { return 1.0 / std::sqrt(k); }

FitModel fit_one(const std::string& name, const std::vector<double>& ks,
                 const std::vector<double>& gaps, double (*f)(double)) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double x = f(ks[i]);
    num += x * gaps[i];
    den += x * x;
  }
  FitModel m;
  m.name = name;
  m.coeffs = {num / den};
  double ss = 0.0, gg = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double r = gaps[i] - m.coeffs[0] * f(ks[i]);
    ss += r * r;
    gg += gaps[i] * gaps[i];
  }
  m.rel_residual = std::sqrt(ss / gg);
  return m;
}

FitModel fit_two(const std::vector<double>& ks, const std::vector<double>& gaps) {
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double x1 = basis_logk(ks[i]);
    const double x2 = basis_inv(ks[i]);
    a11 += x1 * x1;
    a12 += x1 * x2;
    a22 += x2 * x2;
    b1 += x1 * gaps[i];
    b2 += x2 * gaps[i];
  }
  const double det = a11 * a22 - a12 * a12;
  require(std::abs(det) > 1e-30, ErrorKind::Numeric, "rate fit: singular normal equations");
  FitModel m;
  m.name = "a*log(k)/k + b/k";
  m.coeffs = {(b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det};
  double ss = 0.0, gg = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double r = gaps[i] - m.coeffs[0] * basis_logk(ks[i]) - m.coeffs[1] * basis_inv(ks[i]);
    ss += r * r;
    gg += gaps[i] * gaps[i];
  }
  m.rel_residual = std::sqrt(ss / gg);
  return m;
}

}  // namespace

RateFit fit_rate_points(const std::vector<double>& ks, const std::vector<double>& gaps) {
  require(ks.size() == gaps.size(), ErrorKind::Usage, "rate fit: size mismatch");
  require(ks.size() >= 4, ErrorKind::Usage, "rate fit: needs at least four points");
  double gg = 0.0;
  for (double g : gaps) gg += g * g;
  require(gg > 0.0, ErrorKind::Domain, "rate fit: all gaps vanish");
  RateFit fit;
  fit.models.push_back(fit_one("a*log(k)/k", ks, gaps, basis_logk));
  fit.models.push_back(fit_one("a/k", ks, gaps, basis_inv));
  fit.models.push_back(fit_one("a/sqrt(k)", ks, gaps, basis_sqrt));
  fit.models.push_back(fit_two(ks, gaps));
  fit.best = 0;
  for (int i = 1; i < static_cast<int>(fit.models.size()); ++i)
    if (fit.models[static_cast<std::size_t>(i)].rel_residual <
        fit.models[static_cast<std::size_t>(fit.best)].rel_residual)
      fit.best = i;
  return fit;
}

RateFit fit_rate(const std::vector<SweepRecord>& records) {
  std::vector<double> ks, gaps;
  for (const auto& r : records)
    if (r.ok()) {
      ks.push_back(static_cast<double>(r.k));
      gaps.push_back(r.gap);
    }
  return fit_rate_points(ks, gaps);
}

// === sweep =================================================================

bool SweepResult::all_ok() const {
  return std::all_of(records.begin(), records.end(),
                     [](const SweepRecord& r) { return r.ok(); });
}

SweepResult run_sweep(const SweepConfig& cfg) {
  validate_config(cfg);
  SweepResult res;
  res.config = cfg;
  res.lambda1 = analytic_lambda1(cfg.surface);
  const surface::ModelSurface s = surface_by_name(cfg.surface);

  // Work pool over k, width one on a single-core host; records keep the
  // configured order.
  for (int k : cfg.k_values) res.records.push_back(run_one_k(s, cfg, k, res.lambda1));

  int n_ok = 0;
  for (const auto& r : res.records)
    if (r.ok()) ++n_ok;
  if (n_ok >= 4) {
    res.fit = fit_rate(res.records);
    res.has_fit = true;
    const double a_hat = res.fit.models[0].coeffs[0];
    for (auto& r : res.records) {
      if (!r.ok()) continue;
      const double eta = cfg.window_scale * a_hat * std::log(static_cast<double>(r.k)) /
                         static_cast<double>(r.k);
      try {
        r.window_count = spectra::window_count(r.steklov_normalized, res.lambda1, eta);
      } catch (const Error&) {
        r.window_count = -1;  // window exceeded the computed range at this k
      }
    }
  }

  if (!cfg.out_csv.empty()) write_text_file(cfg.out_csv, records_to_csv(res.records));
  if (!cfg.out_json.empty()) write_text_file(cfg.out_json, sweep_to_json(res));
  return res;
}

// === serialization =========================================================

namespace {

std::string sanitize_status(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return out;
}

}  // namespace

std::string records_to_csv(const std::vector<SweepRecord>& records) {
  std::ostringstream os;
  os << "k,h_max,n_vertices,sigma1_bar,gap,beta_total,psi_l2,psi_linf,quasimode_res,"
        "window_count,dual_dist,wall_ms,status\n";
  for (const auto& r : records) {
    os << r.k << ',';
    if (r.ok()) {
      os << fmt17(r.h_max) << ',' << r.n_vertices << ',' << fmt17(r.sigma1_bar) << ','
         << fmt17(r.gap) << ',' << fmt17(r.beta_total) << ',' << fmt17(r.psi_l2) << ','
         << fmt17(r.psi_linf) << ',' << fmt17(r.quasimode_res) << ',';
      if (r.window_count >= 0) os << r.window_count;
      os << ',' << fmt17(r.dual_dist) << ',' << fmt17(r.wall_ms) << ',';
    } else {
      os << ",,,,,,,,,," << fmt17(r.wall_ms) << ',';
    }
    os << sanitize_status(r.status) << '\n';
  }
  return os.str();
}

std::string csv_without_wall(const std::string& csv) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    // wall_ms is the 12th of 13 comma-separated fields.
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream ls(line);
    while (std::getline(ls, cur, ',')) fields.push_back(cur);
    while (fields.size() < 13) fields.push_back("");
    fields[11].clear();
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os << ',';
      os << fields[i];
    }
    os << '\n';
  }
  return os.str();
}

namespace {

json config_to_json(const SweepConfig& c) {
  json j;
  j["surface"] = c.surface;
  j["k"] = c.k_values;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["h0"] = c.h0;
  j["ring_ratio"] = c.ring_ratio;
  j["rings_min"] = c.rings_min;
  j["vertex_cap"] = c.vertex_cap;
  j["eigen_count"] = c.eigen_count;
  j["basis_count"] = c.basis_count;
  j["solver_tol"] = c.solver_tol;
  j["window_scale"] = c.window_scale;
  j["certify"] = c.certify;
  j["out_csv"] = c.out_csv;
  j["out_json"] = c.out_json;
  return j;
}

SweepConfig config_from_json(const json& j) {
  SweepConfig c;
  c.surface = j.at("surface").get<std::string>();
  c.k_values = j.at("k").get<std::vector<int>>();
  c.alpha = j.at("alpha").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.h0 = j.at("h0").get<double>();
  c.ring_ratio = j.at("ring_ratio").get<double>();
  c.rings_min = j.at("rings_min").get<int>();
  c.vertex_cap = j.at("vertex_cap").get<int>();
  c.eigen_count = j.at("eigen_count").get<int>();
  c.basis_count = j.at("basis_count").get<int>();
  c.solver_tol = j.at("solver_tol").get<double>();
  c.window_scale = j.at("window_scale").get<double>();
  c.certify = j.at("certify").get<bool>();
  c.out_csv = j.at("out_csv").get<std::string>();
  c.out_json = j.at("out_json").get<std::string>();
  return c;
}

json record_to_json(const SweepRecord& r) {
  json j;
  j["k"] = r.k;
  j["status"] = r.status;
  j["wall_ms"] = r.wall_ms;
  if (r.ok()) {
    j["h_max"] = r.h_max;
    j["n_vertices"] = r.n_vertices;
    j["sigma1_bar"] = r.sigma1_bar;
    j["gap"] = r.gap;
    j["beta_total"] = r.beta_total;
    j["psi_l2"] = r.psi_l2;
    j["psi_linf"] = r.psi_linf;
    j["quasimode_res"] = r.quasimode_res;
    j["window_count"] = r.window_count;
    j["dual_dist"] = r.dual_dist;
    j["steklov_normalized"] = r.steklov_normalized;
    j["lambda1_computed"] = r.lambda1_computed;
    j["divergence_rel"] = r.divergence_rel;
    if (r.has_certificate) {
      json c;
      c["certified"] = r.certified;
      c["lhs"] = r.cert_lhs;
      c["rhs"] = r.cert_rhs;
      c["slack"] = r.cert_slack;
      j["certificate"] = c;
    }
  }
  return j;
}

SweepRecord record_from_json(const json& j) {
  SweepRecord r;
  r.k = j.at("k").get<int>();
  r.status = j.at("status").get<std::string>();
  r.wall_ms = j.at("wall_ms").get<double>();
  if (r.ok()) {
    r.h_max = j.at("h_max").get<double>();
    r.n_vertices = j.at("n_vertices").get<int>();
    r.sigma1_bar = j.at("sigma1_bar").get<double>();
    r.gap = j.at("gap").get<double>();
    r.beta_total = j.at("beta_total").get<double>();
    r.psi_l2 = j.at("psi_l2").get<double>();
    r.psi_linf = j.at("psi_linf").get<double>();
    r.quasimode_res = j.at("quasimode_res").get<double>();
    r.window_count = j.at("window_count").get<int>();
    r.dual_dist = j.at("dual_dist").get<double>();
    r.steklov_normalized = j.at("steklov_normalized").get<std::vector<double>>();
    r.lambda1_computed = j.at("lambda1_computed").get<double>();
    r.divergence_rel = j.at("divergence_rel").get<double>();
    if (j.contains("certificate")) {
      const json& c = j.at("certificate");
      r.has_certificate = true;
      r.certified = c.at("certified").get<bool>();
      r.cert_lhs = c.at("lhs").get<double>();
      r.cert_rhs = c.at("rhs").get<double>();
      r.cert_slack = c.at("slack").get<double>();
    }
  }
  return r;
}

}  // namespace

std::string sweep_to_json(const SweepResult& r) {
  json j;
  j["config"] = config_to_json(r.config);
  j["lambda1"] = r.lambda1;
  if (r.has_fit) {
    json f;
    f["best"] = r.fit.best;
    f["models"] = json::array();
    for (const auto& m : r.fit.models) {
      json jm;
      jm["name"] = m.name;
      jm["coeffs"] = m.coeffs;
      jm["rel_residual"] = m.rel_residual;
      f["models"].push_back(jm);
    }
    j["fit"] = f;
  } else {
    j["fit"] = nullptr;
  }
  j["records"] = json::array();
  for (const auto& rec : r.records) j["records"].push_back(record_to_json(rec));
  return j.dump(2) + "\n";
}

SweepResult sweep_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorKind::Io, std::string("sweep json parse: ") + e.what());
  }
  SweepResult r;
  r.config = config_from_json(j.at("config"));
  r.lambda1 = j.at("lambda1").get<double>();
  if (!j.at("fit").is_null()) {
    r.has_fit = true;
    const json& f = j.at("fit");
    r.fit.best = f.at("best").get<int>();
    for (const json& jm : f.at("models")) {
      FitModel m;
      m.name = jm.at("name").get<std::string>();
      m.coeffs = jm.at("coeffs").get<std::vector<double>>();
      m.rel_residual = jm.at("rel_residual").get<double>();
      r.fit.models.push_back(std::move(m));
    }
  }
  for (const json& jr : j.at("records")) r.records.push_back(record_from_json(jr));
  return r;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << content;
  require(out.good(), ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace steklab::experiments

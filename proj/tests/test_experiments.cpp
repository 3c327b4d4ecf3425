#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <steklab/experiments.hpp>
#include <steklab/tomlmini.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using namespace steklab;
using experiments::FitModel;
using experiments::RateFit;
using experiments::SweepConfig;
using experiments::SweepRecord;
using experiments::SweepResult;

namespace {

const std::vector<double> kKs{6.0, 12.0, 24.0, 48.0, 96.0};

std::vector<double> apply_model(double a, double b) {
  std::vector<double> g;
  for (double k : kKs) g.push_back(a * std::log(k) / k + b / k);
  return g;
}

}  // namespace

// ===========================================================================
// analytic references
// ===========================================================================

TEST_CASE("analytic_lambda1 knows the three model surfaces") {
  CHECK(experiments::analytic_lambda1("sphere") == doctest::Approx(8.0 * kPi).epsilon(1e-15));
  CHECK(experiments::analytic_lambda1("square-torus") ==
        doctest::Approx(4.0 * kPi * kPi).epsilon(1e-15));
  CHECK(experiments::analytic_lambda1("equilateral-torus") ==
        doctest::Approx(8.0 * kPi * kPi / std::sqrt(3.0)).epsilon(1e-15));
  try {
    (void)experiments::analytic_lambda1("klein-bottle");
    FAIL("expected a config error for an unknown surface");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

// ===========================================================================
// rate fits
// ===========================================================================

TEST_CASE("fit recovers exact single-model coefficients") {
  const auto fit = experiments::fit_rate_points(kKs, apply_model(3.0, 0.0));
  REQUIRE(fit.models.size() == 4);
  CHECK(fit.models[0].name == "a*log(k)/k");
  CHECK(fit.models[0].coeffs.size() == 1);
  CHECK(fit.models[0].coeffs[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.models[0].rel_residual <= 1e-12);
  // The two-parameter family contains this model, so either may win the tie.
  CHECK((fit.best == 0 || fit.best == 3));
  CHECK(fit.models[1].rel_residual > 1e-3);
  CHECK(fit.models[2].rel_residual > 1e-3);

  const auto inv = experiments::fit_rate_points(kKs, apply_model(0.0, 5.0));
  CHECK(inv.models[1].name == "a/k");
  CHECK(inv.models[1].coeffs[0] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(inv.models[1].rel_residual <= 1e-12);
  CHECK((inv.best == 1 || inv.best == 3));
  CHECK(inv.models[0].rel_residual > 1e-3);
}

TEST_CASE("fit recovers the mixed two-parameter model uniquely") {
  const auto fit = experiments::fit_rate_points(kKs, apply_model(2.0, 7.0));
  REQUIRE(fit.models.size() == 4);
  CHECK(fit.models[3].name == "a*log(k)/k + b/k");
  REQUIRE(fit.models[3].coeffs.size() == 2);
  CHECK(fit.models[3].coeffs[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(fit.models[3].coeffs[1] == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(fit.models[3].rel_residual <= 1e-12);
  CHECK(fit.best == 3);
  for (int i = 0; i < 3; ++i) CHECK(fit.models[static_cast<std::size_t>(i)].rel_residual > 1e-3);
}

TEST_CASE("fit coefficients match a dense least-squares oracle") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(1.0, 10.0);
  std::vector<double> gaps;
  for (std::size_t i = 0; i < kKs.size(); ++i) gaps.push_back(u(rng) / kKs[i]);

  const auto fit = experiments::fit_rate_points(kKs, gaps);
  const auto n = static_cast<Eigen::Index>(kKs.size());
  const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(gaps.data(), n);
  const double gnorm = g.norm();

  const auto check_model = [&](const FitModel& m, const Eigen::MatrixXd& design) {
    const Eigen::VectorXd c = design.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(g);
    REQUIRE(m.coeffs.size() == static_cast<std::size_t>(c.size()));
    for (Eigen::Index j = 0; j < c.size(); ++j)
      CHECK(m.coeffs[static_cast<std::size_t>(j)] == doctest::Approx(c(j)).epsilon(1e-10));
    const double res = (g - design * c).norm() / gnorm;
    CHECK(m.rel_residual == doctest::Approx(res).epsilon(1e-9));
  };

  Eigen::MatrixXd d1(n, 1), d2(n, 1), d3(n, 1), d4(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double k = kKs[static_cast<std::size_t>(i)];
    d1(i, 0) = std::log(k) / k;
    d2(i, 0) = 1.0 / k;
    d3(i, 0) = 1.0 / std::sqrt(k);
    d4(i, 0) = d1(i, 0);
    d4(i, 1) = d2(i, 0);
  }
  check_model(fit.models[0], d1);
  check_model(fit.models[1], d2);
  check_model(fit.models[2], d3);
  check_model(fit.models[3], d4);
}

TEST_CASE("fit input validation") {
  CHECK_THROWS_AS((void)experiments::fit_rate_points({6.0, 12.0}, {1.0, 2.0, 3.0}), Error);
  CHECK_THROWS_AS((void)experiments::fit_rate_points({6.0, 12.0, 24.0}, {1.0, 0.5, 0.2}), Error);
  try {
    (void)experiments::fit_rate_points(kKs, std::vector<double>(kKs.size(), 0.0));
    FAIL("expected a domain error for vanishing gaps");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }

  // fit_rate skips failed records and needs four surviving ones.
  std::vector<SweepRecord> recs;
  for (double k : kKs) {
    SweepRecord r;
    r.k = static_cast<int>(k);
    r.gap = 3.0 * std::log(k) / k;
    recs.push_back(r);
  }
  recs[2].status = "meshing failed";
  recs[3].status = "solver failed";
  CHECK_THROWS_AS((void)experiments::fit_rate(recs), Error);
  recs[2].status = "ok";
  recs[3].status = "ok";
  const auto fit = experiments::fit_rate(recs);
  CHECK(fit.models[0].coeffs[0] == doctest::Approx(3.0).epsilon(1e-12));
}

// ===========================================================================
// configuration
// ===========================================================================

TEST_CASE("sweep config reads the toml surface and validates ranges") {
  const auto t = toml::parse(R"(
[sweep]
surface = "square-torus"
k = [4, 8, 16]
alpha = 2.0
seed = 7
h0 = 0.02
eigen_count = 9
certify = false
out_csv = "out.csv"
)");
  const auto c = experiments::sweep_config_from_toml(t);
  CHECK(c.surface == "square-torus");
  CHECK(c.k_values == std::vector<int>{4, 8, 16});
  CHECK(c.alpha == 2.0);
  CHECK(c.seed == 7);
  CHECK(c.h0 == 0.02);
  CHECK(c.eigen_count == 9);
  CHECK(c.basis_count == 8);  // untouched default
  CHECK_FALSE(c.certify);
  CHECK(c.out_csv == "out.csv");
  CHECK(c.out_json.empty());

  const auto expect_config_error = [](const std::string& body) {
    try {
      (void)experiments::sweep_config_from_toml(toml::parse(body));
      FAIL("expected a config error for: ", body);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  };
  expect_config_error("[sweep]\nsurface = \"plane\"\nk = [4, 8, 16, 32]");
  expect_config_error("[sweep]\nk = []");
  expect_config_error("[sweep]\nk = [1, 2]");
  expect_config_error("[sweep]\nk = [8, 8]");
  expect_config_error("[sweep]\nk = [8, 4]");
  expect_config_error("[sweep]\nk = [4, 8]\nalpha = 0.5");
  expect_config_error("[sweep]\nk = [4, 8]\nalpha = 5.0");
  expect_config_error("[sweep]\nk = [4, 8]\nh0 = 0.5");
  expect_config_error("[sweep]\nk = [4, 8]\neigen_count = 1");
  expect_config_error("[sweep]\nk = [4, 8]\nsolver_tol = 0.001");
  expect_config_error("[sweep]\nk = [4, 8]\nwindow_scale = 0.0");
  expect_config_error("");  // no k list at all
}

// ===========================================================================
// serialization
// ===========================================================================

namespace {

SweepRecord sample_ok_record() {
  SweepRecord r;
  r.k = 6;
  r.h_max = 0.0123;
  r.n_vertices = 4321;
  r.sigma1_bar = 15.37;
  r.gap = 8.0 * kPi - r.sigma1_bar;
  r.beta_total = 0.91;
  r.psi_l2 = 0.031;
  r.psi_linf = 0.044;
  r.quasimode_res = 2.5;
  r.window_count = 5;
  r.dual_dist = 9.5;
  r.wall_ms = 123.456;
  r.steklov_normalized = {0.0, 15.37, 15.38, 15.39};
  r.lambda1_computed = 25.13;
  r.divergence_rel = 3e-14;
  r.has_certificate = true;
  r.certified = true;
  r.cert_lhs = 15.8;
  r.cert_rhs = 29.3;
  r.cert_slack = 13.5;
  return r;
}

}  // namespace

TEST_CASE("CSV rows follow the frozen column contract") {
  SweepRecord ok = sample_ok_record();
  SweepRecord unwindowed = sample_ok_record();
  unwindowed.k = 12;
  unwindowed.window_count = -1;
  SweepRecord failed;
  failed.k = 24;
  failed.wall_ms = 7.5;
  failed.status = "meshing, failed\nbadly";

  const std::string csv = experiments::records_to_csv({ok, unwindowed, failed});
  std::vector<std::string> lines;
  {
    std::istringstream is(csv);
    for (std::string l; std::getline(is, l);) lines.push_back(l);
  }
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] ==
        "k,h_max,n_vertices,sigma1_bar,gap,beta_total,psi_l2,psi_linf,quasimode_res,"
        "window_count,dual_dist,wall_ms,status");
  CHECK(lines[1] == "6," + fmt17(0.0123) + ",4321," + fmt17(ok.sigma1_bar) + "," + fmt17(ok.gap) +
                        "," + fmt17(0.91) + "," + fmt17(0.031) + "," + fmt17(0.044) + "," +
                        fmt17(2.5) + ",5," + fmt17(9.5) + "," + fmt17(123.456) + ",ok");
  // A never-computed window count serializes as an empty field.
  CHECK(lines[2].find(fmt17(2.5) + ",," + fmt17(9.5)) != std::string::npos);
  // Failed rows blank every numeric field and sanitize the separator chars.
  CHECK(lines[3] == "24,,,,,,,,,,," + fmt17(7.5) + ",meshing; failed;badly");

  // Blanking wall_ms makes reruns byte-comparable.
  SweepRecord slower = ok;
  slower.wall_ms = 999.0;
  const std::string a = experiments::csv_without_wall(csv);
  const std::string b = experiments::csv_without_wall(
      experiments::records_to_csv({slower, unwindowed, failed}));
  CHECK(a == b);
  std::istringstream is(a);
  for (std::string l; std::getline(is, l);) {
    std::size_t commas = 0;
    for (char ch : l) commas += (ch == ',');
    CHECK(commas == 12);
  }
  CHECK(a.find(fmt17(123.456)) == std::string::npos);
}

TEST_CASE("sweep JSON round-trips every field and is byte-deterministic") {
  SweepResult r;
  r.config.surface = "square-torus";
  r.config.k_values = {4, 8, 16, 32};
  r.config.alpha = 2.0;
  r.config.seed = 11;
  r.config.h0 = 0.01;
  r.config.certify = false;
  r.config.out_csv = "a.csv";
  r.lambda1 = experiments::analytic_lambda1("square-torus");
  r.records.push_back(sample_ok_record());
  SweepRecord failed;
  failed.k = 24;
  failed.status = "solver blew up";
  failed.wall_ms = 3.25;
  r.records.push_back(failed);
  r.has_fit = true;
  r.fit = experiments::fit_rate_points(kKs, apply_model(2.0, 7.0));

  const std::string text = experiments::sweep_to_json(r);
  const SweepResult back = experiments::sweep_from_json(text);

  CHECK(back.config.surface == r.config.surface);
  CHECK(back.config.k_values == r.config.k_values);
  CHECK(back.config.alpha == r.config.alpha);
  CHECK(back.config.seed == r.config.seed);
  CHECK(back.config.h0 == r.config.h0);
  CHECK(back.config.certify == r.config.certify);
  CHECK(back.config.out_csv == r.config.out_csv);
  CHECK(back.lambda1 == r.lambda1);
  REQUIRE(back.records.size() == 2);
  const auto& b0 = back.records[0];
  const auto& r0 = r.records[0];
  CHECK(b0.k == r0.k);
  CHECK(b0.h_max == r0.h_max);
  CHECK(b0.n_vertices == r0.n_vertices);
  CHECK(b0.sigma1_bar == r0.sigma1_bar);
  CHECK(b0.gap == r0.gap);
  CHECK(b0.beta_total == r0.beta_total);
  CHECK(b0.psi_l2 == r0.psi_l2);
  CHECK(b0.psi_linf == r0.psi_linf);
  CHECK(b0.quasimode_res == r0.quasimode_res);
  CHECK(b0.window_count == r0.window_count);
  CHECK(b0.dual_dist == r0.dual_dist);
  CHECK(b0.wall_ms == r0.wall_ms);
  CHECK(b0.status == r0.status);
  CHECK(b0.steklov_normalized == r0.steklov_normalized);
  CHECK(b0.lambda1_computed == r0.lambda1_computed);
  CHECK(b0.divergence_rel == r0.divergence_rel);
  CHECK(b0.has_certificate == r0.has_certificate);
  CHECK(b0.certified == r0.certified);
  CHECK(b0.cert_lhs == r0.cert_lhs);
  CHECK(b0.cert_rhs == r0.cert_rhs);
  CHECK(b0.cert_slack == r0.cert_slack);
  CHECK(back.records[1].status == "solver blew up");
  CHECK_FALSE(back.records[1].ok());
  REQUIRE(back.has_fit);
  CHECK(back.fit.best == r.fit.best);
  REQUIRE(back.fit.models.size() == r.fit.models.size());
  for (std::size_t i = 0; i < r.fit.models.size(); ++i) {
    CHECK(back.fit.models[i].name == r.fit.models[i].name);
    CHECK(back.fit.models[i].coeffs == r.fit.models[i].coeffs);
    CHECK(back.fit.models[i].rel_residual == r.fit.models[i].rel_residual);
  }

  CHECK(experiments::sweep_to_json(back) == text);

  try {
    (void)experiments::sweep_from_json("{ not json");
    FAIL("expected an io error for malformed json");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("text files round-trip and missing paths are io errors") {
  const std::string path = "test_experiments_roundtrip.txt";
  const std::string payload = "line one\nline two\n";
  experiments::write_text_file(path, payload);
  CHECK(experiments::read_text_file(path) == payload);
  std::remove(path.c_str());
  try {
    (void)experiments::read_text_file("no_such_directory/no_such_file.txt");
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

// ===========================================================================
// sweep orchestration
// ===========================================================================

TEST_CASE("a failing k is recorded without aborting the sweep") {
  SweepConfig cfg;
  cfg.k_values = {2, 6};  // two holes cannot keep doubled disks disjoint
  cfg.h0 = 0.05;
  cfg.eigen_count = 8;
  cfg.certify = false;

  const auto res = experiments::run_sweep(cfg);
  REQUIRE(res.records.size() == 2);
  CHECK_FALSE(res.all_ok());
  CHECK_FALSE(res.records[0].ok());
  CHECK(res.records[0].k == 2);
  CHECK(res.records[0].n_vertices == 0);
  CHECK(res.records[1].ok());
  CHECK(res.records[1].k == 6);
  CHECK(res.records[1].sigma1_bar > 0.0);
  CHECK(res.records[1].gap > 0.0);
  CHECK_FALSE(res.has_fit);  // needs four surviving records
  CHECK(res.lambda1 == doctest::Approx(8.0 * kPi).epsilon(1e-15));

  // The failed row leaves its numeric fields empty in CSV.
  const auto csv = experiments::records_to_csv(res.records);
  CHECK(csv.find("\n2,,,,,,,,,,,") != std::string::npos);
}

TEST_CASE("sweeps are deterministic modulo wall time and write their files") {
  SweepConfig cfg;
  cfg.k_values = {6};
  cfg.h0 = 0.05;
  cfg.eigen_count = 8;
  cfg.certify = true;
  cfg.out_csv = "sweep_smoke.csv";
  cfg.out_json = "sweep_smoke.json";

  const auto a = experiments::run_sweep(cfg);
  const std::string csv_a = experiments::read_text_file(cfg.out_csv);
  const std::string json_a = experiments::read_text_file(cfg.out_json);
  CHECK(csv_a == experiments::records_to_csv(a.records));

  const auto round = experiments::sweep_from_json(json_a);
  CHECK(round.records.size() == 1);
  CHECK(round.records[0].k == 6);
  CHECK(round.records[0].sigma1_bar == a.records[0].sigma1_bar);
  CHECK(round.records[0].has_certificate);
  CHECK(round.records[0].certified);
  CHECK(round.records[0].cert_lhs < round.records[0].cert_rhs);

  const auto b = experiments::run_sweep(cfg);
  CHECK(experiments::csv_without_wall(experiments::records_to_csv(a.records)) ==
        experiments::csv_without_wall(experiments::records_to_csv(b.records)));
  std::remove(cfg.out_csv.c_str());
  std::remove(cfg.out_json.c_str());
}

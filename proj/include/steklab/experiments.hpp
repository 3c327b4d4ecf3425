#pragma once

// Sweep orchestration: runs the construct-and-measure pipeline over a list
// of hole counts, fits the eigenvalue-gap decay against candidate rate
// models, and serializes results as CSV / JSON with deterministic bytes
// (modulo wall-clock timings).

#include <cstdint>
#include <string>
#include <vector>

#include "steklab/tomlmini.hpp"

namespace steklab::experiments {

struct SweepConfig {
  std::string surface = "sphere";  // sphere | square-torus | equilateral-torus
  std::vector<int> k_values;       // strictly increasing, each >= 2
  double alpha = 1.5;              // hole radius exponent, r = k^{-alpha}
  std::uint64_t seed = 1;
  double h0 = 0.005;               // background edge-length target
  double ring_ratio = 1.4;
  int rings_min = 3;
  int vertex_cap = 500000;
  int eigen_count = 12;
  int basis_count = 8;             // closed-surface eigenpairs for the first eigenspace
  double solver_tol = 1e-12;
  double window_scale = 1.5;       // window half-width = scale * fitted a * log k / k
  bool certify = true;             // sphere only; ignored elsewhere
  std::string out_csv;             // empty = do not write
  std::string out_json;
};

SweepConfig sweep_config_from_toml(const toml::Table& t);
SweepConfig sweep_config_from_file(const std::string& path);

// First nonzero normalized closed-surface eigenvalue of a named surface.
double analytic_lambda1(const std::string& surface);

struct SweepRecord {
  int k = 0;
  double h_max = 0.0;
  int n_vertices = 0;
  double sigma1_bar = 0.0;
  double gap = 0.0;         // analytic lambda1 minus sigma1_bar
  double beta_total = 0.0;
  double psi_l2 = 0.0;
  double psi_linf = 0.0;
  double quasimode_res = 0.0;
  int window_count = -1;    // -1 = not computed
  double dual_dist = 0.0;
  double wall_ms = 0.0;
  std::string status = "ok";

  // Diagnostics carried in JSON but not in CSV.
  std::vector<double> steklov_normalized;
  double lambda1_computed = 0.0;
  double divergence_rel = 0.0;
  bool has_certificate = false;
  bool certified = false;
  double cert_lhs = 0.0;
  double cert_rhs = 0.0;
  double cert_slack = 0.0;

  bool ok() const { return status == "ok"; }
};

struct FitModel {
  std::string name;
  std::vector<double> coeffs;
  double rel_residual = 0.0;
};

struct RateFit {
  std::vector<FitModel> models;  // log/k, 1/k, 1/sqrt(k), log/k + 1/k
  int best = -1;                 // least relative residual
};

// Least-squares fit of gap values against the candidate decay models; the
// single-parameter models come first. Needs at least four points.
RateFit fit_rate_points(const std::vector<double>& ks, const std::vector<double>& gaps);
RateFit fit_rate(const std::vector<SweepRecord>& records);

struct SweepResult {
  SweepConfig config;
  double lambda1 = 0.0;  // analytic reference for the configured surface
  std::vector<SweepRecord> records;
  bool has_fit = false;
  RateFit fit;

  bool all_ok() const;
};

// Runs every configured k in order; a failing k is captured in its record's
// status and never aborts the sweep. Writes the configured output files.
SweepResult run_sweep(const SweepConfig& cfg);

// CSV with the frozen column order
// k,h_max,n_vertices,sigma1_bar,gap,beta_total,psi_l2,psi_linf,quasimode_res,
// window_count,dual_dist,wall_ms,status; failed rows leave numeric fields
// empty.
std::string records_to_csv(const std::vector<SweepRecord>& records);

// The same CSV with the volatile wall_ms column blanked, for byte comparisons.
std::string csv_without_wall(const std::string& csv);

std::string sweep_to_json(const SweepResult& r);
SweepResult sweep_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace steklab::experiments

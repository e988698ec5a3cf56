#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "milab/sgd.hpp"

namespace milab::experiments {

enum class Mode { Trajectory, Sweep, Escape, PeriodicFlatness, Selfcheck, HermiteDump };

Mode mode_from_string(const std::string& s);
std::string to_string(Mode m);

/// Target/activation/distribution descriptors as they appear in config files;
/// concrete specs are instantiated per grid point.
struct TargetDesc {
  std::string kind = "single_index";  // single_index | periodic | product
  std::string link = "hermite";       // identity | hermite | sin | tanh | gauss_sq
  int degree = 0;                     // 0 = take the grid's k_star
  double norm_u = 0.0;                // 0 = sqrt(d) for periodic, 1 otherwise
};

struct ActivationDesc {
  std::string kind = "relu";
  double alpha = 0.0;
  int degree = 0;  // hermite activations; 0 = take the grid's k_star
};

/// Full description of one run or sweep; the repository's user surface.
struct ExperimentConfig {
  std::string name;
  Mode mode = Mode::Trajectory;
  std::vector<std::int64_t> d, m, p, k_star;
  std::vector<std::uint64_t> seeds;

  // Per-run SGD settings. eta > 0 wins; otherwise eta = eta_coeff * d^eta_pow.
  double eta = 0.0;
  double eta_coeff = 1.0;
  double eta_pow = -1.0;
  std::int64_t T = 1000;
  double t_budget_coeff = 0.0;  // escape cap: T = min(T, coeff * d^pow); 0 = off
  double t_budget_pow = 2.0;
  std::int64_t record_every = 100;
  bool hybrid_early = false;
  std::int64_t mc_samples = 0;
  std::int64_t grad_samples = 0;
  std::int64_t kappa_samples = 0;
  double clip_G = 0.0;  // 0 = off
  double kappa_G = 1.0;
  double thm1_C = 5.0;
  double thm1_kappa_bar = 1.0;
  double delta = 0.01;

  TargetDesc target;
  ActivationDesc activation;
  std::string distribution = "standard_gaussian";
  double escape_threshold = 0.5;
  std::string output_dir = "out";
};

/// Parse + validate. ParseError carries line/column, ValidationError the
/// offending field path.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Canonical serialization (sorted keys, round-trippable numbers). Equal
/// canonical forms hash equal and produce byte-equal outputs.
std::string canonical_config_json(const ExperimentConfig& cfg);
std::string config_sha256(const ExperimentConfig& cfg);

/// One long-format output row; the frozen 17-column CSV schema.
struct ReportRow {
  std::string experiment;
  std::int64_t d = 0, m = 0, p = 0, k_star = 0;
  std::uint64_t seed = 0;
  std::int64_t t = 0;
  double rho = 0, w_fro = 0, s_min = 0, s_max = 0;
  double loss_hat = 0, loss_se = 0, grad_pop_hat = 0, kappa_hat = 0;
  double psi_at_rho = 0, ceiling_thm1 = 0;
};

extern const char* kCsvHeader;
std::string report_rows_to_csv(const std::vector<ReportRow>& rows);
std::string report_rows_to_json(const std::vector<ReportRow>& rows);

struct RunParams {
  std::int64_t d = 0, m = 0, p = 0, k_star = 0;
  std::uint64_t seed = 0;
};

struct RunOutput {
  RunParams params;
  std::string status = "ok";  // or "error: ..."
  std::int64_t wall_ms = 0;
  std::vector<ReportRow> rows;
  std::vector<sgd::TrajectoryRecord> records;
  std::optional<std::int64_t> escape_t;
};

struct SweepResult {
  std::vector<RunOutput> runs;
  std::string manifest_json;
  std::string summary_json;  // escape fit / flatness checks, mode dependent
  std::string out_dir;       // directory the files were written into
};

struct RunOptions {
  int jobs = 1;
  std::string out_dir_override;
  std::int64_t seed_offset = 0;
  bool write_files = true;
};

/// Expand the grid, run every trajectory (optionally in parallel workers that
/// never share state), write one CSV per run plus manifest.json, and the
/// mode-specific summary. Per-run failures are recorded in the manifest
/// without aborting the sweep.
SweepResult run_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {});

// ---------------------------------------------------------------------------
// Escape-time fitting
// ---------------------------------------------------------------------------

struct EscapeObservation {
  std::int64_t d = 0;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> escape_t;  // empty = censored at the budget
};

struct EscapeResult {
  double threshold = 0.5;
  struct PerD {
    std::int64_t d = 0;
    int n_uncensored = 0;
    int n_censored = 0;
    double median_t = 0.0;
  };
  std::vector<PerD> per_d;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms residual of the log-log least squares fit
};

/// Least-squares fit of log(median T_esc) against log(d). Censored runs are
/// excluded from the medians and counted; requires >= 3 d values with >= 5
/// uncensored seeds each, otherwise InsufficientData.
EscapeResult fit_escape(const std::vector<EscapeObservation>& obs, double threshold);

/// First recorded step with rho >= threshold, read off a trajectory.
std::optional<std::int64_t> first_crossing(const std::vector<sgd::TrajectoryRecord>& recs,
                                           double threshold);

}  // namespace milab::experiments

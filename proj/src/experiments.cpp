#include "milab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "sha256.hpp"

#include <nlohmann/json.hpp>

namespace milab::experiments {

using json = nlohmann::json;

Mode mode_from_string(const std::string& s) {
  if (s == "trajectory") return Mode::Trajectory;
  if (s == "sweep") return Mode::Sweep;
  if (s == "escape") return Mode::Escape;
  if (s == "periodic_flatness") return Mode::PeriodicFlatness;
  if (s == "selfcheck") return Mode::Selfcheck;
  if (s == "hermite_dump") return Mode::HermiteDump;
  fail(ErrorCode::ValidationError, "mode: unknown value '" + s + "'");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Trajectory: return "trajectory";
    case Mode::Sweep: return "sweep";
    case Mode::Escape: return "escape";
    case Mode::PeriodicFlatness: return "periodic_flatness";
    case Mode::Selfcheck: return "selfcheck";
    case Mode::HermiteDump: return "hermite_dump";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

struct Validator {
  std::vector<std::string> errors;
  void require(bool ok, const std::string& field, const std::string& msg) {
    if (!ok) errors.push_back(field + ": " + msg);
  }
  void finish() {
    if (errors.empty()) return;
    std::string joined;
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (i) joined += "; ";
      joined += errors[i];
    }
    fail(ErrorCode::ValidationError, joined);
  }
};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, e.what());  // nlohmann reports byte position
  }

  ExperimentConfig cfg;
  Validator v;
  try {
    v.require(j.contains("name") && j["name"].is_string(), "name", "required string");
    if (j.contains("name") && j["name"].is_string()) cfg.name = j["name"];
    v.require(j.contains("mode") && j["mode"].is_string(), "mode", "required string");
    if (j.contains("mode") && j["mode"].is_string())
      cfg.mode = mode_from_string(j["mode"].get<std::string>());

    const json grid = j.value("grid", json::object());
    cfg.d = get_or<std::vector<std::int64_t>>(grid, "d", {64});
    cfg.m = get_or<std::vector<std::int64_t>>(grid, "m", {1});
    cfg.p = get_or<std::vector<std::int64_t>>(grid, "p", {1});
    cfg.k_star = get_or<std::vector<std::int64_t>>(grid, "k_star", {1});
    cfg.seeds = get_or<std::vector<std::uint64_t>>(grid, "seeds", {0});
    v.require(!cfg.d.empty(), "grid.d", "non-empty");
    v.require(!cfg.m.empty(), "grid.m", "non-empty");
    v.require(!cfg.p.empty(), "grid.p", "non-empty");
    v.require(!cfg.k_star.empty(), "grid.k_star", "non-empty");
    v.require(!cfg.seeds.empty(), "grid.seeds", "non-empty");
    for (auto d : cfg.d) v.require(d >= 1, "grid.d", "entries must be >= 1");
    for (auto m : cfg.m) v.require(m >= 1, "grid.m", "entries must be >= 1");
    for (auto p : cfg.p) v.require(p >= 1, "grid.p", "entries must be >= 1");
    for (auto k : cfg.k_star) v.require(k >= 1, "grid.k_star", "entries must be >= 1");

    const json s = j.value("sgd", json::object());
    cfg.eta = get_or<double>(s, "eta", 0.0);
    cfg.eta_coeff = get_or<double>(s, "eta_coeff", 1.0);
    cfg.eta_pow = get_or<double>(s, "eta_pow", -1.0);
    cfg.T = get_or<std::int64_t>(s, "T", 1000);
    cfg.t_budget_coeff = get_or<double>(s, "t_budget_coeff", 0.0);
    cfg.t_budget_pow = get_or<double>(s, "t_budget_pow", 2.0);
    cfg.record_every = get_or<std::int64_t>(s, "record_every", 100);
    cfg.hybrid_early = get_or<bool>(s, "hybrid_early", false);
    cfg.mc_samples = get_or<std::int64_t>(s, "mc_samples", 0);
    cfg.grad_samples = get_or<std::int64_t>(s, "grad_samples", 0);
    cfg.kappa_samples = get_or<std::int64_t>(s, "kappa_samples", 0);
    cfg.clip_G = get_or<double>(s, "clip_G", 0.0);
    cfg.kappa_G = get_or<double>(s, "kappa_G", 1.0);
    cfg.thm1_C = get_or<double>(s, "thm1_C", 5.0);
    cfg.thm1_kappa_bar = get_or<double>(s, "thm1_kappa_bar", 1.0);
    cfg.delta = get_or<double>(s, "delta", 0.01);
    v.require(cfg.eta >= 0.0, "sgd.eta", "must be >= 0");
    v.require(cfg.eta > 0.0 || cfg.eta_coeff > 0.0, "sgd.eta_coeff",
              "eta or eta_coeff must be positive");
    v.require(cfg.T >= 0, "sgd.T", "must be >= 0");
    v.require(cfg.record_every >= 1, "sgd.record_every", "must be >= 1");
    v.require(cfg.mc_samples >= 0, "sgd.mc_samples", "must be >= 0");
    v.require(cfg.clip_G >= 0.0, "sgd.clip_G", "must be >= 0 (0 disables)");
    v.require(cfg.delta > 0.0 && cfg.delta < 1.0, "sgd.delta", "must be in (0,1)");

    const json t = j.value("target", json::object());
    cfg.target.kind = get_or<std::string>(t, "kind", "single_index");
    cfg.target.link = get_or<std::string>(t, "link", "hermite");
    cfg.target.degree = get_or<int>(t, "degree", 0);
    cfg.target.norm_u = get_or<double>(t, "norm_u", 0.0);
    v.require(cfg.target.kind == "single_index" || cfg.target.kind == "periodic" ||
                  cfg.target.kind == "product",
              "target.kind", "one of single_index|periodic|product");
    v.require(cfg.target.norm_u >= 0.0, "target.norm_u", "must be >= 0");
    if (cfg.target.kind != "periodic")
      models::link_kind_from_string(cfg.target.link);  // throws on bad names

    const json a = j.value("activation", json::object());
    cfg.activation.kind = get_or<std::string>(a, "kind", "relu");
    cfg.activation.alpha = get_or<double>(a, "alpha", 0.0);
    cfg.activation.degree = get_or<int>(a, "degree", 0);
    models::act_kind_from_string(cfg.activation.kind);

    const json dd = j.value("distribution", json::object());
    cfg.distribution = get_or<std::string>(dd, "kind", "standard_gaussian");
    models::dist_kind_from_string(cfg.distribution);

    cfg.escape_threshold = get_or<double>(j, "escape_threshold", 0.5);
    v.require(cfg.escape_threshold > 0.0 && cfg.escape_threshold < 1.0,
              "escape_threshold", "must be in (0,1)");
    cfg.output_dir = get_or<std::string>(j, "output_dir", "out");
  } catch (const json::exception& e) {
    fail(ErrorCode::ValidationError, e.what());
  }
  v.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["mode"] = to_string(cfg.mode);
  j["grid"] = {{"d", cfg.d},      {"m", cfg.m},         {"p", cfg.p},
               {"k_star", cfg.k_star}, {"seeds", cfg.seeds}};
  j["sgd"] = {{"eta", cfg.eta},
              {"eta_coeff", cfg.eta_coeff},
              {"eta_pow", cfg.eta_pow},
              {"T", cfg.T},
              {"t_budget_coeff", cfg.t_budget_coeff},
              {"t_budget_pow", cfg.t_budget_pow},
              {"record_every", cfg.record_every},
              {"hybrid_early", cfg.hybrid_early},
              {"mc_samples", cfg.mc_samples},
              {"grad_samples", cfg.grad_samples},
              {"kappa_samples", cfg.kappa_samples},
              {"clip_G", cfg.clip_G},
              {"kappa_G", cfg.kappa_G},
              {"thm1_C", cfg.thm1_C},
              {"thm1_kappa_bar", cfg.thm1_kappa_bar},
              {"delta", cfg.delta}};
  j["target"] = {{"kind", cfg.target.kind},
                 {"link", cfg.target.link},
                 {"degree", cfg.target.degree},
                 {"norm_u", cfg.target.norm_u}};
  j["activation"] = {{"kind", cfg.activation.kind},
                     {"alpha", cfg.activation.alpha},
                     {"degree", cfg.activation.degree}};
  j["distribution"] = {{"kind", cfg.distribution}};
  j["escape_threshold"] = cfg.escape_threshold;
  j["output_dir"] = cfg.output_dir;
  return j.dump();
}

std::string config_sha256(const ExperimentConfig& cfg) {
  return sha256_hex(canonical_config_json(cfg));
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

const char* kCsvHeader =
    "experiment,d,m,p,k_star,seed,t,rho,w_fro,s_min,s_max,loss_hat,loss_se,"
    "grad_pop_hat,kappa_hat,psi_at_rho,ceiling_thm1";

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string report_rows_to_csv(const std::vector<ReportRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const ReportRow& r : rows) {
    out += r.experiment;
    out += ',' + std::to_string(r.d) + ',' + std::to_string(r.m) + ',' +
           std::to_string(r.p) + ',' + std::to_string(r.k_star) + ',' +
           std::to_string(r.seed) + ',' + std::to_string(r.t);
    for (double v : {r.rho, r.w_fro, r.s_min, r.s_max, r.loss_hat, r.loss_se,
                     r.grad_pop_hat, r.kappa_hat, r.psi_at_rho, r.ceiling_thm1}) {
      out += ',';
      out += fmt_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string report_rows_to_json(const std::vector<ReportRow>& rows) {
  json arr = json::array();
  for (const ReportRow& r : rows) {
    json o;
    o["experiment"] = r.experiment;
    o["d"] = r.d;
    o["m"] = r.m;
    o["p"] = r.p;
    o["k_star"] = r.k_star;
    o["seed"] = r.seed;
    o["t"] = r.t;
    auto put = [&](const char* k, double v) {
      if (std::isnan(v))
        o[k] = nullptr;
      else
        o[k] = v;
    };
    put("rho", r.rho);
    put("w_fro", r.w_fro);
    put("s_min", r.s_min);
    put("s_max", r.s_max);
    put("loss_hat", r.loss_hat);
    put("loss_se", r.loss_se);
    put("grad_pop_hat", r.grad_pop_hat);
    put("kappa_hat", r.kappa_hat);
    put("psi_at_rho", r.psi_at_rho);
    put("ceiling_thm1", r.ceiling_thm1);
    arr.push_back(o);
  }
  return arr.dump(2);
}

// ---------------------------------------------------------------------------
// Run construction
// ---------------------------------------------------------------------------

namespace {

double effective_eta(const ExperimentConfig& cfg, std::int64_t d) {
  if (cfg.eta > 0.0) return cfg.eta;
  return cfg.eta_coeff * std::pow(static_cast<double>(d), cfg.eta_pow);
}

std::int64_t effective_T(const ExperimentConfig& cfg, std::int64_t d) {
  std::int64_t T = cfg.T;
  if (cfg.t_budget_coeff > 0.0) {
    const double cap =
        cfg.t_budget_coeff * std::pow(static_cast<double>(d), cfg.t_budget_pow);
    const std::int64_t capi = static_cast<std::int64_t>(std::floor(cap));
    T = (T <= 0) ? capi : std::min(T, capi);
  }
  return T;
}

models::TargetSpec build_target(const ExperimentConfig& cfg, const RunParams& rp) {
  rng::Stream task(rp.seed, rng::kStreamTask);
  const std::size_t d = static_cast<std::size_t>(rp.d);
  if (cfg.target.kind == "product") {
    models::Link link{models::link_kind_from_string(cfg.target.link),
                      cfg.target.degree > 0 ? cfg.target.degree
                                            : static_cast<int>(rp.k_star)};
    return models::make_product(static_cast<std::size_t>(rp.p), d, link, task);
  }
  // Random direction with the requested norm.
  const double norm_u = cfg.target.norm_u > 0.0
                            ? cfg.target.norm_u
                            : (cfg.target.kind == "periodic"
                                   ? std::sqrt(static_cast<double>(d))
                                   : 1.0);
  linalg::Matrix u(1, d);
  long double nrm2 = 0.0L;
  for (std::size_t jj = 0; jj < d; ++jj) {
    u(0, jj) = task.next_gaussian();
    nrm2 += static_cast<long double>(u(0, jj)) * u(0, jj);
  }
  const double c = norm_u / std::sqrt(static_cast<double>(nrm2));
  for (std::size_t jj = 0; jj < d; ++jj) u(0, jj) *= c;
  if (cfg.target.kind == "periodic") return models::make_periodic(std::move(u));
  models::Link link{models::link_kind_from_string(cfg.target.link),
                    cfg.target.degree > 0 ? cfg.target.degree
                                          : static_cast<int>(rp.k_star)};
  return models::make_single_index(std::move(u), link);
}

models::Activation build_activation(const ExperimentConfig& cfg, const RunParams& rp) {
  models::Activation act;
  act.kind = models::act_kind_from_string(cfg.activation.kind);
  act.alpha = cfg.activation.alpha;
  act.degree = cfg.activation.degree > 0 ? cfg.activation.degree
                                         : static_cast<int>(rp.k_star);
  return act;
}

sgd::SGDConfig build_sgd_config(const ExperimentConfig& cfg, const RunParams& rp) {
  sgd::SGDConfig sc;
  sc.eta = effective_eta(cfg, rp.d);
  sc.T = effective_T(cfg, rp.d);
  sc.seed = rp.seed;
  sc.record_every = cfg.record_every;
  sc.mc_samples = cfg.mc_samples;
  sc.grad_samples = cfg.grad_samples;
  sc.kappa_samples = cfg.kappa_samples;
  if (cfg.clip_G > 0.0) sc.clip_G = cfg.clip_G;
  sc.hybrid_early = cfg.hybrid_early;
  sc.kappa_G = cfg.kappa_G;
  sc.thm1_C = cfg.thm1_C;
  sc.thm1_kappa_bar = cfg.thm1_kappa_bar;
  sc.delta = cfg.delta;
  if (cfg.mode == Mode::Escape)
    sc.stop_rho = std::max(0.75, cfg.escape_threshold + 0.05);
  return sc;
}

RunOutput execute_run(const ExperimentConfig& cfg, const RunParams& rp) {
  RunOutput out;
  out.params = rp;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    models::TargetSpec target = build_target(cfg, rp);
    models::Activation act = build_activation(cfg, rp);
    rng::Stream init(rp.seed, rng::kStreamInit);
    linalg::Matrix w0 = models::initialize_weights(
        static_cast<std::size_t>(rp.m), static_cast<std::size_t>(rp.d), init);
    models::PredictorSpec pred = models::make_two_layer(
        static_cast<std::size_t>(rp.m), static_cast<std::size_t>(rp.d), act,
        std::move(w0));
    models::InputDistribution dist{models::dist_kind_from_string(cfg.distribution),
                                   static_cast<std::size_t>(rp.d)};
    sgd::SGDConfig sc = build_sgd_config(cfg, rp);
    sgd::TrajectoryResult res = sgd::run_trajectory(sc, std::move(pred), target, dist);
    out.escape_t = res.escape_t;
    out.records = std::move(res.records);
    out.rows.reserve(out.records.size());
    for (const sgd::TrajectoryRecord& rec : out.records) {
      ReportRow row;
      row.experiment = cfg.name;
      row.d = rp.d;
      row.m = rp.m;
      row.p = rp.p;
      row.k_star = rp.k_star;
      row.seed = rp.seed;
      row.t = rec.t;
      row.rho = rec.rho;
      row.w_fro = rec.w_fro;
      row.s_min = rec.s_min;
      row.s_max = rec.s_max;
      row.loss_hat = rec.loss_hat;
      row.loss_se = rec.loss_se;
      row.grad_pop_hat = rec.grad_pop_hat;
      row.kappa_hat = rec.kappa_hat;
      row.psi_at_rho = rec.psi_at_rho;
      row.ceiling_thm1 = rec.ceiling_thm1;
      out.rows.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    out.status = std::string("error: ") + e.what();
  }
  out.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

std::string mode_summary_json(const ExperimentConfig& cfg,
                              const std::vector<RunOutput>& runs);

}  // namespace

// ---------------------------------------------------------------------------
// Sweep orchestration
// ---------------------------------------------------------------------------

SweepResult run_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (cfg.mode == Mode::Selfcheck || cfg.mode == Mode::HermiteDump)
    fail(ErrorCode::ValidationError,
         "mode '" + to_string(cfg.mode) + "' is not a trajectory-running mode");
  ExperimentConfig eff = cfg;
  if (!opts.out_dir_override.empty()) eff.output_dir = opts.out_dir_override;
  if (opts.seed_offset != 0)
    for (auto& s : eff.seeds) s += static_cast<std::uint64_t>(opts.seed_offset);

  std::vector<RunParams> grid;
  for (auto d : eff.d)
    for (auto m : eff.m)
      for (auto p : eff.p)
        for (auto k : eff.k_star)
          for (auto seed : eff.seeds) grid.push_back({d, m, p, k, seed});

  int jobs = std::max(1, opts.jobs);
  const char* det = std::getenv("LAB_DETERMINISTIC");
  if (det && std::string(det) == "1") jobs = 1;

  std::vector<RunOutput> runs(grid.size());
  if (jobs == 1 || grid.size() <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) runs[i] = execute_run(eff, grid[i]);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= grid.size()) return;
        runs[i] = execute_run(eff, grid[i]);
      }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min<int>(jobs, static_cast<int>(grid.size()));
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  // Manifest: config hash first so equal hashes pin equal outputs.
  json manifest;
  manifest["config_sha256"] = config_sha256(eff);
  manifest["schema_version"] = 1;
  manifest["code_version"] = "0.1.0";
  json jruns = json::array();
  for (const RunOutput& r : runs) {
    json jr;
    jr["params"] = {{"d", r.params.d},
                    {"m", r.params.m},
                    {"p", r.params.p},
                    {"k_star", r.params.k_star},
                    {"seed", r.params.seed}};
    jr["status"] = r.status;
    jr["wall_ms"] = r.wall_ms;
    jruns.push_back(jr);
  }
  manifest["runs"] = jruns;
  result.manifest_json = manifest.dump(2) + "\n";
  result.summary_json = mode_summary_json(eff, runs);

  if (opts.write_files) {
    namespace fs = std::filesystem;
    fs::path dir = fs::path(eff.output_dir) / eff.name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string());
    auto write_file = [&](const fs::path& p, const std::string& content) {
      std::ofstream f(p, std::ios::binary);
      if (!f) fail(ErrorCode::IoError, "cannot write " + p.string());
      f << content;
    };
    std::vector<ReportRow> all_rows;
    for (const RunOutput& r : runs) {
      const std::string name = std::to_string(r.params.d) + "_" +
                               std::to_string(r.params.m) + "_" +
                               std::to_string(r.params.p) + "_" +
                               std::to_string(r.params.seed) + ".csv";
      write_file(dir / name, report_rows_to_csv(r.rows));
      all_rows.insert(all_rows.end(), r.rows.begin(), r.rows.end());
    }
    write_file(dir / "manifest.json", result.manifest_json);
    write_file(dir / "report.csv", report_rows_to_csv(all_rows));
    write_file(dir / "report.json", report_rows_to_json(all_rows) + "\n");
    if (!result.summary_json.empty())
      write_file(dir / "summary.json", result.summary_json + "\n");
    result.out_dir = dir.string();
  }
  result.runs = std::move(runs);
  return result;
}

// ---------------------------------------------------------------------------
// Escape fitting
// ---------------------------------------------------------------------------

std::optional<std::int64_t> first_crossing(const std::vector<sgd::TrajectoryRecord>& recs,
                                           double threshold) {
  for (const sgd::TrajectoryRecord& r : recs)
    if (r.rho >= threshold) return r.t;
  return std::nullopt;
}

EscapeResult fit_escape(const std::vector<EscapeObservation>& obs, double threshold) {
  std::map<std::int64_t, std::vector<double>> uncensored;
  std::map<std::int64_t, int> censored;
  for (const EscapeObservation& o : obs) {
    if (o.escape_t)
      uncensored[o.d].push_back(static_cast<double>(*o.escape_t));
    else
      ++censored[o.d];
  }

  EscapeResult res;
  res.threshold = threshold;
  std::vector<double> log_d, log_med;
  for (auto& [d, times] : uncensored) {
    EscapeResult::PerD pd;
    pd.d = d;
    pd.n_uncensored = static_cast<int>(times.size());
    pd.n_censored = censored.count(d) ? censored[d] : 0;
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    pd.median_t = (n % 2 == 1) ? times[n / 2]
                               : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    res.per_d.push_back(pd);
    if (pd.n_uncensored >= 5 && pd.median_t > 0.0) {
      log_d.push_back(std::log(static_cast<double>(d)));
      log_med.push_back(std::log(pd.median_t));
    }
  }
  for (auto& [d, nc] : censored)
    if (!uncensored.count(d))
      res.per_d.push_back({d, 0, nc, 0.0});

  if (log_d.size() < 3)
    fail(ErrorCode::InsufficientData,
         "need >= 3 d values with >= 5 uncensored seeds each, have " +
             std::to_string(log_d.size()));

  const std::size_t n = log_d.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += log_d[i];
    sy += log_med[i];
    sxx += log_d[i] * log_d[i];
    sxy += log_d[i] * log_med[i];
  }
  const double denom = n * sxx - sx * sx;
  res.slope = (n * sxy - sx * sy) / denom;
  res.intercept = (sy - res.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = log_med[i] - (res.slope * log_d[i] + res.intercept);
    ss += r * r;
  }
  res.residual = std::sqrt(ss / n);
  return res;
}

// ---------------------------------------------------------------------------
// Mode summaries
// ---------------------------------------------------------------------------

namespace {

json escape_fit_json(const std::vector<RunOutput>& runs, double threshold) {
  std::vector<EscapeObservation> obs;
  for (const RunOutput& r : runs) {
    if (r.status != "ok") continue;
    obs.push_back({r.params.d, r.params.seed, first_crossing(r.records, threshold)});
  }
  json out;
  out["threshold"] = threshold;
  json jobs_arr = json::array();
  for (const EscapeObservation& o : obs) {
    json jo;
    jo["d"] = o.d;
    jo["seed"] = o.seed;
    if (o.escape_t)
      jo["escape_t"] = *o.escape_t;
    else
      jo["escape_t"] = nullptr;
    jobs_arr.push_back(jo);
  }
  out["runs"] = jobs_arr;
  try {
    EscapeResult fit = fit_escape(obs, threshold);
    json per_d = json::array();
    for (const auto& pd : fit.per_d)
      per_d.push_back({{"d", pd.d},
                       {"n_uncensored", pd.n_uncensored},
                       {"n_censored", pd.n_censored},
                       {"median_t", pd.median_t}});
    out["per_d"] = per_d;
    out["fit"] = {{"slope", fit.slope},
                  {"intercept", fit.intercept},
                  {"residual", fit.residual}};
  } catch (const Error& e) {
    out["fit_error"] = e.what();
  }
  return out;
}

json mode_summary(const ExperimentConfig& cfg, const std::vector<RunOutput>& runs) {
  json out;
  out["mode"] = to_string(cfg.mode);
  out["name"] = cfg.name;
  if (cfg.mode == Mode::Escape) {
    json fits = json::object();
    std::vector<double> thresholds = {0.3, 0.5, 0.7};
    if (std::find(thresholds.begin(), thresholds.end(), cfg.escape_threshold) ==
        thresholds.end())
      thresholds.push_back(cfg.escape_threshold);
    for (double thr : thresholds) {
      char key[16];
      std::snprintf(key, sizeof(key), "%.2f", thr);
      fits[key] = escape_fit_json(runs, thr);
    }
    out["threshold"] = cfg.escape_threshold;
    out["fits"] = fits;
  } else if (cfg.mode == Mode::PeriodicFlatness) {
    json jruns = json::array();
    bool all_rho = true, all_loss = true;
    for (const RunOutput& r : runs) {
      if (r.status != "ok") {
        all_rho = all_loss = false;
        continue;
      }
      double max_rho = 0.0, max_ratio = 0.0;
      int viol = 0;
      for (std::size_t i = 0; i < r.records.size(); ++i) {
        const auto& rec = r.records[i];
        max_rho = std::max(max_rho, rec.rho);
        if (i == 0 || std::isnan(rec.dloss_hat) || rec.dloss_se <= 0.0) continue;
        const double ratio = std::abs(rec.dloss_hat) / rec.dloss_se;
        max_ratio = std::max(max_ratio, ratio);
        if (ratio > 3.0) ++viol;
      }
      const std::int64_t T = effective_T(cfg, r.params.d);
      const double ceiling =
          5.0 * std::sqrt(static_cast<double>(r.params.m) *
                          std::log(static_cast<double>(std::max<std::int64_t>(T, 2))) /
                          static_cast<double>(r.params.d));
      const bool rho_ok = max_rho <= ceiling;
      const bool loss_ok = viol == 0;
      all_rho = all_rho && rho_ok;
      all_loss = all_loss && loss_ok;
      jruns.push_back({{"d", r.params.d},
                       {"m", r.params.m},
                       {"seed", r.params.seed},
                       {"max_rho", max_rho},
                       {"rho_ceiling", ceiling},
                       {"rho_within_ceiling", rho_ok},
                       {"max_abs_dloss_over_se", max_ratio},
                       {"dloss_violations", viol},
                       {"dloss_within_3se", loss_ok}});
    }
    out["pilot_C"] = 5.0;
    out["runs"] = jruns;
    out["all_rho_within_ceiling"] = all_rho;
    out["all_dloss_within_3se"] = all_loss;
  }
  return out;
}

std::string mode_summary_json(const ExperimentConfig& cfg,
                              const std::vector<RunOutput>& runs) {
  if (cfg.mode != Mode::Escape && cfg.mode != Mode::PeriodicFlatness) return "";
  return mode_summary(cfg, runs).dump(2);
}

}  // namespace

}  // namespace milab::experiments

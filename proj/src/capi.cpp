#include "milab.h"

#include <chrono>
#include <cstring>
#include <string>

#include "milab/experiments.hpp"
#include "milab/hermite.hpp"
#include "milab/selfcheck.hpp"

#include <nlohmann/json.hpp>

struct milab_config {
  milab::experiments::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

milab_status status_from(milab::ErrorCode c) {
  using EC = milab::ErrorCode;
  switch (c) {
    case EC::NonFinite: return MILAB_ERR_NONFINITE;
    case EC::DimensionMismatch: return MILAB_ERR_DIMENSION_MISMATCH;
    case EC::DegreeTooLarge: return MILAB_ERR_DEGREE_TOO_LARGE;
    case EC::AllCoefficientsVanish: return MILAB_ERR_ALL_COEFFS_VANISH;
    case EC::AssumptionViolated: return MILAB_ERR_ASSUMPTION_VIOLATED;
    case EC::DegenerateGradient: return MILAB_ERR_DEGENERATE_GRADIENT;
    case EC::ParseError: return MILAB_ERR_PARSE;
    case EC::ValidationError: return MILAB_ERR_VALIDATION;
    case EC::InsufficientData: return MILAB_ERR_INSUFFICIENT_DATA;
    case EC::IoError: return MILAB_ERR_IO;
    case EC::InvalidArgument: return MILAB_ERR_INVALID_ARGUMENT;
    case EC::Internal: return MILAB_ERR_INTERNAL;
  }
  return MILAB_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

template <typename Fn>
milab_status guarded(Fn&& fn) {
  try {
    fn();
    return MILAB_OK;
  } catch (const milab::Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MILAB_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* milab_version(void) { return "0.1.0"; }

const char* milab_last_error(void) { return g_last_error.c_str(); }

void milab_string_free(char* s) { delete[] s; }

milab_status milab_config_load(const char* path, milab_config** out) {
  if (!path || !out) {
    g_last_error = "null argument";
    return MILAB_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    auto* handle = new milab_config{milab::experiments::load_config(path)};
    *out = handle;
  });
}

milab_status milab_config_parse(const char* json_text, milab_config** out) {
  if (!json_text || !out) {
    g_last_error = "null argument";
    return MILAB_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    auto* handle = new milab_config{milab::experiments::parse_config_text(json_text)};
    *out = handle;
  });
}

void milab_config_free(milab_config* cfg) { delete cfg; }

milab_status milab_config_canonical_json(const milab_config* cfg, char** out_json) {
  if (!cfg || !out_json) {
    g_last_error = "null argument";
    return MILAB_ERR_INVALID_ARGUMENT;
  }
  return guarded(
      [&] { *out_json = dup_string(milab::experiments::canonical_config_json(cfg->cfg)); });
}

milab_status milab_config_sha256(const milab_config* cfg, char** out_hex) {
  if (!cfg || !out_hex) {
    g_last_error = "null argument";
    return MILAB_ERR_INVALID_ARGUMENT;
  }
  return guarded(
      [&] { *out_hex = dup_string(milab::experiments::config_sha256(cfg->cfg)); });
}

milab_status milab_config_mode(const milab_config* cfg, char** out_mode) {
  if (!cfg || !out_mode) {
    g_last_error = "null argument";
    return MILAB_ERR_INVALID_ARGUMENT;
  }
  return guarded(
      [&] { *out_mode = dup_string(milab::experiments::to_string(cfg->cfg.mode)); });
}

milab_status milab_run(const milab_config* cfg, const milab_run_options* opts,
                       char** out_report_json) {
  if (!cfg || !out_report_json) {
    g_last_error = "null argument";
    return MILAB_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    milab::experiments::RunOptions ro;
    if (opts) {
      ro.jobs = opts->jobs;
      if (opts->out_dir) ro.out_dir_override = opts->out_dir;
      ro.seed_offset = opts->seed_offset;
      ro.write_files = opts->write_files != 0;
    }
    milab::experiments::SweepResult res = milab::experiments::run_sweep(cfg->cfg, ro);
    nlohmann::json report;
    report["out_dir"] = res.out_dir;
    report["manifest"] = nlohmann::json::parse(res.manifest_json);
    if (!res.summary_json.empty())
      report["summary"] = nlohmann::json::parse(res.summary_json);
    int ok = 0, failed = 0;
    for (const auto& r : res.runs) (r.status == "ok" ? ok : failed)++;
    report["runs_ok"] = ok;
    report["runs_failed"] = failed;
    *out_report_json = dup_string(report.dump(2));
  });
}

milab_status milab_hermite_coeffs(const char* kind, double scale, int kmax,
                                  char** out_json) {
  if (!kind || !out_json) {
    g_last_error = "null argument";
    return MILAB_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const std::string name(kind);
    std::function<double(double)> fn;
    if (name == "identity") {
      fn = [](double x) { return x; };
    } else if (name.rfind("hermite:", 0) == 0) {
      const int deg = std::stoi(name.substr(8));
      fn = [deg](double x) { return milab::hermite::hermite_eval(deg, x); };
    } else if (name == "sin") {
      fn = [](double x) { return std::sin(x); };
    } else if (name == "tanh") {
      fn = [](double x) { return std::tanh(x); };
    } else if (name == "gauss_sq") {
      fn = [](double x) { return x * x * std::exp(-x * x); };
    } else if (name == "relu") {
      fn = [](double x) { return x > 0.0 ? x : 0.0; };
    } else if (name == "softplus") {
      fn = [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); };
    } else if (name == "gelu") {
      fn = [](double x) { return x * 0.5 * std::erfc(-x * 0.7071067811865476); };
    } else {
      milab::fail(milab::ErrorCode::ValidationError,
                  "unknown function kind '" + name + "'");
    }
    milab::hermite::HermiteSpectrum spec =
        milab::hermite::coeffs_by_quadrature(fn, scale, kmax);
    nlohmann::json j;
    j["kind"] = name;
    j["scale"] = spec.scale;
    j["coeffs"] = spec.coeffs;
    try {
      j["k_star"] = milab::hermite::information_exponent(spec);
    } catch (const milab::Error&) {
      j["k_star"] = nullptr;
    }
    *out_json = dup_string(j.dump(2));
  });
}

milab_status milab_selfcheck(int fast, char** out_json, int* out_failures) {
  if (!out_json || !out_failures) {
    g_last_error = "null argument";
    return MILAB_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<milab::selfcheck::CheckResult> results =
        milab::selfcheck::run_selfcheck(fast != 0);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    *out_failures = milab::selfcheck::count_failures(results);
    *out_json = dup_string(milab::selfcheck::selfcheck_json(results, ms));
  });
}

}  // extern "C"

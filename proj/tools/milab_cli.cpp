// Command-line front end for the multi-index SGD lab. Talks to the shared
// library exclusively through the C interface in milab.h.

#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "milab.h"

namespace {

struct Common {
  int jobs = 1;
  std::string out_dir;
  long long seed_offset = 0;
};

int fail_with(milab_status st, const char* what) {
  std::fprintf(stderr, "error (%s, status %d): %s\n", what, static_cast<int>(st),
               milab_last_error());
  return 1;
}

int run_config_mode(const std::string& path, const std::string& expected_mode,
                    const Common& common) {
  milab_config* cfg = nullptr;
  milab_status st = milab_config_load(path.c_str(), &cfg);
  if (st != MILAB_OK) return fail_with(st, "load_config");

  char* mode = nullptr;
  st = milab_config_mode(cfg, &mode);
  if (st != MILAB_OK) {
    milab_config_free(cfg);
    return fail_with(st, "config_mode");
  }
  if (expected_mode != mode) {
    std::fprintf(stderr, "config mode is '%s' but the subcommand expects '%s'\n",
                 mode, expected_mode.c_str());
    milab_string_free(mode);
    milab_config_free(cfg);
    return 1;
  }
  milab_string_free(mode);

  milab_run_options opts{};
  opts.jobs = common.jobs;
  opts.out_dir = common.out_dir.empty() ? nullptr : common.out_dir.c_str();
  opts.seed_offset = common.seed_offset;
  opts.write_files = 1;

  char* report = nullptr;
  st = milab_run(cfg, &opts, &report);
  milab_config_free(cfg);
  if (st != MILAB_OK) return fail_with(st, "run");
  std::printf("%s\n", report);
  milab_string_free(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"milab: SGD hardness laboratory for single- and multi-index models"};
  app.require_subcommand(1);
  app.fallthrough();  // accept --jobs/--out/--seed-offset after the subcommand too

  Common common;
  app.add_option("--jobs", common.jobs, "parallel trajectory workers")
      ->capture_default_str();
  app.add_option("--out", common.out_dir, "output directory override");
  app.add_option("--seed-offset", common.seed_offset,
                 "offset added to every seed in the grid");

  std::string cfg_path;
  auto* traj = app.add_subcommand("trajectory", "run a single-trajectory config");
  traj->add_option("config", cfg_path, "JSON config path")->required();
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep config");
  sweep->add_option("config", cfg_path, "JSON config path")->required();
  auto* escape = app.add_subcommand("escape", "run an escape-time scaling config");
  escape->add_option("config", cfg_path, "JSON config path")->required();
  auto* flat = app.add_subcommand("flatness", "run a periodic-flatness config");
  flat->add_option("config", cfg_path, "JSON config path")->required();

  auto* herm = app.add_subcommand("hermite-coeffs", "dump a Hermite spectrum as JSON");
  std::string kind = "sin";
  double scale = 1.0;
  int kmax = 40;
  herm->add_option("--kind", kind, "function name (sin, tanh, relu, hermite:<k>, ...)")
      ->capture_default_str();
  herm->add_option("--scale", scale, "ridge scale s")->capture_default_str();
  herm->add_option("--kmax", kmax, "truncation degree")->capture_default_str();

  auto* self = app.add_subcommand("selfcheck", "run the oracle and invariant suite");
  bool fast = false;
  self->add_flag("--fast", fast, "skip Monte-Carlo heavy checks");

  CLI11_PARSE(app, argc, argv);

  if (traj->parsed()) return run_config_mode(cfg_path, "trajectory", common);
  if (sweep->parsed()) return run_config_mode(cfg_path, "sweep", common);
  if (escape->parsed()) return run_config_mode(cfg_path, "escape", common);
  if (flat->parsed()) return run_config_mode(cfg_path, "periodic_flatness", common);

  if (herm->parsed()) {
    char* json = nullptr;
    milab_status st = milab_hermite_coeffs(kind.c_str(), scale, kmax, &json);
    if (st != MILAB_OK) return fail_with(st, "hermite-coeffs");
    std::printf("%s\n", json);
    milab_string_free(json);
    return 0;
  }

  if (self->parsed()) {
    char* json = nullptr;
    int failures = 0;
    milab_status st = milab_selfcheck(fast ? 1 : 0, &json, &failures);
    if (st != MILAB_OK) return fail_with(st, "selfcheck");
    std::printf("%s\n", json);
    milab_string_free(json);
    return failures == 0 ? 0 : 1;
  }

  return 0;
}

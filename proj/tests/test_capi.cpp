#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "milab.h"

#include <nlohmann/json.hpp>

namespace {

const char* kTinyConfig = R"({
  "name": "capi", "mode": "trajectory",
  "grid": {"d": [12], "m": [1], "p": [1], "k_star": [1], "seeds": [0]},
  "sgd": {"eta": 0.05, "T": 40, "record_every": 10},
  "target": {"kind": "periodic"},
  "activation": {"kind": "relu"},
  "distribution": {"kind": "standard_gaussian"}
})";

std::string run_cli(const std::string& args) {
  const std::string cmd = std::string(MILAB_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf;
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  pclose(pipe);
  return out;
}

}  // namespace

TEST_CASE("capi: version and null-argument handling") {
  CHECK(std::string(milab_version()) == "0.1.0");
  CHECK(milab_config_load(nullptr, nullptr) == MILAB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("capi: config parse, mode, hash, errors") {
  milab_config* cfg = nullptr;
  REQUIRE(milab_config_parse(kTinyConfig, &cfg) == MILAB_OK);

  char* mode = nullptr;
  REQUIRE(milab_config_mode(cfg, &mode) == MILAB_OK);
  CHECK(std::string(mode) == "trajectory");
  milab_string_free(mode);

  char* hexhash = nullptr;
  REQUIRE(milab_config_sha256(cfg, &hexhash) == MILAB_OK);
  CHECK(std::string(hexhash).size() == 64);
  milab_string_free(hexhash);

  char* canon = nullptr;
  REQUIRE(milab_config_canonical_json(cfg, &canon) == MILAB_OK);
  milab_config* cfg2 = nullptr;
  REQUIRE(milab_config_parse(canon, &cfg2) == MILAB_OK);
  milab_string_free(canon);
  milab_config_free(cfg2);
  milab_config_free(cfg);

  milab_config* bad = nullptr;
  CHECK(milab_config_parse("{ nope", &bad) == MILAB_ERR_PARSE);
  CHECK(std::string(milab_last_error()).size() > 0);
  CHECK(milab_config_parse(R"({"name":"x","mode":"escape","escape_threshold":2.0})",
                           &bad) == MILAB_ERR_VALIDATION);
}

TEST_CASE("capi: run a tiny trajectory end to end") {
  namespace fs = std::filesystem;
  const fs::path tmp = fs::temp_directory_path() / "milab_capi_run";
  fs::remove_all(tmp);

  milab_config* cfg = nullptr;
  REQUIRE(milab_config_parse(kTinyConfig, &cfg) == MILAB_OK);
  milab_run_options opts{};
  opts.jobs = 1;
  const std::string out = tmp.string();
  opts.out_dir = out.c_str();
  opts.write_files = 1;
  char* report = nullptr;
  REQUIRE(milab_run(cfg, &opts, &report) == MILAB_OK);
  nlohmann::json j = nlohmann::json::parse(report);
  CHECK(j["runs_ok"] == 1);
  CHECK(j["runs_failed"] == 0);
  milab_string_free(report);
  milab_config_free(cfg);
  CHECK(fs::exists(tmp / "capi" / "12_1_1_0.csv"));
  CHECK(fs::exists(tmp / "capi" / "manifest.json"));
  fs::remove_all(tmp);
}

TEST_CASE("capi: hermite coefficient dump") {
  char* json = nullptr;
  REQUIRE(milab_hermite_coeffs("sin", 1.0, 8, &json) == MILAB_OK);
  nlohmann::json j = nlohmann::json::parse(json);
  milab_string_free(json);
  CHECK(j["k_star"] == 1);
  CHECK(j["scale"] == 1.0);
  CHECK(std::abs(j["coeffs"][1].get<double>() - std::exp(-0.5)) <= 1e-10);
  CHECK(std::abs(j["coeffs"][2].get<double>()) <= 1e-12);

  char* none = nullptr;
  CHECK(milab_hermite_coeffs("no_such_fn", 1.0, 4, &none) == MILAB_ERR_VALIDATION);
}

TEST_CASE("capi: selfcheck fast runs clean") {
  char* json = nullptr;
  int failures = -1;
  REQUIRE(milab_selfcheck(1, &json, &failures) == MILAB_OK);
  CHECK(failures == 0);
  nlohmann::json j = nlohmann::json::parse(json);
  milab_string_free(json);
  CHECK(j["checks"].size() > 20);
  CHECK(j["n_failed"] == 0);
}

TEST_CASE("cli: hermite-coeffs and selfcheck subcommands") {
  const std::string herm = run_cli("hermite-coeffs --kind sin --scale 1 --kmax 6");
  nlohmann::json j = nlohmann::json::parse(herm);
  CHECK(j["k_star"] == 1);

  const std::string self = run_cli("selfcheck --fast");
  nlohmann::json s = nlohmann::json::parse(self);
  CHECK(s["n_failed"] == 0);
}

TEST_CASE("cli: trajectory subcommand writes outputs and respects mode") {
  namespace fs = std::filesystem;
  const fs::path tmp = fs::temp_directory_path() / "milab_cli_run";
  fs::remove_all(tmp);
  const fs::path cfg_path = tmp / "cfg.json";
  fs::create_directories(tmp);
  {
    std::FILE* f = std::fopen(cfg_path.string().c_str(), "w");
    REQUIRE(f);
    std::fputs(kTinyConfig, f);
    std::fclose(f);
  }
  const std::string out =
      run_cli("--out " + (tmp / "out").string() + " trajectory " + cfg_path.string());
  CHECK(out.find("runs_ok") != std::string::npos);
  CHECK(fs::exists(tmp / "out" / "capi" / "12_1_1_0.csv"));

  // Global flags also parse after the subcommand.
  const std::string out2 = run_cli("trajectory " + cfg_path.string() + " --out " +
                                   (tmp / "out2").string());
  CHECK(out2.find("runs_ok") != std::string::npos);
  CHECK(fs::exists(tmp / "out2" / "capi" / "12_1_1_0.csv"));

  // Wrong subcommand for the config's mode is refused.
  const std::string err = run_cli("escape " + cfg_path.string());
  CHECK(err.find("expects") != std::string::npos);
  fs::remove_all(tmp);
}

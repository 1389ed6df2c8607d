// Acceptance gate: runs every criterion config through the CLI runner with
// embedded assertions enabled and prints one PASS/FAIL line per criterion.
// Usage: acceptance [c1 c2 ...]   (no arguments runs all)

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "experiments.hpp"
#include "json.hpp"

#ifndef STORM_CONFIG_DIR
#define STORM_CONFIG_DIR "configs"
#endif

namespace {

struct Criterion {
  const char* id;
  const char* config;
  const char* summary;
};

const Criterion kCriteria[] = {
    {"c1", "c01_noise_diagnostics.json",
     "mollified diagnostics slopes (op d, hs d/2, |A-I| >= 2-0.3)"},
    {"c2", "c02_leray_diagonal.json", "Leray diagonal error vs (4 pi h^2)^{-d/2}(d-1)/d"},
    {"c3", "c03_l2_conservation.json", "L2 conservation drift <= 5% over 20 seeds"},
    {"c4", "c04_wn_stationarity.json", "white-noise stationarity, modes |k| <= 4"},
    {"c5", "c05_l2_rate.json", "quantitative L2 rate slope >= d/2 - 0.3"},
    {"c6", "c06_weak_bound.json", "weak pairing bound C(A)/2 |Q|op |u0|inf^2 |phi|^2"},
    {"c7", "c07_chaos.json", "second-chaos mean/variance/slope"},
    {"c8", "c08_she_limit.json", "SHE law proxy across cutoff levels 4/8/16"},
    {"c9", "c09_flow_check.json", "cross-oracle pairing within 3%"},
    {"c10", "c10_sphere.json", "sphere c-normalization, A = cI, uniformity"},
    {"c11", "c11_time_regularity.json", "time-regularity exponent kappa +- 0.2"},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted;
  for (int i = 1; i < argc; ++i) wanted.emplace_back(argv[i]);

  const std::filesystem::path config_dir = STORM_CONFIG_DIR;
  const std::filesystem::path out_root =
      std::filesystem::temp_directory_path() / "storm-acceptance";

  int failures = 0, ran = 0;
  for (const Criterion& c : kCriteria) {
    if (!wanted.empty()) {
      bool hit = false;
      for (const auto& w : wanted) hit = hit || w == c.id;
      if (!hit) continue;
    }
    ++ran;
    std::printf("=== %s: %s ===\n", c.id, c.summary);
    std::fflush(stdout);
    int code = 1;
    try {
      std::ifstream f(config_dir / c.config);
      if (!f) throw std::runtime_error(std::string("missing config ") + c.config);
      const nlohmann::json config = nlohmann::json::parse(f);
      storm::cli::RunOptions opts;
      opts.check = true;
      opts.out_dir = (out_root / c.id).string();
      code = storm::cli::run_config(config, opts);
    } catch (const std::exception& e) {
      std::printf("error: %s\n", e.what());
      code = 1;
    }
    std::printf("[%s] criterion %s\n\n", code == 0 ? "PASS" : "FAIL", c.id);
    std::fflush(stdout);
    if (code != 0) ++failures;
  }
  std::printf("acceptance: %d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}

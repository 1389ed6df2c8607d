#ifndef STORM_TOOLS_EXPERIMENTS_HPP
#define STORM_TOOLS_EXPERIMENTS_HPP

#include <cstdint>
#include <string>

#include "json.hpp"

namespace storm::cli {

struct RunOptions {
  std::string out_dir = "storm-out";
  bool has_seed_override = false;
  std::uint64_t seed_override = 0;
  int threads = 0;  // 0: hardware concurrency
  bool check = false;
};

// dispatches on config["kind"]; returns the process exit code:
// 0 ok, 1 error, 2 check failure
int run_config(const nlohmann::json& config, const RunOptions& opts);

}  // namespace storm::cli

#endif

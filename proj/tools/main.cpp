#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "json.hpp"
#include "storm/version.hpp"
#include "svg.hpp"

int main(int argc, char** argv) {
  CLI::App app{"storm: pseudo-spectral stochastic transport simulator"};
  app.set_version_flag("--version", storm::kVersion);
  app.require_subcommand(1);

  // run
  std::string config_path, out_dir;
  std::uint64_t seed_override = 0;
  int threads = 0;
  bool check = false;
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", config_path, "experiment config JSON")->required();
  CLI::Option* seed_opt =
      run->add_option("--seed", seed_override, "override the config seed");
  run->add_option("--threads", threads, "worker threads (default: hardware)");
  run->add_option("--out", out_dir, "output directory (default from config)");
  run->add_flag("--check", check, "run embedded acceptance assertions");

  // plot
  std::string csv_path, svg_path, title = "storm";
  bool loglog = false;
  CLI::App* plot = app.add_subcommand("plot", "render a CSV as a static SVG chart");
  plot->add_option("--csv", csv_path, "input CSV with a header row")->required();
  plot->add_option("--out", svg_path, "output SVG path")->required();
  plot->add_option("--title", title, "chart title");
  plot->add_flag("--log-log", loglog, "log-log axes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      std::ifstream f(config_path);
      if (!f) {
        std::fprintf(stderr, "error: cannot open config %s\n", config_path.c_str());
        return 1;
      }
      nlohmann::json config;
      try {
        config = nlohmann::json::parse(f);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
      }
      storm::cli::RunOptions opts;
      opts.check = check;
      opts.threads = threads;
      opts.has_seed_override = seed_opt->count() > 0;
      opts.seed_override = seed_override;
      if (!out_dir.empty())
        opts.out_dir = out_dir;
      else if (config.contains("out_dir"))
        opts.out_dir = config["out_dir"].get<std::string>();
      return storm::cli::run_config(config, opts);
    }
    if (plot->parsed()) {
      std::ifstream f(csv_path);
      if (!f) {
        std::fprintf(stderr, "error: cannot open csv %s\n", csv_path.c_str());
        return 1;
      }
      std::string csv((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
      std::ofstream out(svg_path);
      out << storm::cli::svg_line_chart(csv, title, loglog);
      return out ? 0 : 1;
    }
  } catch (const storm::cli::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

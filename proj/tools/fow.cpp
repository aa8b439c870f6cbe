#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fow/commands.hpp"
#include "fow/config.hpp"
#include "fow/errors.hpp"

namespace {

// FOW_SEED overrides the config seed (and therefore the hashes).
std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("FOW_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long value = std::strtoull(raw, &end, 10);
  if (errno != 0 || end == raw || *end != '\0') {
    throw fow::ConfigError(std::string("FOW_SEED is not an unsigned integer: ") +
                           raw);
  }
  return static_cast<std::uint64_t>(value);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fow: conversion estimation at flexible optimization windows"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  int threads = 1;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    cmd->add_option("--set", overrides,
                    "override a config field, path=value (repeatable)");
    cmd->add_option("--out", out_dir, "output directory (overrides out_dir)");
    cmd->add_option("--threads", threads, "worker threads for schedule cells");
  };

  CLI::App* simulate =
      app.add_subcommand("simulate", "generate the synthetic event log");
  CLI::App* analyze = app.add_subcommand(
      "analyze", "empirical CDF and interpolation calibration from the log");
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "NE/calibration grid aggregated over the schedule");
  CLI::App* recurring = app.add_subcommand(
      "recurring", "per-train-day NE gains of INTERP_* vs SEVEN_HEAD");
  CLI::App* sweep = app.add_subcommand(
      "sweep-beta", "NE gain vs SEVEN_HEAD across the beta grids");
  for (CLI::App* cmd : {simulate, analyze, evaluate, recurring, sweep}) {
    add_common(cmd);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const std::optional<std::string> out =
        out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir);
    const fow::ExperimentConfig config =
        fow::load_config(config_path, overrides, seed_from_env(), out);

    std::filesystem::path written;
    if (simulate->parsed()) {
      written = fow::cmd_simulate(config);
    } else if (analyze->parsed()) {
      written = fow::cmd_analyze(config);
    } else if (evaluate->parsed()) {
      written = fow::cmd_evaluate(config, threads);
    } else if (recurring->parsed()) {
      written = fow::cmd_recurring(config, threads);
    } else {
      written = fow::cmd_sweep_beta(config, threads);
    }
    std::cout << "wrote " << written.string() << "\n";
    return 0;
  } catch (const fow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fow::InfeasibleError& e) {
    std::cerr << "infeasible hyperparameter: " << e.what() << "\n";
    return 4;
  } catch (const fow::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

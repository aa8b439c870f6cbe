#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fow/estimators.hpp"
#include "fow/interpolation.hpp"
#include "fow/simulation.hpp"

namespace fow {

// ---------------------------------------------------------------------------
// One JSON config drives every subcommand. Unset fields take the defaults
// from default_config_json(); `--set path=value` overrides land before
// validation. See README for the full schema.
// ---------------------------------------------------------------------------

struct ScheduleSpec {
  std::vector<int> train_days;
  double eval_horizon_days = 7.0;
  double train_window_days = 7.0;
};

struct SweepGrids {
  std::vector<double> linear;
  std::vector<double> rational;
  std::vector<double> exponential;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  StreamConfig stream;  // carries the seed

  double t_short = 1.0;
  double t_long = 7.0;
  std::vector<double> t_flex_grid;

  std::vector<MethodKind> methods;
  AlphaDesign alpha_linear;
  AlphaDesign alpha_rational;
  AlphaDesign alpha_exponential;

  TrainParams train;  // smoothing, seven-head pooling, train window
  ScheduleSpec schedule;
  SweepGrids sweep;

  // Normalized config (defaults merged in) and its FNV-1a hash; every report
  // header records the hash. stream_hash covers only {seed, stream}: the
  // part that determines event-log bytes.
  nlohmann::json canonical;
  std::string config_hash;
  std::string stream_hash;

  WindowSpec base_windows() const {
    return WindowSpec(t_short, t_long, t_short);
  }
  const AlphaDesign& design_for(MethodKind kind) const;
  std::vector<MethodSpec> method_specs() const;
};

// The complete default experiment (drifting 50-segment stream, all eight
// methods, the published beta values, the ablation grids).
nlohmann::json default_config_json();

// Parse + validate a config from merged JSON. Throws ConfigError for shape
// and range problems, InfeasibleError for hyperparameters outside their
// feasible ranges (infeasible betas are named).
ExperimentConfig config_from_json(const nlohmann::json& user);

// Read file, apply `--set` overrides (dotted paths, JSON-typed values) and
// the optional seed override (from FOW_SEED), merge over defaults, validate.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {},
                             std::optional<std::uint64_t> seed_override = {},
                             std::optional<std::string> out_override = {});

// 16-hex-digit FNV-1a of the canonical dump.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace fow

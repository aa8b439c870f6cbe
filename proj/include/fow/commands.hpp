#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fow/config.hpp"
#include "fow/core_types.hpp"
#include "fow/simulation.hpp"

namespace fow {

// ---------------------------------------------------------------------------
// Command cores. Each is a pure function of (events, config) so tests and
// the acceptance suite can run them without touching the filesystem; the
// cmd_* wrappers generate/read events, run the core, and write the report.
// Every report starts with '#' header lines carrying the config hash.
// ---------------------------------------------------------------------------

// --- analyze: empirical CDF by day and interpolated estimates from the
// (t_short, t_long) empirical endpoints, with per-day calibration ----------
struct AnalyzeRow {
  double day = 0.0;
  double empirical_cdf = 0.0;
  double est_linear = 0.0;
  double est_rational = 0.0;
  double est_exp = 0.0;
  double cal_linear = 0.0;
  double cal_rational = 0.0;
  double cal_exp = 0.0;
};

struct AnalyzeResult {
  std::vector<AnalyzeRow> rows;  // one per t_flex grid value
  double cdf_short = 0.0;        // empirical endpoints the estimates use
  double cdf_long = 0.0;
};

AnalyzeResult analyze_events(std::span<const Event> events,
                             const ExperimentConfig& config);

// --- evaluate: schedule-aggregated NE/calibration per (t_flex, method) ----
struct EvaluateRow {
  double t_flex = 0.0;
  MethodKind method = MethodKind::kP1d;
  double ne = 0.0;
  double calibration = 0.0;
  // Empty when NDUB is not among the configured methods.
  std::optional<double> delta_vs_ndub_pct;
};

struct EvaluateResult {
  std::vector<EvaluateRow> rows;
  ScheduleResult schedule;  // the underlying per-day grid
};

EvaluateResult evaluate_experiment(std::span<const Event> events,
                                   const ExperimentConfig& config,
                                   int threads = 1);

// --- recurring: per-train-day NE gain of each INTERP_* vs SEVEN_HEAD ------
struct RecurringRow {
  int train_day = 0;
  MethodKind method = MethodKind::kInterpLinear;
  double t_flex = 0.0;
  double ne = 0.0;
  double baseline_ne = 0.0;
  double gain_pct = 0.0;
};

struct RecurringResult {
  std::vector<RecurringRow> rows;
  ScheduleResult schedule;
};

RecurringResult recurring_experiment(std::span<const Event> events,
                                     const ExperimentConfig& config,
                                     int threads = 1);

// --- sweep-beta: schedule-mean NE gain vs SEVEN_HEAD across beta grids ----
struct SweepRow {
  AlphaFamily family = AlphaFamily::kLinear;
  double beta = 0.0;
  double t_flex = 0.0;
  double gain_pct = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

SweepResult sweep_beta_experiment(std::span<const Event> events,
                                  const ExperimentConfig& config,
                                  int threads = 1);

// ---------------------------------------------------------------------------
// File-level subcommands. Each returns the path of the file it wrote.
// ---------------------------------------------------------------------------

// Writes <out_dir>/events.jsonl and <out_dir>/manifest.json.
std::filesystem::path cmd_simulate(const ExperimentConfig& config);

// Reads <out_dir>/events.jsonl (manifest stream-hash must match the config;
// mismatch is a DataError), writes <out_dir>/analyze.csv.
std::filesystem::path cmd_analyze(const ExperimentConfig& config);

// Generate the stream in memory, run the schedule, write the report.
std::filesystem::path cmd_evaluate(const ExperimentConfig& config,
                                   int threads = 1);
std::filesystem::path cmd_recurring(const ExperimentConfig& config,
                                    int threads = 1);
std::filesystem::path cmd_sweep_beta(const ExperimentConfig& config,
                                     int threads = 1);

// Deterministic 6-significant-digit cell formatting used by every report.
std::string format_cell(double value);

}  // namespace fow

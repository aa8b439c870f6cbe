#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fow/core_types.hpp"
#include "fow/delay_models.hpp"
#include "fow/estimators.hpp"
#include "fow/metrics.hpp"

namespace fow {

// ---------------------------------------------------------------------------
// Synthetic impression stream: per-segment conversion rates and delay laws,
// optional temporal drift of the conversion rate.
// ---------------------------------------------------------------------------

enum class DriftKind { kNone, kSinusoid, kRandomWalk };

struct DriftSpec {
  DriftKind kind = DriftKind::kNone;
  double amplitude = 0.0;    // sinusoid: A in [0, 1)
  double period_days = 28.0; // sinusoid
  double step_sigma = 0.0;   // random walk: per-day log-step sigma >= 0
};

struct StreamConfig {
  int num_segments = 1;
  int days = 1;
  int events_per_day = 1;
  // One law per segment; its p_conv is the segment's base conversion rate.
  std::vector<DelayDistribution> segment_delay;
  DriftSpec drift;
  std::uint64_t seed = 0;
};

// Throws ConfigError when fields are out of range or sizes disagree.
void validate_stream_config(const StreamConfig& config);

// The conversion rate actually in force for (segment, day): the base rate
// times the drift factor, clamped to [0.001, 0.999]. Sinusoid drift carries
// a per-segment phase (low-discrepancy spread over the circle) so segments
// do not move in lockstep; the random walk is a per-segment geometric walk
// derived from the seed alone.
double drifted_p_conv(const StreamConfig& config, int segment, int day);

// Events for days [day_lo, day_hi), sorted by (day, event_id). Each event's
// randomness comes from a (seed, day, index) substream, so any day range
// reproduces exactly the same events it would produce inside a wider range.
std::vector<Event> generate_stream_days(const StreamConfig& config, int day_lo,
                                        int day_hi);

inline std::vector<Event> generate_stream(const StreamConfig& config) {
  return generate_stream_days(config, 0, config.days);
}

std::string drift_kind_name(DriftKind kind);

// ---------------------------------------------------------------------------
// Recurring train/evaluate schedule: train every method at each snapshot day
// and score it on the following eval_horizon_days with oracle labels (the
// simulator knows the future, so nothing censored leaks into evaluation).
// ---------------------------------------------------------------------------

struct MethodSpec {
  MethodKind kind = MethodKind::kP1d;
  AlphaDesign design;  // used by the INTERP_* kinds only
};

struct RecurringSpec {
  std::vector<int> train_days;
  double eval_horizon_days = 7.0;
  std::vector<double> t_flex_grid;
  std::vector<MethodSpec> methods;
  TrainParams train;
  int threads = 1;
};

struct ScheduleCell {
  int train_day = 0;
  MethodKind method = MethodKind::kP1d;
  double t_flex = 0.0;
  MetricReport report;
  bool skipped = false;
  std::string skip_reason;
};

struct ScheduleResult {
  // Dense grid, day-major then method then t_flex; skipped cells carry the
  // reason instead of a report.
  std::vector<ScheduleCell> cells;

  const ScheduleCell* find(int train_day, MethodKind method,
                           double t_flex) const;
};

// Throws DataError("insufficient history/future ...") when a train day lacks
// t_long days of prior data or eval_horizon_days of future data within the
// event span, and on unsorted input. Per-cell training/evaluation failures
// (e.g. an empty matured slice) mark the affected cells skipped instead.
ScheduleResult run_recurring(std::span<const Event> events, int num_segments,
                             const WindowSpec& windows,
                             const RecurringSpec& spec);

}  // namespace fow

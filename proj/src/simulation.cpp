#include "fow/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "fow/errors.hpp"
#include "fow/interpolation.hpp"
#include "fow/rng.hpp"

namespace fow {

namespace {

constexpr double kDriftFloor = 0.001;
constexpr double kDriftCeil = 0.999;

// Substream index space: days use their own index directly; the drift walk
// lives under a constant far outside any day range.
constexpr std::uint64_t kDriftSplit = 0xD21F7ull << 32;

constexpr double kGoldenFraction = 0.6180339887498948482;
constexpr double kTwoPi = 6.283185307179586476925286766559;

double sinusoid_factor(const DriftSpec& drift, int segment, int day) {
  // Per-segment phase, spread low-discrepancy over the circle so segments
  // never drift in lockstep (a shared phase would let a stale model be
  // exactly right twice per period).
  const double phase =
      kTwoPi * std::fmod(static_cast<double>(segment + 1) * kGoldenFraction, 1.0);
  return 1.0 + drift.amplitude *
                   std::sin(kTwoPi * static_cast<double>(day) /
                                drift.period_days +
                            phase);
}

double random_walk_factor(const StreamConfig& config, int segment, int day) {
  RngStream walk = RngStream::seeded(config.seed)
                       .split(kDriftSplit)
                       .split(static_cast<std::uint64_t>(segment));
  double log_factor = 0.0;
  for (int d = 1; d <= day; ++d) {
    log_factor +=
        config.drift.step_sigma * walk.split(static_cast<std::uint64_t>(d)).normal();
  }
  return std::exp(log_factor);
}

}  // namespace

void validate_stream_config(const StreamConfig& config) {
  if (config.num_segments < 1) {
    throw ConfigError("stream needs at least one segment");
  }
  if (config.days < 1) {
    throw ConfigError("stream needs at least one day");
  }
  if (config.events_per_day < 1) {
    throw ConfigError("stream needs at least one event per day");
  }
  if (config.segment_delay.size() !=
      static_cast<std::size_t>(config.num_segments)) {
    throw ConfigError("stream has " + std::to_string(config.segment_delay.size()) +
                      " delay laws for " + std::to_string(config.num_segments) +
                      " segments");
  }
  switch (config.drift.kind) {
    case DriftKind::kNone:
      break;
    case DriftKind::kSinusoid:
      if (!(config.drift.amplitude >= 0.0 && config.drift.amplitude < 1.0)) {
        throw ConfigError("sinusoid amplitude must be in [0, 1)");
      }
      if (!(config.drift.period_days > 0.0)) {
        throw ConfigError("sinusoid period must be positive");
      }
      break;
    case DriftKind::kRandomWalk:
      if (!(config.drift.step_sigma >= 0.0)) {
        throw ConfigError("random-walk step sigma must be non-negative");
      }
      break;
  }
}

double drifted_p_conv(const StreamConfig& config, int segment, int day) {
  const double base = config.segment_delay[static_cast<std::size_t>(segment)].p_conv();
  double factor = 1.0;
  switch (config.drift.kind) {
    case DriftKind::kNone:
      // No drift: the base rate passes through exactly, so a zero-rate
      // segment really produces zero conversions.
      return base;
    case DriftKind::kSinusoid:
      factor = sinusoid_factor(config.drift, segment, day);
      break;
    case DriftKind::kRandomWalk:
      factor = random_walk_factor(config, segment, day);
      break;
  }
  // Drift is multiplicative and unbounded (random walks compound), so the
  // drifted rate is clamped away from the degenerate Bernoulli endpoints.
  return std::clamp(base * factor, kDriftFloor, kDriftCeil);
}

std::vector<Event> generate_stream_days(const StreamConfig& config, int day_lo,
                                        int day_hi) {
  validate_stream_config(config);
  if (day_lo < 0 || day_hi > config.days || day_lo > day_hi) {
    throw ConfigError("day range [" + std::to_string(day_lo) + ", " +
                      std::to_string(day_hi) + ") outside stream horizon");
  }

  const RngStream root = RngStream::seeded(config.seed);
  std::vector<Event> events;
  events.reserve(static_cast<std::size_t>(day_hi - day_lo) *
                 static_cast<std::size_t>(config.events_per_day));

  for (int day = day_lo; day < day_hi; ++day) {
    const RngStream day_stream = root.split(static_cast<std::uint64_t>(day));
    const std::size_t day_begin = events.size();
    for (int j = 0; j < config.events_per_day; ++j) {
      RngStream rng = day_stream.split(static_cast<std::uint64_t>(j));
      Event event;
      event.event_id = static_cast<std::uint64_t>(day) *
                           static_cast<std::uint64_t>(config.events_per_day) +
                       static_cast<std::uint64_t>(j);
      event.day = static_cast<double>(day) + rng.next_double();
      const int segment = std::min(
          config.num_segments - 1,
          static_cast<int>(rng.next_double() *
                           static_cast<double>(config.num_segments)));
      event.segment = segment;
      const double p = drifted_p_conv(config, segment, day);
      if (rng.bernoulli(p)) {
        event.converted = true;
        event.delay = config.segment_delay[static_cast<std::size_t>(segment)]
                          .sample_conditional_delay(rng);
      }
      events.push_back(std::move(event));
    }
    std::sort(events.begin() + static_cast<std::ptrdiff_t>(day_begin),
              events.end(), [](const Event& a, const Event& b) {
                return a.day != b.day ? a.day < b.day
                                      : a.event_id < b.event_id;
              });
  }
  return events;
}

std::string drift_kind_name(DriftKind kind) {
  switch (kind) {
    case DriftKind::kNone:
      return "none";
    case DriftKind::kSinusoid:
      return "sinusoid";
    case DriftKind::kRandomWalk:
      return "random_walk";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Recurring schedule
// ---------------------------------------------------------------------------

const ScheduleCell* ScheduleResult::find(int train_day, MethodKind method,
                                         double t_flex) const {
  for (const ScheduleCell& cell : cells) {
    if (cell.train_day == train_day && cell.method == method &&
        cell.t_flex == t_flex) {
      return &cell;
    }
  }
  return nullptr;
}

namespace {

// Events with day in [lo, hi), events sorted by day.
std::span<const Event> eval_slice(std::span<const Event> events, double lo,
                                  double hi) {
  const auto before = [](const Event& e, double value) { return e.day < value; };
  const auto begin = std::lower_bound(events.begin(), events.end(), lo, before);
  const auto end = std::lower_bound(events.begin(), events.end(), hi, before);
  return events.subspan(static_cast<std::size_t>(begin - events.begin()),
                        static_cast<std::size_t>(end - begin));
}

void check_schedule(std::span<const Event> events, const WindowSpec& windows,
                    const RecurringSpec& spec) {
  if (events.empty()) {
    throw DataError("recurring schedule needs a non-empty event stream");
  }
  if (!std::is_sorted(events.begin(), events.end(),
                      [](const Event& a, const Event& b) { return a.day < b.day; })) {
    throw DataError("event stream must be sorted by day");
  }
  if (spec.train_days.empty()) {
    throw DataError("recurring schedule needs at least one train day");
  }
  if (spec.t_flex_grid.empty()) {
    throw DataError("recurring schedule needs a non-empty t_flex grid");
  }
  if (spec.methods.empty()) {
    throw DataError("recurring schedule needs at least one method");
  }
  if (!(spec.eval_horizon_days > 0.0)) {
    throw DataError("eval horizon must be positive");
  }
  for (double t : spec.t_flex_grid) {
    // Throws InfeasibleError when t is outside [t_short, t_long].
    static_cast<void>(windows.with_flex(t));
  }
  const double start = events.front().day;
  const double end = events.back().day;
  for (int day : spec.train_days) {
    const double d = static_cast<double>(day);
    if (d - windows.t_long() < start) {
      throw DataError("insufficient history for train day " +
                      std::to_string(day));
    }
    if (d + spec.eval_horizon_days > end) {
      throw DataError("insufficient future for train day " +
                      std::to_string(day));
    }
  }
}

}  // namespace

ScheduleResult run_recurring(std::span<const Event> events, int num_segments,
                             const WindowSpec& windows,
                             const RecurringSpec& spec) {
  check_schedule(events, windows, spec);

  const std::size_t n_days = spec.train_days.size();
  const std::size_t n_methods = spec.methods.size();
  const std::size_t n_flex = spec.t_flex_grid.size();

  ScheduleResult result;
  result.cells.resize(n_days * n_methods * n_flex);

  // One task per (train day, method); each task owns a disjoint slot range,
  // so the grid is identical for any thread count.
  const std::size_t n_tasks = n_days * n_methods;
  std::atomic<std::size_t> next_task{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto run_task = [&](std::size_t task) {
    const std::size_t di = task / n_methods;
    const std::size_t mi = task % n_methods;
    const int train_day = spec.train_days[di];
    const MethodSpec& method = spec.methods[mi];

    ScheduleCell* slots =
        result.cells.data() + (di * n_methods + mi) * n_flex;
    for (std::size_t g = 0; g < n_flex; ++g) {
      slots[g].train_day = train_day;
      slots[g].method = method.kind;
      slots[g].t_flex = spec.t_flex_grid[g];
    }

    const auto mark_skipped = [&](std::size_t g, const std::string& reason) {
      slots[g].skipped = true;
      slots[g].skip_reason = reason;
    };

    const MethodUnderTest model =
        train_method(method.kind, events, num_segments,
                     static_cast<double>(train_day), windows, spec.train,
                     method.design);

    const auto slice =
        eval_slice(events, static_cast<double>(train_day),
                   static_cast<double>(train_day) + spec.eval_horizon_days);

    std::vector<double> preds(slice.size());
    std::vector<std::uint8_t> labels(slice.size());
    for (std::size_t g = 0; g < n_flex; ++g) {
      const WindowSpec w = windows.with_flex(spec.t_flex_grid[g]);
      for (std::size_t i = 0; i < slice.size(); ++i) {
        preds[i] = model.predict(slice[i], w);
        // Oracle labels: evaluation sees the true in-window outcome, never a
        // censored provisional one.
        labels[i] = window_label(slice[i], w.t_flex()) ? 1 : 0;
      }
      try {
        slots[g].report = evaluate_predictions(preds, labels);
      } catch (const DataError& e) {
        mark_skipped(g, e.what());
      }
    }
  };

  const auto worker = [&]() {
    while (true) {
      const std::size_t task = next_task.fetch_add(1);
      if (task >= n_tasks) break;
      try {
        run_task(task);
      } catch (const DataError& e) {
        // Training failed: the whole (day, method) row is skipped.
        const std::size_t di = task / n_methods;
        const std::size_t mi = task % n_methods;
        ScheduleCell* slots =
            result.cells.data() + (di * n_methods + mi) * n_flex;
        for (std::size_t g = 0; g < n_flex; ++g) {
          slots[g].train_day = spec.train_days[di];
          slots[g].method = spec.methods[mi].kind;
          slots[g].t_flex = spec.t_flex_grid[g];
          slots[g].skipped = true;
          slots[g].skip_reason = e.what();
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int n_threads =
      std::clamp(spec.threads, 1, static_cast<int>(n_tasks));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

}  // namespace fow

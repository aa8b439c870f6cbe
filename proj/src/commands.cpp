#include "fow/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "fow/errors.hpp"
#include "fow/event_log.hpp"
#include "fow/interpolation.hpp"
#include "fow/metrics.hpp"

namespace fow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kEventsFile = "events.jsonl";
constexpr const char* kManifestFile = "manifest.json";

// Fraction of events with a true conversion within t days.
double empirical_cdf(std::span<const Event> events, double t) {
  std::size_t hits = 0;
  for (const Event& e : events) hits += window_label(e, t) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(events.size());
}

void write_lines(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);  // LF endings everywhere
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << body;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string report_header(const ExperimentConfig& config,
                          const std::string& command) {
  std::string header;
  header += "# fow " + command + "\n";
  header += "# config_hash=" + config.config_hash + "\n";
  header += "# seed=" + std::to_string(config.seed) + "\n";
  return header;
}

fs::path write_report(const ExperimentConfig& config,
                      const std::string& command, const std::string& filename,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<std::string>>& rows) {
  std::string body = report_header(config, command);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    body += (c ? "," : "") + columns[c];
  }
  body += "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      body += (c ? "," : "") + row[c];
    }
    body += "\n";
  }
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  const fs::path path = dir / filename;
  write_lines(path, body);
  return path;
}

// Minimal work-stealing loop: deterministic because tasks write to disjoint
// slots regardless of which thread runs them.
template <typename Fn>
void parallel_tasks(std::size_t n_tasks, int threads, Fn&& run_one) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&]() {
    while (true) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n_tasks) break;
      try {
        run_one(task);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const int n =
      std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(n_tasks, 1)));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string format_cell(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

AnalyzeResult analyze_events(std::span<const Event> events,
                             const ExperimentConfig& config) {
  if (events.empty()) throw DataError("empty event log");

  AnalyzeResult result;
  const WindowSpec base = config.base_windows();
  result.cdf_short = empirical_cdf(events, config.t_short);
  result.cdf_long = empirical_cdf(events, config.t_long);

  for (double t : config.t_flex_grid) {
    AnalyzeRow row;
    row.day = t;
    row.empirical_cdf = empirical_cdf(events, t);
    if (!(row.empirical_cdf > 0.0)) {
      throw DataError("no conversions within " + format_cell(t) +
                      " days; calibration undefined");
    }
    const WindowSpec w = base.with_flex(t);
    row.est_linear = estimate_unconditional(result.cdf_short, result.cdf_long,
                                            config.alpha_linear, w);
    row.est_rational = estimate_unconditional(
        result.cdf_short, result.cdf_long, config.alpha_rational, w);
    row.est_exp = estimate_unconditional(result.cdf_short, result.cdf_long,
                                         config.alpha_exponential, w);
    row.cal_linear = row.est_linear / row.empirical_cdf;
    row.cal_rational = row.est_rational / row.empirical_cdf;
    row.cal_exp = row.est_exp / row.empirical_cdf;
    result.rows.push_back(row);
  }
  return result;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

namespace {

RecurringSpec recurring_spec_for(const ExperimentConfig& config, int threads) {
  RecurringSpec spec;
  spec.train_days = config.schedule.train_days;
  spec.eval_horizon_days = config.schedule.eval_horizon_days;
  spec.t_flex_grid = config.t_flex_grid;
  spec.methods = config.method_specs();
  spec.train = config.train;
  spec.threads = threads;
  return spec;
}

}  // namespace

EvaluateResult evaluate_experiment(std::span<const Event> events,
                                   const ExperimentConfig& config,
                                   int threads) {
  EvaluateResult result;
  result.schedule = run_recurring(events, config.stream.num_segments,
                                  config.base_windows(),
                                  recurring_spec_for(config, threads));

  // Aggregate over train days: mean NE / calibration per (t_flex, method).
  const auto mean_cell = [&](MethodKind kind, double t) -> MetricReport {
    CompensatedSum ne_sum;
    CompensatedSum cal_sum;
    std::size_t n_days = 0;
    std::string last_reason;
    for (int day : config.schedule.train_days) {
      const ScheduleCell* cell = result.schedule.find(day, kind, t);
      if (cell == nullptr) continue;
      if (cell->skipped) {
        last_reason = cell->skip_reason;
        continue;
      }
      ne_sum.add(cell->report.ne);
      cal_sum.add(cell->report.calibration);
      ++n_days;
    }
    if (n_days == 0) {
      throw DataError("method " + method_kind_name(kind) + " at t_flex " +
                      format_cell(t) + " skipped on every train day: " +
                      last_reason);
    }
    MetricReport report;
    report.ne = ne_sum.value() / static_cast<double>(n_days);
    report.calibration = cal_sum.value() / static_cast<double>(n_days);
    report.n = n_days;
    return report;
  };

  const bool has_ndub =
      std::find(config.methods.begin(), config.methods.end(),
                MethodKind::kNdub) != config.methods.end();

  for (double t : config.t_flex_grid) {
    std::optional<double> ndub_ne;
    if (has_ndub) ndub_ne = mean_cell(MethodKind::kNdub, t).ne;
    for (MethodKind kind : config.methods) {
      const MetricReport aggregated = mean_cell(kind, t);
      EvaluateRow row;
      row.t_flex = t;
      row.method = kind;
      row.ne = aggregated.ne;
      row.calibration = aggregated.calibration;
      if (ndub_ne) {
        row.delta_vs_ndub_pct = ne_delta_percent(aggregated.ne, *ndub_ne);
      }
      result.rows.push_back(row);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// recurring
// ---------------------------------------------------------------------------

RecurringResult recurring_experiment(std::span<const Event> events,
                                     const ExperimentConfig& config,
                                     int threads) {
  const bool has_baseline =
      std::find(config.methods.begin(), config.methods.end(),
                MethodKind::kSevenHead) != config.methods.end();
  if (!has_baseline) {
    throw DataError("recurring report needs SEVEN_HEAD among the methods");
  }
  std::vector<MethodKind> interp;
  for (MethodKind kind : config.methods) {
    if (method_uses_alpha(kind)) interp.push_back(kind);
  }
  if (interp.empty()) {
    throw DataError("recurring report needs at least one INTERP_* method");
  }

  RecurringResult result;
  result.schedule = run_recurring(events, config.stream.num_segments,
                                  config.base_windows(),
                                  recurring_spec_for(config, threads));

  for (int day : config.schedule.train_days) {
    for (MethodKind kind : interp) {
      for (double t : config.t_flex_grid) {
        const ScheduleCell* cell = result.schedule.find(day, kind, t);
        const ScheduleCell* baseline =
            result.schedule.find(day, MethodKind::kSevenHead, t);
        if (cell == nullptr || baseline == nullptr) continue;
        if (cell->skipped || baseline->skipped) {
          throw DataError(
              "recurring cell skipped (day " + std::to_string(day) + ", " +
              method_kind_name(kind) + ", t_flex " + format_cell(t) +
              "): " + (cell->skipped ? cell->skip_reason
                                     : baseline->skip_reason));
        }
        RecurringRow row;
        row.train_day = day;
        row.method = kind;
        row.t_flex = t;
        row.ne = cell->report.ne;
        row.baseline_ne = baseline->report.ne;
        row.gain_pct = ne_delta_percent(row.ne, row.baseline_ne);
        result.rows.push_back(row);
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// sweep-beta
// ---------------------------------------------------------------------------

SweepResult sweep_beta_experiment(std::span<const Event> events,
                                  const ExperimentConfig& config,
                                  int threads) {
  const WindowSpec base_windows = config.base_windows();
  const auto& days = config.schedule.train_days;
  const auto& grid = config.t_flex_grid;

  if (events.empty()) throw DataError("beta sweep needs a non-empty stream");
  if (!std::is_sorted(events.begin(), events.end(),
                      [](const Event& a, const Event& b) { return a.day < b.day; })) {
    throw DataError("event stream must be sorted by day");
  }
  for (int day : days) {
    const double d = static_cast<double>(day);
    if (d - base_windows.t_long() < events.front().day) {
      throw DataError("insufficient history for train day " + std::to_string(day));
    }
    if (d + config.schedule.eval_horizon_days > events.back().day) {
      throw DataError("insufficient future for train day " + std::to_string(day));
    }
  }

  struct FamilyGrid {
    AlphaFamily family;
    MethodKind kind;
    const std::vector<double>* betas;
  };
  const FamilyGrid families[] = {
      {AlphaFamily::kLinear, MethodKind::kInterpLinear, &config.sweep.linear},
      {AlphaFamily::kRational, MethodKind::kInterpRational,
       &config.sweep.rational},
      {AlphaFamily::kExponential, MethodKind::kInterpExp,
       &config.sweep.exponential},
  };

  std::size_t n_designs = 0;
  for (const FamilyGrid& f : families) n_designs += f.betas->size();

  // ne[day][design][t_flex] for the swept designs, and the shared baseline.
  std::vector<std::vector<std::vector<double>>> ne(
      days.size(), std::vector<std::vector<double>>(
                       n_designs, std::vector<double>(grid.size(), 0.0)));
  std::vector<std::vector<double>> ne_baseline(
      days.size(), std::vector<double>(grid.size(), 0.0));

  parallel_tasks(days.size(), threads, [&](std::size_t di) {
    const double day = static_cast<double>(days[di]);

    // One baseline and one consolidated base serve every swept design.
    const MethodUnderTest seven =
        train_method(MethodKind::kSevenHead, events,
                     config.stream.num_segments, day, base_windows,
                     config.train);
    const auto base = std::make_shared<const MtmlBase>(
        train_mtml_base(events, config.stream.num_segments, day, base_windows,
                        config.train));

    const auto before = [](const Event& e, double v) { return e.day < v; };
    const auto begin = std::lower_bound(events.begin(), events.end(), day, before);
    const auto end = std::lower_bound(events.begin(), events.end(),
                                      day + config.schedule.eval_horizon_days,
                                      before);
    const std::span<const Event> slice = events.subspan(
        static_cast<std::size_t>(begin - events.begin()),
        static_cast<std::size_t>(end - begin));

    std::vector<double> preds(slice.size());
    std::vector<std::uint8_t> labels(slice.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const WindowSpec w = base_windows.with_flex(grid[g]);
      for (std::size_t i = 0; i < slice.size(); ++i) {
        labels[i] = window_label(slice[i], w.t_flex()) ? 1 : 0;
        preds[i] = seven.predict(slice[i], w);
      }
      ne_baseline[di][g] = normalized_entropy(preds, labels);

      std::size_t design_index = 0;
      for (const FamilyGrid& f : families) {
        for (double beta : *f.betas) {
          AlphaDesign design;
          design.family = f.family;
          design.beta = beta;
          const MethodUnderTest model =
              MethodUnderTest::from_base(f.kind, base, design);
          for (std::size_t i = 0; i < slice.size(); ++i) {
            preds[i] = model.predict(slice[i], w);
          }
          ne[di][design_index][g] = normalized_entropy(preds, labels);
          ++design_index;
        }
      }
    }
  });

  const auto day_mean = [&](auto&& value_for_day) {
    CompensatedSum sum;
    for (std::size_t di = 0; di < days.size(); ++di) {
      sum.add(value_for_day(di));
    }
    return sum.value() / static_cast<double>(days.size());
  };

  SweepResult result;
  std::size_t design_index = 0;
  for (const FamilyGrid& f : families) {
    for (double beta : *f.betas) {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const double mean_ne =
            day_mean([&](std::size_t di) { return ne[di][design_index][g]; });
        const double mean_baseline =
            day_mean([&](std::size_t di) { return ne_baseline[di][g]; });
        SweepRow row;
        row.family = f.family;
        row.beta = beta;
        row.t_flex = grid[g];
        row.gain_pct = ne_delta_percent(mean_ne, mean_baseline);
        result.rows.push_back(row);
      }
      ++design_index;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// File-level subcommands
// ---------------------------------------------------------------------------

std::filesystem::path cmd_simulate(const ExperimentConfig& config) {
  const std::vector<Event> events = generate_stream(config.stream);

  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  const fs::path log_path = dir / kEventsFile;
  write_event_log(log_path, events);

  json manifest;
  manifest["command"] = "simulate";
  manifest["format"] = "events-jsonl-v1";
  manifest["config_hash"] = config.config_hash;
  manifest["stream_hash"] = config.stream_hash;
  manifest["seed"] = config.seed;
  manifest["num_events"] = events.size();
  manifest["days"] = config.stream.days;
  manifest["events_per_day"] = config.stream.events_per_day;
  write_lines(dir / kManifestFile, manifest.dump(2) + "\n");
  return log_path;
}

std::filesystem::path cmd_analyze(const ExperimentConfig& config) {
  const fs::path dir(config.out_dir);
  const fs::path manifest_path = dir / kManifestFile;
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) {
    throw DataError("missing manifest: " + manifest_path.string() +
                    " (run `fow simulate` first)");
  }
  json manifest = json::parse(manifest_in, nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object() ||
      !manifest.contains("stream_hash") ||
      !manifest["stream_hash"].is_string()) {
    throw DataError("malformed manifest: " + manifest_path.string());
  }
  const std::string log_hash = manifest["stream_hash"].get<std::string>();
  if (log_hash != config.stream_hash) {
    throw DataError("stream hash mismatch: log " + log_hash + " vs config " +
                    config.stream_hash +
                    "; the event log was generated from a different stream");
  }

  const std::vector<Event> events = read_event_log(dir / kEventsFile);
  const AnalyzeResult result = analyze_events(events, config);

  std::vector<std::vector<std::string>> rows;
  rows.reserve(result.rows.size());
  for (const AnalyzeRow& r : result.rows) {
    rows.push_back({format_cell(r.day), format_cell(r.empirical_cdf),
                    format_cell(r.est_linear), format_cell(r.est_rational),
                    format_cell(r.est_exp), format_cell(r.cal_linear),
                    format_cell(r.cal_rational), format_cell(r.cal_exp)});
  }
  return write_report(config, "analyze", "analyze.csv",
                      {"day", "empirical_cdf", "est_linear", "est_rational",
                       "est_exp", "cal_linear", "cal_rational", "cal_exp"},
                      rows);
}

std::filesystem::path cmd_evaluate(const ExperimentConfig& config,
                                   int threads) {
  const std::vector<Event> events = generate_stream(config.stream);
  const EvaluateResult result = evaluate_experiment(events, config, threads);

  std::vector<std::vector<std::string>> rows;
  rows.reserve(result.rows.size());
  for (const EvaluateRow& r : result.rows) {
    rows.push_back({format_cell(r.t_flex), method_kind_name(r.method),
                    format_cell(r.ne), format_cell(r.calibration),
                    r.delta_vs_ndub_pct ? format_cell(*r.delta_vs_ndub_pct)
                                        : std::string()});
  }
  return write_report(
      config, "evaluate", "evaluate.csv",
      {"t_flex", "method", "ne", "calibration", "delta_vs_ndub_pct"}, rows);
}

std::filesystem::path cmd_recurring(const ExperimentConfig& config,
                                    int threads) {
  const std::vector<Event> events = generate_stream(config.stream);
  const RecurringResult result = recurring_experiment(events, config, threads);

  std::vector<std::vector<std::string>> rows;
  rows.reserve(result.rows.size());
  for (const RecurringRow& r : result.rows) {
    rows.push_back({std::to_string(r.train_day), method_kind_name(r.method),
                    format_cell(r.t_flex), format_cell(r.ne),
                    format_cell(r.baseline_ne), format_cell(r.gain_pct)});
  }
  return write_report(
      config, "recurring", "recurring.csv",
      {"train_day", "method", "t_flex", "ne", "baseline_ne", "gain_pct"},
      rows);
}

std::filesystem::path cmd_sweep_beta(const ExperimentConfig& config,
                                     int threads) {
  const std::vector<Event> events = generate_stream(config.stream);
  const SweepResult result = sweep_beta_experiment(events, config, threads);

  std::vector<std::vector<std::string>> rows;
  rows.reserve(result.rows.size());
  for (const SweepRow& r : result.rows) {
    rows.push_back({alpha_family_name(r.family), format_cell(r.beta),
                    format_cell(r.t_flex), format_cell(r.gain_pct)});
  }
  return write_report(config, "sweep-beta", "sweep_beta.csv",
                      {"family", "beta", "t_flex", "gain_pct"}, rows);
}

}  // namespace fow

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fow/commands.hpp"
#include "fow/config.hpp"
#include "fow/errors.hpp"
#include "fow/event_log.hpp"
#include "fow/simulation.hpp"

using fow::AlphaFamily;
using fow::analyze_events;
using fow::AnalyzeResult;
using fow::config_from_json;
using fow::DataError;
using fow::evaluate_experiment;
using fow::EvaluateResult;
using fow::Event;
using fow::ExperimentConfig;
using fow::format_cell;
using fow::generate_stream;
using fow::MethodKind;
using fow::recurring_experiment;
using fow::RecurringResult;
using fow::sweep_beta_experiment;
using fow::SweepResult;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

// Small, fast experiment used across the command tests.
json small_experiment_json() {
  return json::parse(R"({
    "stream": {
      "num_segments": 4,
      "days": 36,
      "events_per_day": 400,
      "drift": {"kind": "none"}
    },
    "schedule": {"train_days": [14, 18, 22]}
  })");
}

ExperimentConfig small_experiment() {
  return config_from_json(small_experiment_json());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> body_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  }
  return lines;
}

fs::path fresh_dir(const char* name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("format_cell emits six significant digits") {
  CHECK(format_cell(1.0) == "1");
  CHECK(format_cell(0.9904023456) == "0.990402");
  CHECK(format_cell(123456789.0) == "1.23457e+08");
  CHECK(format_cell(-0.5) == "-0.5");
  CHECK(format_cell(0.0001234567) == "0.000123457");
}

TEST_CASE("analyze pins calibration to exactly 1 at both endpoints") {
  ExperimentConfig config = small_experiment();
  std::vector<Event> events = generate_stream(config.stream);
  AnalyzeResult result = analyze_events(events, config);
  REQUIRE(result.rows.size() == 7);
  CHECK(result.rows.front().day == 1.0);
  CHECK(result.rows.back().day == 7.0);
  for (const auto& row : {result.rows.front(), result.rows.back()}) {
    CHECK(row.cal_linear == 1.0);
    CHECK(row.cal_rational == 1.0);
    CHECK(row.cal_exp == 1.0);
    CHECK(row.est_linear == row.empirical_cdf);
    CHECK(row.est_rational == row.empirical_cdf);
    CHECK(row.est_exp == row.empirical_cdf);
  }
  CHECK(result.rows.front().empirical_cdf == result.cdf_short);
  CHECK(result.rows.back().empirical_cdf == result.cdf_long);

  // Interior estimates rise with the horizon and stay inside the endpoints.
  double prev = result.cdf_short;
  for (const auto& row : result.rows) {
    CHECK(row.est_rational >= prev - 1e-15);
    CHECK(row.est_rational <= result.cdf_long + 1e-15);
    CHECK(row.empirical_cdf > 0.0);
    CHECK(row.cal_rational > 0.5);
    CHECK(row.cal_rational < 2.0);
    prev = row.est_rational;
  }
}

TEST_CASE("analyze rejects empty logs and conversion-free horizons") {
  ExperimentConfig config = small_experiment();
  CHECK_THROWS_AS(analyze_events({}, config), DataError);

  ExperimentConfig barren = config_from_json(json::parse(R"({
    "stream": {
      "num_segments": 1,
      "days": 10,
      "events_per_day": 50,
      "drift": {"kind": "none"},
      "segments": {
        "explicit": [
          {"family": "zero_inflated_exponential", "p_conv": 0.0, "rate": 1.0}
        ]
      }
    }
  })"));
  std::vector<Event> events = generate_stream(barren.stream);
  CHECK_THROWS_AS(analyze_events(events, barren), DataError);
}

TEST_CASE("evaluate aggregates the schedule into one row per cell") {
  ExperimentConfig config = small_experiment();
  std::vector<Event> events = generate_stream(config.stream);
  EvaluateResult result = evaluate_experiment(events, config, 4);
  REQUIRE(result.rows.size() == 7 * 8);
  // t-major, methods in config order.
  CHECK(result.rows[0].t_flex == 1.0);
  CHECK(result.rows[0].method == MethodKind::kInterpLinear);
  CHECK(result.rows[7].t_flex == 1.0);
  CHECK(result.rows[7].method == MethodKind::kNdub);
  CHECK(result.rows[8].t_flex == 2.0);
  for (const auto& row : result.rows) {
    CHECK(row.ne > 0.0);
    CHECK(row.calibration > 0.0);
    REQUIRE(row.delta_vs_ndub_pct.has_value());
    if (row.method == MethodKind::kNdub) {
      CHECK(*row.delta_vs_ndub_pct == 0.0);
    }
  }
  // The schedule grid behind the aggregation is dense: 3 days x 8 x 7.
  CHECK(result.schedule.cells.size() == 3 * 8 * 7);
}

TEST_CASE("evaluate omits the NDUB delta when NDUB is not configured") {
  json body = small_experiment_json();
  body["methods"] = {"INTERP_EXP", "P1D", "SEVEN_HEAD"};
  ExperimentConfig config = config_from_json(body);
  std::vector<Event> events = generate_stream(config.stream);
  EvaluateResult result = evaluate_experiment(events, config, 4);
  REQUIRE(result.rows.size() == 7 * 3);
  for (const auto& row : result.rows) {
    CHECK_FALSE(row.delta_vs_ndub_pct.has_value());
  }
}

TEST_CASE("recurring requires the baseline and at least one INTERP method") {
  std::vector<Event> events;
  {
    ExperimentConfig config = small_experiment();
    events = generate_stream(config.stream);
  }
  json no_baseline = small_experiment_json();
  no_baseline["methods"] = {"INTERP_LINEAR", "P1D"};
  CHECK_THROWS_AS(
      recurring_experiment(events, config_from_json(no_baseline), 2),
      DataError);
  json no_interp = small_experiment_json();
  no_interp["methods"] = {"SEVEN_HEAD", "P1D", "NDUB"};
  CHECK_THROWS_AS(
      recurring_experiment(events, config_from_json(no_interp), 2),
      DataError);
}

TEST_CASE("recurring reports per-day gains against SEVEN_HEAD") {
  json body = small_experiment_json();
  body["methods"] = {"INTERP_LINEAR", "INTERP_RATIONAL", "INTERP_EXP",
                     "SEVEN_HEAD"};
  ExperimentConfig config = config_from_json(body);
  std::vector<Event> events = generate_stream(config.stream);
  RecurringResult result = recurring_experiment(events, config, 4);
  // 3 days x 3 interp methods x 7 horizons.
  REQUIRE(result.rows.size() == 3 * 3 * 7);
  CHECK(result.rows.front().train_day == 14);
  CHECK(result.rows.front().method == MethodKind::kInterpLinear);
  CHECK(result.rows.back().train_day == 22);
  CHECK(result.rows.back().method == MethodKind::kInterpExp);

  for (const auto& row : result.rows) {
    const auto* cell =
        result.schedule.find(row.train_day, row.method, row.t_flex);
    const auto* baseline =
        result.schedule.find(row.train_day, MethodKind::kSevenHead, row.t_flex);
    REQUIRE(cell != nullptr);
    REQUIRE(baseline != nullptr);
    CHECK(row.ne == cell->report.ne);
    CHECK(row.baseline_ne == baseline->report.ne);
    CHECK(row.gain_pct ==
          fow::ne_delta_percent(row.ne, row.baseline_ne));
  }

  // Endpoint pinning: within a (day, t) cell at t = 1 or 7, all three
  // interpolation designs serve identical predictions, hence identical NE.
  for (int day : {14, 18, 22}) {
    for (double t : {1.0, 7.0}) {
      std::set<double> nes;
      for (const auto& row : result.rows) {
        if (row.train_day == day && row.t_flex == t) nes.insert(row.ne);
      }
      CHECK(nes.size() == 1);
    }
  }
}

TEST_CASE("beta sweep emits family-major rows with shared endpoints") {
  json body = small_experiment_json();
  body["schedule"]["train_days"] = {14, 18};
  ExperimentConfig config = config_from_json(body);
  std::vector<Event> events = generate_stream(config.stream);
  SweepResult result = sweep_beta_experiment(events, config, 4);
  REQUIRE(result.rows.size() == 18 * 7);

  // linear block first, then rational, then exponential; t_flex inner.
  CHECK(result.rows[0].family == AlphaFamily::kLinear);
  CHECK(result.rows[0].beta == 0.0);
  CHECK(result.rows[0].t_flex == 1.0);
  CHECK(result.rows[6 * 7].family == AlphaFamily::kRational);
  CHECK(result.rows[12 * 7].family == AlphaFamily::kExponential);
  CHECK(result.rows.back().t_flex == 7.0);

  // At the endpoints every design serves the raw endpoint estimate, so the
  // gain against the shared baseline is identical across all 18 designs.
  std::set<double> gains_at_short;
  std::set<double> gains_at_long;
  for (const auto& row : result.rows) {
    if (row.t_flex == 1.0) gains_at_short.insert(row.gain_pct);
    if (row.t_flex == 7.0) gains_at_long.insert(row.gain_pct);
  }
  CHECK(gains_at_short.size() == 1);
  CHECK(gains_at_long.size() == 1);
}

TEST_CASE("beta sweep validates the schedule against the stream") {
  json body = small_experiment_json();
  body["schedule"]["train_days"] = {33};  // needs eval data through day 40
  ExperimentConfig config = config_from_json(body);
  std::vector<Event> events = generate_stream(config.stream);
  CHECK_THROWS_AS(sweep_beta_experiment(events, config, 1), DataError);
}

TEST_CASE("simulate writes the log and a matching manifest") {
  fs::path dir = fresh_dir("fow_cmd_simulate");
  json body = small_experiment_json();
  body["out_dir"] = dir.string();
  body["stream"]["days"] = 10;
  body["stream"]["events_per_day"] = 50;
  ExperimentConfig config = config_from_json(body);

  fs::path log_path = fow::cmd_simulate(config);
  CHECK(log_path == dir / "events.jsonl");
  std::vector<Event> events = fow::read_event_log(log_path);
  CHECK(events.size() == 10 * 50);

  json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["format"] == "events-jsonl-v1");
  CHECK(manifest["config_hash"] == config.config_hash);
  CHECK(manifest["stream_hash"] == config.stream_hash);
  CHECK(manifest["seed"] == 1);
  CHECK(manifest["num_events"] == 500);
  CHECK(manifest["days"] == 10);
  CHECK(manifest["events_per_day"] == 50);
  fs::remove_all(dir);
}

TEST_CASE("analyze consumes the simulated log and guards the stream hash") {
  fs::path dir = fresh_dir("fow_cmd_analyze");
  json body = small_experiment_json();
  body["out_dir"] = dir.string();
  body["stream"]["days"] = 20;
  ExperimentConfig config = config_from_json(body);
  fow::cmd_simulate(config);
  fs::path report = fow::cmd_analyze(config);
  CHECK(report == dir / "analyze.csv");

  const std::string text = slurp(report);
  CHECK(text.find("# fow analyze\n") == 0);
  CHECK(text.find("# config_hash=" + config.config_hash) != std::string::npos);
  CHECK(text.find("# seed=1") != std::string::npos);
  CHECK(text.find("day,empirical_cdf,est_linear,est_rational,est_exp,"
                  "cal_linear,cal_rational,cal_exp") != std::string::npos);
  CHECK(body_lines(text).size() == 8);  // column row + 7 grid rows
  CHECK(text.find('\r') == std::string::npos);

  // A config describing a different stream must refuse the log.
  json other = body;
  other["seed"] = 2;
  CHECK_THROWS_AS(fow::cmd_analyze(config_from_json(other)), DataError);

  // Without a manifest there is nothing trustworthy to analyze.
  fs::remove(dir / "manifest.json");
  CHECK_THROWS_AS(fow::cmd_analyze(config), DataError);
  fs::remove_all(dir);
}

TEST_CASE("evaluate report is deterministic across thread counts") {
  json body = small_experiment_json();
  body["schedule"]["train_days"] = {14, 18};
  fs::path dir_a = fresh_dir("fow_cmd_eval_a");
  fs::path dir_b = fresh_dir("fow_cmd_eval_b");

  json body_a = body;
  body_a["out_dir"] = dir_a.string();
  fow::cmd_evaluate(config_from_json(body_a), 1);

  json body_b = body;
  body_b["out_dir"] = dir_b.string();
  fow::cmd_evaluate(config_from_json(body_b), 8);

  // Identical bytes apart from nothing: the report carries no out_dir, but
  // the config hash covers it, so compare the bodies line by line.
  const auto a = body_lines(slurp(dir_a / "evaluate.csv"));
  const auto b = body_lines(slurp(dir_b / "evaluate.csv"));
  CHECK(a == b);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

}  // TEST_SUITE("commands")

// ---------------------------------------------------------------------------
// End-to-end tests that shell out to the installed binary. ctest runs this
// suite alone with FOW_BIN pointing at the built executable.
// ---------------------------------------------------------------------------

namespace {

std::string fow_bin() {
  const char* bin = std::getenv("FOW_BIN");
  REQUIRE_MESSAGE(bin != nullptr,
                  "FOW_BIN must point at the fow binary for this suite");
  return bin;
}

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

// Runs a shell command, capturing stdout; stderr passes through.
RunResult run_shell(const std::string& command) {
  fs::path capture = fs::temp_directory_path() /
                     ("fow_cli_stdout_" + std::to_string(::getpid()) + ".txt");
  const std::string full = command + " > " + capture.string();
  const int status = std::system(full.c_str());
  RunResult result;
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  std::ifstream in(capture);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  result.stdout_text = buffer.str();
  fs::remove(capture);
  return result;
}

std::string q(const std::string& s) { return "'" + s + "'"; }

fs::path write_cli_config(const fs::path& dir, const char* name) {
  const json body = json::parse(R"({
    "stream": {
      "num_segments": 2,
      "days": 30,
      "events_per_day": 200,
      "drift": {"kind": "none"}
    },
    "schedule": {"train_days": [14, 18]},
    "methods": ["INTERP_LINEAR", "INTERP_RATIONAL", "INTERP_EXP",
                "SEVEN_HEAD", "NDUB"]
  })");
  fs::path path = dir / name;
  std::ofstream out(path);
  out << body.dump(2) << "\n";
  return path;
}

}  // namespace

TEST_SUITE("cli-binary") {

TEST_CASE("simulate then analyze round-trips through the filesystem") {
  fs::path dir = fresh_dir("fow_cli_roundtrip");
  fs::path config = write_cli_config(dir, "config.json");
  fs::path out = dir / "out";

  RunResult simulate = run_shell(fow_bin() + " simulate --config " +
                                 q(config.string()) + " --out " +
                                 q(out.string()));
  CHECK(simulate.exit_code == 0);
  CHECK(simulate.stdout_text.find("wrote ") == 0);
  CHECK(fs::exists(out / "events.jsonl"));
  CHECK(fs::exists(out / "manifest.json"));

  RunResult analyze = run_shell(fow_bin() + " analyze --config " +
                                q(config.string()) + " --out " +
                                q(out.string()));
  CHECK(analyze.exit_code == 0);
  CHECK(fs::exists(out / "analyze.csv"));
  fs::remove_all(dir);
}

TEST_CASE("evaluate reruns and thread counts are byte-identical") {
  fs::path dir = fresh_dir("fow_cli_determinism");
  fs::path config = write_cli_config(dir, "config.json");
  fs::path out = dir / "out";

  // Same --out each time, so the report (header included) must not move by
  // a single byte across reruns and thread counts.
  const auto run_with_threads = [&](int threads) {
    RunResult r = run_shell(fow_bin() + " evaluate --config " +
                            q(config.string()) + " --out " + q(out.string()) +
                            " --threads " + std::to_string(threads));
    CHECK(r.exit_code == 0);
    return slurp(out / "evaluate.csv");
  };
  const std::string first = run_with_threads(1);
  const std::string rerun = run_with_threads(1);
  const std::string threaded = run_with_threads(6);
  CHECK(first == rerun);
  CHECK(first == threaded);
  fs::remove_all(dir);
}

TEST_CASE("recurring and sweep-beta write their reports") {
  fs::path dir = fresh_dir("fow_cli_reports");
  fs::path config = write_cli_config(dir, "config.json");

  RunResult recurring = run_shell(
      fow_bin() + " recurring --config " + q(config.string()) + " --out " +
      q((dir / "rec").string()) + " --threads 4");
  CHECK(recurring.exit_code == 0);
  CHECK(fs::exists(dir / "rec" / "recurring.csv"));

  RunResult sweep = run_shell(
      fow_bin() + " sweep-beta --config " + q(config.string()) + " --set " +
      q("schedule.train_days=[14]") + " --out " + q((dir / "sweep").string()) +
      " --threads 4");
  CHECK(sweep.exit_code == 0);
  const std::string text = slurp(dir / "sweep" / "sweep_beta.csv");
  CHECK(text.find("family,beta,t_flex,gain_pct") != std::string::npos);
  CHECK(body_lines(text).size() == 1 + 18 * 7);
  fs::remove_all(dir);
}

TEST_CASE("config errors exit with status 2") {
  fs::path dir = fresh_dir("fow_cli_config_err");
  fs::path config = dir / "bad.json";
  {
    std::ofstream out(config);
    out << R"({"frobnicate": 1})" << "\n";
  }
  RunResult bad_key = run_shell(fow_bin() + " evaluate --config " +
                                q(config.string()));
  CHECK(bad_key.exit_code == 2);

  fs::path good = write_cli_config(dir, "good.json");
  RunResult bad_set = run_shell(fow_bin() + " evaluate --config " +
                                q(good.string()) + " --set no_equals");
  CHECK(bad_set.exit_code == 2);

  RunResult missing = run_shell(fow_bin() + " evaluate --config " +
                                q((dir / "absent.json").string()));
  CHECK(missing.exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("data errors exit with status 3") {
  fs::path dir = fresh_dir("fow_cli_data_err");
  fs::path config = write_cli_config(dir, "config.json");
  // analyze without a simulated log.
  RunResult no_log = run_shell(fow_bin() + " analyze --config " +
                               q(config.string()) + " --out " +
                               q((dir / "empty").string()));
  CHECK(no_log.exit_code == 3);

  // analyze against a log simulated from a different seed.
  fs::path out = dir / "out";
  CHECK(run_shell(fow_bin() + " simulate --config " + q(config.string()) +
                  " --out " + q(out.string()))
            .exit_code == 0);
  RunResult mismatched = run_shell("FOW_SEED=2 " + fow_bin() +
                                   " analyze --config " + q(config.string()) +
                                   " --out " + q(out.string()));
  CHECK(mismatched.exit_code == 3);
  fs::remove_all(dir);
}

TEST_CASE("infeasible hyperparameters exit with status 4") {
  fs::path dir = fresh_dir("fow_cli_infeasible");
  fs::path config = write_cli_config(dir, "config.json");
  RunResult infeasible = run_shell(fow_bin() + " evaluate --config " +
                                   q(config.string()) + " --set " +
                                   q("alpha.linear.beta=0.5"));
  CHECK(infeasible.exit_code == 4);
  fs::remove_all(dir);
}

TEST_CASE("FOW_SEED overrides the config seed") {
  fs::path dir = fresh_dir("fow_cli_seed");
  fs::path config = write_cli_config(dir, "config.json");
  fs::path out = dir / "out";
  RunResult seeded = run_shell("FOW_SEED=9 " + fow_bin() +
                               " simulate --config " + q(config.string()) +
                               " --out " + q(out.string()));
  CHECK(seeded.exit_code == 0);
  json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["seed"] == 9);

  RunResult garbage = run_shell("FOW_SEED=abc " + fow_bin() +
                                " simulate --config " + q(config.string()) +
                                " --out " + q(out.string()));
  CHECK(garbage.exit_code == 2);
  fs::remove_all(dir);
}

}  // TEST_SUITE("cli-binary")

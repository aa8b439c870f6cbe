#include "fow/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "fow/errors.hpp"

namespace fow {

namespace {

using nlohmann::json;

// Low-discrepancy fractions used to spread generator parameters across
// segments deterministically (seed-independent: seeds vary the draws, not
// the task itself). Distinct irrationals per parameter avoid lockstep.
constexpr double kFracPConv = 0.6180339887498948482;   // golden ratio
constexpr double kFracShape = 0.41421356237309515;     // sqrt(2) - 1
constexpr double kFracScale = 0.73205080756887729;     // sqrt(3) - 1

double spread(double lo, double hi, int segment, double irrational) {
  const double u =
      std::fmod(static_cast<double>(segment + 1) * irrational, 1.0);
  return lo + u * (hi - lo);
}

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

void check_keys(const json& j, const std::string& context,
                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) {
      fail("unknown config key: " + context + key);
    }
  }
}

const json& at(const json& j, const std::string& context,
               const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end()) fail("missing config key: " + context + key);
  return *it;
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + " must be a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where + " must be an integer");
  return j.get<int>();
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where + " must be a string");
  return j.get<std::string>();
}

std::vector<double> as_number_array(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& v : j) out.push_back(as_number(v, where + " entry"));
  return out;
}

std::pair<double, double> as_range(const json& j, const std::string& where) {
  const auto values = as_number_array(j, where);
  if (values.size() != 2 || !(values[0] <= values[1])) {
    fail(where + " must be a [lo, hi] pair with lo <= hi");
  }
  return {values[0], values[1]};
}

DelayDistribution parse_distribution(const json& j, const std::string& context) {
  if (!j.is_object()) fail(context + " must be an object");
  const std::string family = as_string(at(j, context + ".", "family"),
                                       context + ".family");
  if (family == "zero_inflated_exponential") {
    check_keys(j, context + ".", {"family", "p_conv", "rate"});
    return DelayDistribution::zero_inflated_exponential(
        as_number(at(j, context + ".", "p_conv"), context + ".p_conv"),
        as_number(at(j, context + ".", "rate"), context + ".rate"));
  }
  if (family == "zero_inflated_weibull") {
    check_keys(j, context + ".", {"family", "p_conv", "shape", "scale"});
    return DelayDistribution::zero_inflated_weibull(
        as_number(at(j, context + ".", "p_conv"), context + ".p_conv"),
        as_number(at(j, context + ".", "shape"), context + ".shape"),
        as_number(at(j, context + ".", "scale"), context + ".scale"));
  }
  if (family == "empirical_histogram") {
    check_keys(j, context + ".", {"family", "edges", "masses"});
    return DelayDistribution::empirical_histogram(
        as_number_array(at(j, context + ".", "edges"), context + ".edges"),
        as_number_array(at(j, context + ".", "masses"), context + ".masses"));
  }
  fail("unknown delay family in " + context + ": " + family);
}

std::vector<DelayDistribution> parse_segments(const json& j, int num_segments) {
  if (!j.is_object()) fail("stream.segments must be an object");
  check_keys(j, "stream.segments.", {"generator", "explicit"});
  if (j.contains("generator") == j.contains("explicit")) {
    fail("stream.segments needs exactly one of 'generator' or 'explicit'");
  }

  if (j.contains("explicit")) {
    const json& list = j["explicit"];
    if (!list.is_array()) fail("stream.segments.explicit must be an array");
    std::vector<DelayDistribution> out;
    out.reserve(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
      out.push_back(parse_distribution(
          list[i], "stream.segments.explicit[" + std::to_string(i) + "]"));
    }
    if (out.size() != static_cast<std::size_t>(num_segments)) {
      fail("stream.segments.explicit has " + std::to_string(out.size()) +
           " entries for " + std::to_string(num_segments) + " segments");
    }
    return out;
  }

  const json& gen = j["generator"];
  if (!gen.is_object()) fail("stream.segments.generator must be an object");
  const std::string context = "stream.segments.generator";
  const std::string family =
      as_string(at(gen, context + ".", "family"), context + ".family");
  const auto p_conv = as_range(at(gen, context + ".", "p_conv"),
                               context + ".p_conv");
  std::vector<DelayDistribution> out;
  out.reserve(static_cast<std::size_t>(num_segments));
  if (family == "zero_inflated_weibull") {
    check_keys(gen, context + ".", {"family", "p_conv", "shape", "scale"});
    const auto shape = as_range(at(gen, context + ".", "shape"),
                                context + ".shape");
    const auto scale = as_range(at(gen, context + ".", "scale"),
                                context + ".scale");
    for (int s = 0; s < num_segments; ++s) {
      out.push_back(DelayDistribution::zero_inflated_weibull(
          spread(p_conv.first, p_conv.second, s, kFracPConv),
          spread(shape.first, shape.second, s, kFracShape),
          spread(scale.first, scale.second, s, kFracScale)));
    }
    return out;
  }
  if (family == "zero_inflated_exponential") {
    check_keys(gen, context + ".", {"family", "p_conv", "rate"});
    const auto rate = as_range(at(gen, context + ".", "rate"),
                               context + ".rate");
    for (int s = 0; s < num_segments; ++s) {
      out.push_back(DelayDistribution::zero_inflated_exponential(
          spread(p_conv.first, p_conv.second, s, kFracPConv),
          spread(rate.first, rate.second, s, kFracShape)));
    }
    return out;
  }
  fail("generator family must be zero_inflated_weibull or zero_inflated_exponential, got " +
       family);
}

DriftSpec parse_drift(const json& j) {
  if (!j.is_object()) fail("stream.drift must be an object");
  check_keys(j, "stream.drift.",
             {"kind", "amplitude", "period_days", "step_sigma"});
  DriftSpec drift;
  const std::string kind =
      as_string(at(j, "stream.drift.", "kind"), "stream.drift.kind");
  if (kind == "none") {
    drift.kind = DriftKind::kNone;
  } else if (kind == "sinusoid") {
    drift.kind = DriftKind::kSinusoid;
  } else if (kind == "random_walk") {
    drift.kind = DriftKind::kRandomWalk;
  } else {
    fail("unknown drift kind: " + kind);
  }
  if (j.contains("amplitude")) {
    drift.amplitude = as_number(j["amplitude"], "stream.drift.amplitude");
  }
  if (j.contains("period_days")) {
    drift.period_days = as_number(j["period_days"], "stream.drift.period_days");
  }
  if (j.contains("step_sigma")) {
    drift.step_sigma = as_number(j["step_sigma"], "stream.drift.step_sigma");
  }
  return drift;
}

AlphaDesign parse_design(const json& j, AlphaFamily family,
                         const std::string& context, int num_segments) {
  if (!j.is_object()) fail(context + " must be an object");
  check_keys(j, context + ".", {"beta", "beta_by_segment"});
  AlphaDesign design;
  design.family = family;
  design.beta = as_number(at(j, context + ".", "beta"), context + ".beta");
  if (j.contains("beta_by_segment")) {
    const json& overrides = j["beta_by_segment"];
    if (!overrides.is_object()) {
      fail(context + ".beta_by_segment must be an object");
    }
    for (const auto& [key, value] : overrides.items()) {
      int segment = -1;
      try {
        segment = std::stoi(key);
      } catch (const std::exception&) {
        fail(context + ".beta_by_segment key is not a segment index: " + key);
      }
      if (segment < 0 || segment >= num_segments) {
        fail(context + ".beta_by_segment segment out of range: " + key);
      }
      design.beta_by_segment[segment] =
          as_number(value, context + ".beta_by_segment." + key);
    }
  }
  return design;
}

}  // namespace

const AlphaDesign& ExperimentConfig::design_for(MethodKind kind) const {
  switch (kind) {
    case MethodKind::kInterpLinear:
      return alpha_linear;
    case MethodKind::kInterpRational:
      return alpha_rational;
    case MethodKind::kInterpExp:
      return alpha_exponential;
    default:
      throw std::logic_error("method " + method_kind_name(kind) +
                             " has no alpha design");
  }
}

std::vector<MethodSpec> ExperimentConfig::method_specs() const {
  std::vector<MethodSpec> specs;
  specs.reserve(methods.size());
  for (MethodKind kind : methods) {
    MethodSpec spec;
    spec.kind = kind;
    if (method_uses_alpha(kind)) spec.design = design_for(kind);
    specs.push_back(std::move(spec));
  }
  return specs;
}

nlohmann::json default_config_json() {
  json defaults = json::parse(R"json({
    "seed": 1,
    "out_dir": "out",
    "stream": {
      "num_segments": 50,
      "days": 120,
      "events_per_day": 2000,
      "drift": {"kind": "sinusoid", "amplitude": 0.3, "period_days": 28.0, "step_sigma": 0.05},
      "segments": {
        "generator": {
          "family": "zero_inflated_weibull",
          "p_conv": [0.10, 0.30],
          "shape": [0.30, 0.42],
          "scale": [0.70, 1.40]
        }
      }
    },
    "windows": {
      "t_short": 1.0,
      "t_long": 7.0,
      "t_flex_grid": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]
    },
    "methods": ["INTERP_LINEAR", "INTERP_RATIONAL", "INTERP_EXP",
                "P1D", "P7D", "SEVEN_HEAD", "DEDICATED", "NDUB"],
    "alpha": {
      "linear": {"beta": 0.1, "beta_by_segment": {}},
      "rational": {"beta": 0.7, "beta_by_segment": {}},
      "exponential": {"beta": 0.4, "beta_by_segment": {}}
    },
    "estimator": {"smoothing": 25.0, "seven_head_pool": 0.3},
    "schedule": {
      "train_days": [100, 101, 102, 103, 104, 105, 106],
      "eval_horizon_days": 7.0,
      "train_window_days": 7.0
    },
    "sweep": {
      "linear": [],
      "rational": [0.0, 0.19, 0.38, 0.57, 0.76, 0.95],
      "exponential": [0.05, 0.64, 1.23, 1.82, 2.41, 3.0]
    }
  })json");
  // Six evenly spaced points over the linear family's full feasible range
  // [0, 1/(t_long - t_short)], endpoint included exactly.
  json linear_grid = json::array();
  for (int i = 0; i <= 5; ++i) {
    linear_grid.push_back(static_cast<double>(i) / 30.0);
  }
  defaults["sweep"]["linear"] = std::move(linear_grid);
  return defaults;
}

ExperimentConfig config_from_json(const nlohmann::json& user) {
  if (!user.is_object()) fail("config root must be an object");

  json merged = default_config_json();
  // A user segments block replaces the default wholesale; merging generator
  // defaults into an explicit list (or vice versa) would create ambiguity.
  if (user.contains("stream") && user["stream"].is_object() &&
      user["stream"].contains("segments")) {
    merged["stream"].erase("segments");
  }
  merged.update(user, /*merge_objects=*/true);

  check_keys(merged, "",
             {"seed", "out_dir", "stream", "windows", "methods", "alpha",
              "estimator", "schedule", "sweep"});

  ExperimentConfig config;

  const json& seed = at(merged, "", "seed");
  if (!(seed.is_number_unsigned() ||
        (seed.is_number_integer() && seed.get<std::int64_t>() >= 0))) {
    fail("seed must be a non-negative integer");
  }
  config.seed = seed.get<std::uint64_t>();
  config.out_dir = as_string(at(merged, "", "out_dir"), "out_dir");

  // --- stream ---------------------------------------------------------
  const json& stream = at(merged, "", "stream");
  if (!stream.is_object()) fail("stream must be an object");
  check_keys(stream, "stream.",
             {"num_segments", "days", "events_per_day", "drift", "segments"});
  config.stream.num_segments =
      as_int(at(stream, "stream.", "num_segments"), "stream.num_segments");
  config.stream.days = as_int(at(stream, "stream.", "days"), "stream.days");
  config.stream.events_per_day = as_int(
      at(stream, "stream.", "events_per_day"), "stream.events_per_day");
  config.stream.drift = parse_drift(at(stream, "stream.", "drift"));
  config.stream.segment_delay = parse_segments(
      at(stream, "stream.", "segments"), config.stream.num_segments);
  config.stream.seed = config.seed;
  validate_stream_config(config.stream);

  // --- windows --------------------------------------------------------
  const json& windows = at(merged, "", "windows");
  if (!windows.is_object()) fail("windows must be an object");
  check_keys(windows, "windows.", {"t_short", "t_long", "t_flex_grid"});
  config.t_short =
      as_number(at(windows, "windows.", "t_short"), "windows.t_short");
  config.t_long =
      as_number(at(windows, "windows.", "t_long"), "windows.t_long");
  config.t_flex_grid = as_number_array(
      at(windows, "windows.", "t_flex_grid"), "windows.t_flex_grid");
  if (config.t_flex_grid.empty()) fail("windows.t_flex_grid must be non-empty");
  const WindowSpec base = config.base_windows();  // validates the endpoints
  for (double t : config.t_flex_grid) {
    // Throws InfeasibleError when t is outside [t_short, t_long].
    static_cast<void>(base.with_flex(t));
  }

  // --- methods --------------------------------------------------------
  const json& methods = at(merged, "", "methods");
  if (!methods.is_array() || methods.empty()) {
    fail("methods must be a non-empty array of method names");
  }
  for (const json& m : methods) {
    const MethodKind kind = parse_method_kind(as_string(m, "methods entry"));
    if (std::find(config.methods.begin(), config.methods.end(), kind) !=
        config.methods.end()) {
      fail("duplicate method: " + method_kind_name(kind));
    }
    config.methods.push_back(kind);
  }

  // --- alpha designs ---------------------------------------------------
  const json& alpha = at(merged, "", "alpha");
  if (!alpha.is_object()) fail("alpha must be an object");
  check_keys(alpha, "alpha.", {"linear", "rational", "exponential"});
  config.alpha_linear =
      parse_design(at(alpha, "alpha.", "linear"), AlphaFamily::kLinear,
                   "alpha.linear", config.stream.num_segments);
  config.alpha_rational =
      parse_design(at(alpha, "alpha.", "rational"), AlphaFamily::kRational,
                   "alpha.rational", config.stream.num_segments);
  config.alpha_exponential = parse_design(
      at(alpha, "alpha.", "exponential"), AlphaFamily::kExponential,
      "alpha.exponential", config.stream.num_segments);
  check_feasible(config.alpha_linear, base);
  check_feasible(config.alpha_rational, base);
  check_feasible(config.alpha_exponential, base);

  // --- estimator -------------------------------------------------------
  const json& estimator = at(merged, "", "estimator");
  if (!estimator.is_object()) fail("estimator must be an object");
  check_keys(estimator, "estimator.", {"smoothing", "seven_head_pool"});
  config.train.smoothing = as_number(
      at(estimator, "estimator.", "smoothing"), "estimator.smoothing");
  config.train.pool_gamma =
      as_number(at(estimator, "estimator.", "seven_head_pool"),
                "estimator.seven_head_pool");
  if (!(config.train.smoothing >= 0.0)) {
    fail("estimator.smoothing must be non-negative");
  }
  if (!(config.train.pool_gamma >= 0.0 && config.train.pool_gamma <= 1.0)) {
    fail("estimator.seven_head_pool must be in [0, 1]");
  }

  // --- schedule --------------------------------------------------------
  const json& schedule = at(merged, "", "schedule");
  if (!schedule.is_object()) fail("schedule must be an object");
  check_keys(schedule, "schedule.",
             {"train_days", "eval_horizon_days", "train_window_days"});
  const json& train_days = at(schedule, "schedule.", "train_days");
  if (!train_days.is_array() || train_days.empty()) {
    fail("schedule.train_days must be a non-empty array");
  }
  for (const json& d : train_days) {
    config.schedule.train_days.push_back(
        as_int(d, "schedule.train_days entry"));
  }
  config.schedule.eval_horizon_days =
      as_number(at(schedule, "schedule.", "eval_horizon_days"),
                "schedule.eval_horizon_days");
  config.schedule.train_window_days =
      as_number(at(schedule, "schedule.", "train_window_days"),
                "schedule.train_window_days");
  if (!(config.schedule.eval_horizon_days > 0.0)) {
    fail("schedule.eval_horizon_days must be positive");
  }
  if (!(config.schedule.train_window_days > 0.0)) {
    fail("schedule.train_window_days must be positive");
  }
  config.train.train_window_days = config.schedule.train_window_days;

  // --- sweep grids -----------------------------------------------------
  const json& sweep = at(merged, "", "sweep");
  if (!sweep.is_object()) fail("sweep must be an object");
  check_keys(sweep, "sweep.", {"linear", "rational", "exponential"});
  config.sweep.linear =
      as_number_array(at(sweep, "sweep.", "linear"), "sweep.linear");
  config.sweep.rational =
      as_number_array(at(sweep, "sweep.", "rational"), "sweep.rational");
  config.sweep.exponential = as_number_array(
      at(sweep, "sweep.", "exponential"), "sweep.exponential");
  const auto check_grid = [&](AlphaFamily family,
                              const std::vector<double>& grid) {
    for (double beta : grid) {
      AlphaDesign design;
      design.family = family;
      design.beta = beta;
      check_feasible(design, base);  // InfeasibleError names the value
    }
  };
  check_grid(AlphaFamily::kLinear, config.sweep.linear);
  check_grid(AlphaFamily::kRational, config.sweep.rational);
  check_grid(AlphaFamily::kExponential, config.sweep.exponential);

  // --- hashes ----------------------------------------------------------
  config.canonical = merged;
  config.config_hash = fnv1a_hex(merged.dump());
  json stream_key;
  stream_key["seed"] = config.seed;
  stream_key["stream"] = merged["stream"];
  config.stream_hash = fnv1a_hex(stream_key.dump());
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides,
                             std::optional<std::uint64_t> seed_override,
                             std::optional<std::string> out_override) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path.string());
  json user = json::parse(in, /*cb=*/nullptr, /*allow_exceptions=*/false);
  if (user.is_discarded()) fail("config file is not valid JSON: " + path.string());
  if (!user.is_object()) fail("config root must be an object");

  for (const std::string& assignment : overrides) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail("--set needs path=value, got: " + assignment);
    }
    std::string pointer = "/" + assignment.substr(0, eq);
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, /*cb=*/nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = raw;  // bare strings stay strings
    try {
      user[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
      fail("--set path not applicable: " + assignment + " (" + e.what() + ")");
    }
  }

  if (seed_override) user["seed"] = *seed_override;
  if (out_override) user["out_dir"] = *out_override;
  return config_from_json(user);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return std::string(buf);
}

}  // namespace fow

#include "fow/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fow/errors.hpp"

namespace fow {

namespace {

// Events in (day_lo, day_hi], assuming `events` is sorted by day ascending.
std::span<const Event> slice_days(std::span<const Event> events, double day_lo,
                                  double day_hi) {
  const auto after = [](double value, const Event& e) { return value < e.day; };
  const auto begin =
      std::upper_bound(events.begin(), events.end(), day_lo, after);
  const auto end = std::upper_bound(events.begin(), events.end(), day_hi, after);
  return events.subspan(static_cast<std::size_t>(begin - events.begin()),
                        static_cast<std::size_t>(end - begin));
}

// One trained head. `rows` may be empty: the head then sits at
// `empty_prior` everywhere (used for degenerate conditional populations).
BucketEstimator head_from_rows(const std::vector<LabeledExample>& rows,
                               int num_segments, double smoothing,
                               double empty_prior) {
  double prior = empty_prior;
  if (!rows.empty()) {
    std::size_t positives = 0;
    for (const LabeledExample& row : rows) positives += row.window_label;
    prior = static_cast<double>(positives) / static_cast<double>(rows.size());
  }
  return train_bucket(rows, num_segments, smoothing, prior);
}

[[noreturn]] void throw_insufficient(const std::string& what, double snapshot,
                                     double cutoff) {
  throw DataError("insufficient matured data: " + what + " has no examples (snapshot=" +
                  std::to_string(snapshot) + ", cutoff=" +
                  std::to_string(cutoff) + ")");
}

}  // namespace

// ---------------------------------------------------------------------------
// BucketEstimator
// ---------------------------------------------------------------------------

BucketEstimator::BucketEstimator(int num_segments, double smoothing,
                                 double prior)
    : positives_(static_cast<std::size_t>(num_segments), 0),
      totals_(static_cast<std::size_t>(num_segments), 0),
      smoothing_(smoothing),
      prior_(prior) {
  if (num_segments <= 0) {
    throw ConfigError("estimator needs at least one segment");
  }
  if (!(smoothing >= 0.0)) {
    throw ConfigError("smoothing strength must be non-negative");
  }
  if (!(prior >= 0.0 && prior <= 1.0)) {
    throw ConfigError("prior must be in [0, 1]");
  }
}

void BucketEstimator::check_segment(int segment) const {
  if (segment < 0 || segment >= num_segments()) {
    throw DataError("segment " + std::to_string(segment) +
                    " outside [0, " + std::to_string(num_segments()) + ")");
  }
}

void BucketEstimator::add(int segment, bool positive) {
  check_segment(segment);
  positives_[segment] += positive ? 1 : 0;
  totals_[segment] += 1;
}

double BucketEstimator::predict(int segment) const {
  check_segment(segment);
  const double total = static_cast<double>(totals_[segment]);
  if (total + smoothing_ == 0.0) return clip_probability(prior_);
  const double p = (static_cast<double>(positives_[segment]) +
                    smoothing_ * prior_) /
                   (total + smoothing_);
  return clip_probability(p);
}

std::int64_t BucketEstimator::positives(int segment) const {
  check_segment(segment);
  return positives_[segment];
}

std::int64_t BucketEstimator::totals(int segment) const {
  check_segment(segment);
  return totals_[segment];
}

std::vector<double> BucketEstimator::values() const {
  std::vector<double> out(static_cast<std::size_t>(num_segments()));
  for (int s = 0; s < num_segments(); ++s) out[s] = predict(s);
  return out;
}

BucketEstimator train_bucket(std::span<const LabeledExample> examples,
                             int num_segments, double smoothing,
                             double prior) {
  BucketEstimator estimator(num_segments, smoothing, prior);
  for (const LabeledExample& row : examples) {
    estimator.add(row.segment, row.window_label);
  }
  return estimator;
}

// ---------------------------------------------------------------------------
// MtmlBase
// ---------------------------------------------------------------------------

MtmlBase::MtmlBase(BucketEstimator short_head, BucketEstimator cond_head,
                   double snapshot_day)
    : short_head_(std::move(short_head)),
      cond_head_(std::move(cond_head)),
      snapshot_day_(snapshot_day) {}

MtmlBase train_mtml_base(std::span<const Event> events, int num_segments,
                         double snapshot_day, const WindowSpec& windows,
                         const TrainParams& params) {
  const double w = params.train_window_days;
  if (!(w > 0.0)) {
    throw ConfigError("train window must be positive");
  }

  const double short_cutoff = snapshot_day - windows.t_short();
  const auto short_slice = slice_days(events, short_cutoff - w, short_cutoff);
  if (short_slice.empty()) {
    throw_insufficient("short head", snapshot_day, short_cutoff);
  }
  std::vector<LabeledExample> short_rows;
  short_rows.reserve(short_slice.size());
  for (const Event& e : short_slice) {
    short_rows.push_back(maturation_label(e, windows.t_short(), snapshot_day));
  }

  const double cond_cutoff = snapshot_day - windows.t_long();
  const auto cond_slice = slice_days(events, cond_cutoff - w, cond_cutoff);
  if (cond_slice.empty()) {
    throw_insufficient("conditional head", snapshot_day, cond_cutoff);
  }
  std::vector<LabeledExample> cond_rows;
  for (const Event& e : cond_slice) {
    if (maturation_label(e, windows.t_short(), snapshot_day).window_label) {
      continue;  // conditional head models survivors of the short window
    }
    cond_rows.push_back(maturation_label(e, windows.t_long(), snapshot_day));
  }

  return MtmlBase(
      head_from_rows(short_rows, num_segments, params.smoothing, kClipFloor),
      head_from_rows(cond_rows, num_segments, params.smoothing, kClipFloor),
      snapshot_day);
}

// ---------------------------------------------------------------------------
// Method taxonomy
// ---------------------------------------------------------------------------

std::string method_kind_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::kInterpLinear:
      return "INTERP_LINEAR";
    case MethodKind::kInterpRational:
      return "INTERP_RATIONAL";
    case MethodKind::kInterpExp:
      return "INTERP_EXP";
    case MethodKind::kP1d:
      return "P1D";
    case MethodKind::kP7d:
      return "P7D";
    case MethodKind::kSevenHead:
      return "SEVEN_HEAD";
    case MethodKind::kDedicated:
      return "DEDICATED";
    case MethodKind::kNdub:
      return "NDUB";
  }
  return "unknown";
}

MethodKind parse_method_kind(const std::string& name) {
  for (MethodKind kind :
       {MethodKind::kInterpLinear, MethodKind::kInterpRational,
        MethodKind::kInterpExp, MethodKind::kP1d, MethodKind::kP7d,
        MethodKind::kSevenHead, MethodKind::kDedicated, MethodKind::kNdub}) {
    if (method_kind_name(kind) == name) return kind;
  }
  throw ConfigError("unknown method kind: " + name);
}

bool method_uses_alpha(MethodKind kind) {
  return kind == MethodKind::kInterpLinear ||
         kind == MethodKind::kInterpRational || kind == MethodKind::kInterpExp;
}

namespace {

bool method_uses_base(MethodKind kind) {
  return method_uses_alpha(kind) || kind == MethodKind::kP1d ||
         kind == MethodKind::kP7d;
}

// Integer horizons between the endpoints, endpoints included.
std::vector<double> build_targets(const WindowSpec& windows) {
  std::vector<double> targets{windows.t_short()};
  for (double f = std::floor(windows.t_short()) + 1.0; f < windows.t_long();
       f += 1.0) {
    if (f > windows.t_short()) targets.push_back(f);
  }
  targets.push_back(windows.t_long());
  return targets;
}

}  // namespace

// ---------------------------------------------------------------------------
// MethodUnderTest
// ---------------------------------------------------------------------------

double MethodUnderTest::TargetModel::predict(int segment) const {
  if (!direct_values.empty()) {
    return direct_values[static_cast<std::size_t>(segment)];
  }
  const double p_short = short_values[static_cast<std::size_t>(segment)];
  if (!cond_values) return p_short;
  const double p_cond = (*cond_values)[static_cast<std::size_t>(segment)];
  return clip_probability(p_short + (1.0 - p_short) * p_cond);
}

MethodUnderTest MethodUnderTest::from_base(MethodKind kind,
                                           std::shared_ptr<const MtmlBase> base,
                                           AlphaDesign design) {
  if (!method_uses_base(kind)) {
    throw std::invalid_argument("method " + method_kind_name(kind) +
                                " does not run on a shared base");
  }
  if (!base) {
    throw std::invalid_argument("untrained method: null base");
  }
  MethodUnderTest method;
  method.kind_ = kind;
  method.base_ = std::move(base);
  method.design_ = std::move(design);
  return method;
}

double MethodUnderTest::predict(const Event& event,
                                const WindowSpec& windows) const {
  switch (kind_) {
    case MethodKind::kInterpLinear:
    case MethodKind::kInterpRational:
    case MethodKind::kInterpExp:
      return clip_probability(estimate_conditional(base_->pair(event), design_,
                                                   windows, event.segment));
    case MethodKind::kP1d:
      return base_->predict_short(event);
    case MethodKind::kP7d:
      return clip_probability(recover_long_window(base_->pair(event)));
    case MethodKind::kSevenHead:
    case MethodKind::kDedicated:
    case MethodKind::kNdub:
      return predict_targets(event, windows.t_flex());
  }
  throw std::logic_error("unreachable method kind");
}

double MethodUnderTest::predict_targets(const Event& event,
                                        double t_flex) const {
  if (targets_.empty()) {
    throw std::logic_error("untrained method: no target models");
  }
  const auto upper = std::lower_bound(
      targets_.begin(), targets_.end(), t_flex,
      [](const TargetModel& m, double t) { return m.target < t; });
  if (upper == targets_.end()) {
    return targets_.back().predict(event.segment);
  }
  if (upper->target == t_flex || upper == targets_.begin()) {
    return upper->predict(event.segment);
  }
  const auto lower = std::prev(upper);
  const double span = upper->target - lower->target;
  const double w = (t_flex - lower->target) / span;
  return (1.0 - w) * lower->predict(event.segment) +
         w * upper->predict(event.segment);
}

nlohmann::ordered_json MethodUnderTest::dump() const {
  nlohmann::ordered_json j;
  j["kind"] = method_kind_name(kind_);
  if (base_) {
    j["snapshot_day"] = base_->snapshot_day();
    j["short_head"] = base_->short_head().values();
    j["cond_head"] = base_->cond_head().values();
    if (method_uses_alpha(kind_)) {
      nlohmann::ordered_json a;
      a["family"] = alpha_family_name(design_.family);
      a["beta"] = design_.beta;
      if (!design_.beta_by_segment.empty()) {
        nlohmann::ordered_json overrides;
        for (const auto& [segment, beta] : design_.beta_by_segment) {
          overrides[std::to_string(segment)] = beta;
        }
        a["beta_by_segment"] = std::move(overrides);
      }
      j["alpha"] = std::move(a);
    }
    return j;
  }
  nlohmann::ordered_json targets = nlohmann::ordered_json::array();
  for (const TargetModel& model : targets_) {
    nlohmann::ordered_json t;
    t["target"] = model.target;
    if (!model.direct_values.empty()) {
      t["values"] = model.direct_values;
    } else {
      t["short"] = model.short_values;
      if (model.cond_values) t["cond"] = *model.cond_values;
    }
    targets.push_back(std::move(t));
  }
  j["targets"] = std::move(targets);
  return j;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

std::vector<MethodUnderTest::TargetModel> train_seven_head(
    std::span<const Event> events, int num_segments, double snapshot_day,
    const WindowSpec& windows, const TrainParams& params);

}  // namespace

MethodUnderTest train_method(MethodKind kind, std::span<const Event> events,
                             int num_segments, double snapshot_day,
                             const WindowSpec& windows,
                             const TrainParams& params,
                             const AlphaDesign& design) {
  if (method_uses_base(kind)) {
    auto base = std::make_shared<const MtmlBase>(
        train_mtml_base(events, num_segments, snapshot_day, windows, params));
    return MethodUnderTest::from_base(kind, std::move(base), design);
  }

  MethodUnderTest method;
  method.kind_ = kind;
  const double w = params.train_window_days;

  if (kind == MethodKind::kSevenHead) {
    method.targets_ =
        train_seven_head(events, num_segments, snapshot_day, windows, params);
    return method;
  }

  for (double target : build_targets(windows)) {
    MethodUnderTest::TargetModel model;
    model.target = target;
    if (kind == MethodKind::kNdub) {
      // Oracle labels at the snapshot itself: the theoretical upper bound
      // that waits for no maturation.
      const auto slice = slice_days(events, snapshot_day - w, snapshot_day);
      if (slice.empty()) {
        throw_insufficient("NDUB head (target " + std::to_string(target) + ")",
                           snapshot_day, snapshot_day);
      }
      std::vector<LabeledExample> rows;
      rows.reserve(slice.size());
      for (const Event& e : slice) {
        rows.push_back({e.event_id, e.segment, window_label(e, target), false});
      }
      model.direct_values =
          head_from_rows(rows, num_segments, params.smoothing, kClipFloor)
              .values();
    } else {  // DEDICATED: both heads wait out the full target window.
      const double cutoff = snapshot_day - target;
      const auto slice = slice_days(events, cutoff - w, cutoff);
      if (slice.empty()) {
        throw_insufficient(
            "dedicated model (target " + std::to_string(target) + ")",
            snapshot_day, cutoff);
      }
      std::vector<LabeledExample> short_rows;
      short_rows.reserve(slice.size());
      for (const Event& e : slice) {
        short_rows.push_back(
            maturation_label(e, windows.t_short(), snapshot_day));
      }
      model.short_values =
          head_from_rows(short_rows, num_segments, params.smoothing, kClipFloor)
              .values();
      if (target > windows.t_short()) {
        std::vector<LabeledExample> cond_rows;
        for (const Event& e : slice) {
          if (maturation_label(e, windows.t_short(), snapshot_day)
                  .window_label) {
            continue;
          }
          cond_rows.push_back(maturation_label(e, target, snapshot_day));
        }
        model.cond_values =
            head_from_rows(cond_rows, num_segments, params.smoothing,
                           kClipFloor)
                .values();
      }
    }
    method.targets_.push_back(std::move(model));
  }
  return method;
}

namespace {

std::vector<MethodUnderTest::TargetModel> train_seven_head(
    std::span<const Event> events, int num_segments, double snapshot_day,
    const WindowSpec& windows, const TrainParams& params) {
  const double gamma = params.pool_gamma;
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError("seven-head pool gamma must be in [0, 1]");
  }
  // Every head shares one cutoff: the multi-head model cannot ship until its
  // longest label has matured.
  const double cutoff = snapshot_day - windows.t_long();
  const auto slice =
      slice_days(events, cutoff - params.train_window_days, cutoff);
  if (slice.empty()) {
    throw_insufficient("seven-head slice", snapshot_day, cutoff);
  }

  const std::vector<double> targets = build_targets(windows);
  std::vector<std::vector<double>> values;
  values.reserve(targets.size());
  for (double target : targets) {
    std::vector<LabeledExample> rows;
    rows.reserve(slice.size());
    for (const Event& e : slice) {
      rows.push_back(maturation_label(e, target, snapshot_day));
    }
    values.push_back(
        head_from_rows(rows, num_segments, params.smoothing, kClipFloor)
            .values());
  }

  // Cross-head shrinkage emulating task interference among jointly trained
  // heads: head_f <- (1-gamma) head_f + gamma * mean over heads.
  std::vector<double> mean(static_cast<std::size_t>(num_segments), 0.0);
  for (const auto& head : values) {
    for (std::size_t s = 0; s < mean.size(); ++s) mean[s] += head[s];
  }
  for (double& m : mean) m /= static_cast<double>(values.size());

  std::vector<MethodUnderTest::TargetModel> models;
  models.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    MethodUnderTest::TargetModel model;
    model.target = targets[i];
    model.direct_values.resize(mean.size());
    for (std::size_t s = 0; s < mean.size(); ++s) {
      model.direct_values[s] =
          clip_probability((1.0 - gamma) * values[i][s] + gamma * mean[s]);
    }
    models.push_back(std::move(model));
  }
  return models;
}

}  // namespace

std::string dump_method(const MethodUnderTest& method) {
  return method.dump().dump(2) + "\n";
}

}  // namespace fow

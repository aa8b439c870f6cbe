#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fow/core_types.hpp"
#include "fow/interpolation.hpp"

namespace fow {

// ---------------------------------------------------------------------------
// BucketEstimator: per-segment positive-rate estimator with additive
// smoothing toward a global prior. Stands in for the production models,
// which the method under study treats as black boxes anyway; the simplest
// consistent estimator isolates the interpolation layer's contribution.
//
//   predict(s) = (positives(s) + a * p0) / (totals(s) + a), clipped;
//   segments with zero totals return p0.
// ---------------------------------------------------------------------------
class BucketEstimator {
 public:
  BucketEstimator(int num_segments, double smoothing, double prior);

  void add(int segment, bool positive);

  double predict(int segment) const;

  int num_segments() const { return static_cast<int>(positives_.size()); }
  double smoothing() const { return smoothing_; }
  double prior() const { return prior_; }
  std::int64_t positives(int segment) const;
  std::int64_t totals(int segment) const;

  // Clipped per-segment predictions, materialized.
  std::vector<double> values() const;

 private:
  void check_segment(int segment) const;

  std::vector<std::int64_t> positives_;
  std::vector<std::int64_t> totals_;
  double smoothing_;
  double prior_;
};

// Trains on rows as given: `window_label` is the positive; callers are
// responsible for maturation filtering (censored rows are counted like any
// other, so don't pass them unless that is intended).
BucketEstimator train_bucket(std::span<const LabeledExample> examples,
                             int num_segments, double smoothing, double prior);

// ---------------------------------------------------------------------------
// MtmlBase: the consolidated two-head model.
//   short head: P(tau <= t_short), trained on events matured for t_short
//               (event.day <= snapshot - t_short);
//   cond head:  P(tau <= t_long | tau > t_short), trained on events matured
//               for t_long, restricted to non-short-converters.
// Each head trains on the most recent `train_window_days` of its matured
// events; its smoothing prior is that slice's own global positive rate.
// ---------------------------------------------------------------------------

struct TrainParams {
  double train_window_days = 7.0;
  double smoothing = 25.0;
  // SEVEN_HEAD only: shrinkage of each head toward the cross-head mean.
  double pool_gamma = 0.3;
};

class MtmlBase {
 public:
  MtmlBase(BucketEstimator short_head, BucketEstimator cond_head,
           double snapshot_day);

  double predict_short(const Event& event) const {
    return short_head_.predict(event.segment);
  }
  double predict_cond(const Event& event) const {
    return cond_head_.predict(event.segment);
  }
  PredictionPair pair(const Event& event) const {
    return {predict_short(event), predict_cond(event)};
  }

  const BucketEstimator& short_head() const { return short_head_; }
  const BucketEstimator& cond_head() const { return cond_head_; }
  double snapshot_day() const { return snapshot_day_; }

 private:
  BucketEstimator short_head_;
  BucketEstimator cond_head_;
  double snapshot_day_;
};

// Throws DataError("insufficient matured data ...") when either head's
// matured slice is empty (including snapshot_day < t_long). Events must be
// sorted by day ascending.
MtmlBase train_mtml_base(std::span<const Event> events, int num_segments,
                         double snapshot_day, const WindowSpec& windows,
                         const TrainParams& params);

// ---------------------------------------------------------------------------
// The eight method families compared in the experiments.
// ---------------------------------------------------------------------------

enum class MethodKind {
  kInterpLinear,
  kInterpRational,
  kInterpExp,
  kP1d,
  kP7d,
  kSevenHead,
  kDedicated,
  kNdub,
};

// Canonical config/report names: INTERP_LINEAR, INTERP_RATIONAL, INTERP_EXP,
// P1D, P7D, SEVEN_HEAD, DEDICATED, NDUB.
std::string method_kind_name(MethodKind kind);
MethodKind parse_method_kind(const std::string& name);  // throws ConfigError
bool method_uses_alpha(MethodKind kind);

class MethodUnderTest {
 public:
  // INTERP_*/P1D/P7D share one consolidated base per snapshot; `design` is
  // required for the INTERP_* kinds and ignored otherwise.
  static MethodUnderTest from_base(MethodKind kind,
                                   std::shared_ptr<const MtmlBase> base,
                                   AlphaDesign design = {});

  MethodKind kind() const { return kind_; }

  // Probability for the event at windows.t_flex(). Per-target methods
  // (SEVEN_HEAD, DEDICATED, NDUB) predict at their trained integer targets
  // and interpolate linearly between the two adjacent targets for
  // fractional horizons.
  double predict(const Event& event, const WindowSpec& windows) const;

  // Per-segment head values, for golden-file dumps and inspection.
  nlohmann::ordered_json dump() const;

  struct TargetModel {
    double target = 0.0;                 // horizon in days
    std::vector<double> short_values;    // P(tau <= t_short) per segment
    std::optional<std::vector<double>> cond_values;  // conditional head
    std::vector<double> direct_values;   // NDUB/SEVEN_HEAD: P(tau <= target)

    double predict(int segment) const;
  };

 private:
  friend MethodUnderTest train_method(MethodKind, std::span<const Event>, int,
                                      double, const WindowSpec&,
                                      const TrainParams&, const AlphaDesign&);

  MethodUnderTest() = default;

  double predict_targets(const Event& event, double t_flex) const;

  MethodKind kind_ = MethodKind::kP1d;
  std::shared_ptr<const MtmlBase> base_;
  AlphaDesign design_;
  std::vector<TargetModel> targets_;
};

// Trains one method at the given snapshot. Cutoffs follow the method:
//   INTERP_*/P1D/P7D   one base (snapshot - t_short / snapshot - t_long);
//   SEVEN_HEAD         all per-day heads at cutoff snapshot - t_long, then
//                      pooled: head_f <- (1-gamma) head_f + gamma mean(heads);
//   DEDICATED          per-target model, both heads at cutoff snapshot - t;
//   NDUB               per-target head at cutoff snapshot, oracle labels
//                      (uses future knowledge; simulation-only yardstick).
// Throws DataError("insufficient matured data ...") on an empty slice.
MethodUnderTest train_method(MethodKind kind, std::span<const Event> events,
                             int num_segments, double snapshot_day,
                             const WindowSpec& windows,
                             const TrainParams& params,
                             const AlphaDesign& design = {});

// Pretty, key-stable JSON for golden-file comparisons.
std::string dump_method(const MethodUnderTest& method);

}  // namespace fow

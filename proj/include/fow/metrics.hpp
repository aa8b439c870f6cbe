#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>

namespace fow {

// ---------------------------------------------------------------------------
// Neumaier-compensated summation. Error stays O(1) ulp regardless of length,
// and two partial sums merge deterministically, so chunked (parallel)
// accumulation reproduces the same value for a fixed chunking.
// ---------------------------------------------------------------------------
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  void merge(const CompensatedSum& other) {
    add(other.sum_);
    comp_ += other.comp_;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// Scoring. Labels are 0/1; predictions are probabilities.
// ---------------------------------------------------------------------------

struct MetricReport {
  double ne = 0.0;
  double calibration = 0.0;
  std::size_t n = 0;
  double label_rate = 0.0;
};

// Cross-entropy normalized by the entropy of the empirical label rate
// (natural log). Predictions are clipped to [1e-6, 1 - 1e-6] before the log
// terms. Lower is better; the constant predictor at the label rate scores 1.
// Throws DataError when inputs are empty, sizes mismatch, or the labels are
// degenerate (all 0 or all 1, where the normalizer vanishes).
double normalized_entropy(std::span<const double> preds,
                          std::span<const std::uint8_t> labels);

// Sum of raw (unclipped) predictions over sum of labels. Exactly linear in
// the predictions: scaling every prediction scales the score. Throws
// DataError on empty/mismatched input or when no positives exist.
double calibration_score(std::span<const double> preds,
                         std::span<const std::uint8_t> labels);

// Relative NE improvement of a method over a baseline, in percent:
// (baseline - method) / baseline * 100. Positive means the method is better.
double ne_delta_percent(double method_ne, double baseline_ne);

// Both scores in one pass.
MetricReport evaluate_predictions(std::span<const double> preds,
                                  std::span<const std::uint8_t> labels);

}  // namespace fow

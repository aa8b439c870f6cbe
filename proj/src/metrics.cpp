#include "fow/metrics.hpp"

#include <string>

#include "fow/core_types.hpp"
#include "fow/errors.hpp"

namespace fow {

namespace {

void check_sizes(std::span<const double> preds,
                 std::span<const std::uint8_t> labels) {
  if (preds.empty()) {
    throw DataError("metrics need at least one example");
  }
  if (preds.size() != labels.size()) {
    throw DataError("predictions/labels size mismatch: " +
                    std::to_string(preds.size()) + " vs " +
                    std::to_string(labels.size()));
  }
}

std::size_t count_positives(std::span<const std::uint8_t> labels) {
  std::size_t positives = 0;
  for (std::uint8_t y : labels) positives += y ? 1 : 0;
  return positives;
}

double cross_entropy_sum(std::span<const double> preds,
                         std::span<const std::uint8_t> labels) {
  CompensatedSum ce;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double p = clip_probability(preds[i]);
    ce.add(labels[i] ? -std::log(p) : -std::log1p(-p));
  }
  return ce.value();
}

}  // namespace

double normalized_entropy(std::span<const double> preds,
                          std::span<const std::uint8_t> labels) {
  check_sizes(preds, labels);
  const std::size_t n = preds.size();
  const std::size_t positives = count_positives(labels);
  if (positives == 0 || positives == n) {
    throw DataError("degenerate labels: all " +
                    std::string(positives == 0 ? "negative" : "positive"));
  }
  const double rate = static_cast<double>(positives) / static_cast<double>(n);
  const double base_entropy =
      -(rate * std::log(rate) + (1.0 - rate) * std::log1p(-rate));
  const double ce = cross_entropy_sum(preds, labels) / static_cast<double>(n);
  return ce / base_entropy;
}

double calibration_score(std::span<const double> preds,
                         std::span<const std::uint8_t> labels) {
  check_sizes(preds, labels);
  const std::size_t positives = count_positives(labels);
  if (positives == 0) {
    throw DataError("calibration needs at least one positive label");
  }
  CompensatedSum pred_sum;
  for (double p : preds) pred_sum.add(p);
  return pred_sum.value() / static_cast<double>(positives);
}

double ne_delta_percent(double method_ne, double baseline_ne) {
  if (!(baseline_ne > 0.0)) {
    throw DataError("baseline NE must be positive, got " +
                    std::to_string(baseline_ne));
  }
  return (baseline_ne - method_ne) / baseline_ne * 100.0;
}

MetricReport evaluate_predictions(std::span<const double> preds,
                                  std::span<const std::uint8_t> labels) {
  MetricReport report;
  report.n = preds.size();
  report.ne = normalized_entropy(preds, labels);
  report.calibration = calibration_score(preds, labels);
  report.label_rate = static_cast<double>(count_positives(labels)) /
                      static_cast<double>(preds.size());
  return report;
}

}  // namespace fow

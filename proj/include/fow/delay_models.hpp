#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fow/rng.hpp"

namespace fow {

// ---------------------------------------------------------------------------
// Conversion-delay laws. Every law is "zero-inflated": with probability
// 1 - p_conv the event never converts, otherwise the delay is drawn from the
// family's positive-delay distribution. cdf(t) below is therefore the
// *unconditional* P(converted and delay <= t), with cdf(inf) = p_conv.
// ---------------------------------------------------------------------------

enum class DelayFamily {
  kZeroInflatedExponential,
  kZeroInflatedWeibull,
  kEmpiricalHistogram,
};

class DelayDistribution {
 public:
  static DelayDistribution zero_inflated_exponential(double p_conv,
                                                     double rate);
  static DelayDistribution zero_inflated_weibull(double p_conv, double shape,
                                                 double scale);
  // Histogram over delay bins [edges[i], edges[i+1]); masses are
  // unconditional (they sum to p_conv); delays are uniform within a bin.
  static DelayDistribution empirical_histogram(std::vector<double> edges,
                                               std::vector<double> masses);

  DelayFamily family() const { return family_; }
  double p_conv() const { return p_conv_; }
  double rate() const { return rate_; }
  double shape() const { return shape_; }
  double scale() const { return scale_; }
  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& masses() const { return masses_; }

  // Unconditional P(delay <= t); 0 for t <= 0, -> p_conv as t -> inf.
  double cdf(double t) const;

  // Copy with the conversion probability rescaled to `p` (delay shape kept).
  [[nodiscard]] DelayDistribution with_p_conv(double p) const;

  // One draw: nullopt when the event does not convert.
  std::optional<double> sample_delay(RngStream& rng) const;

  // Delay draw given that the event converts (the positive-delay law alone).
  double sample_conditional_delay(RngStream& rng) const;

 private:
  DelayDistribution() = default;

  DelayFamily family_ = DelayFamily::kZeroInflatedExponential;
  double p_conv_ = 0.0;
  double rate_ = 0.0;
  double shape_ = 0.0;
  double scale_ = 0.0;
  std::vector<double> edges_;
  std::vector<double> masses_;
};

// ---------------------------------------------------------------------------
// Endpoint fit: the zero-inflated exponential whose unconditional CDF passes
// through (t_short, p_short) and (t_long, p_long). Solved by bisection on
// the rate; throws InfeasibleError("no feasible rate ...") when the endpoint
// ratio is outside what an exponential can produce.
// ---------------------------------------------------------------------------
struct EndpointFit {
  double p_conv = 0.0;
  double rate = 0.0;
};

EndpointFit fit_rate_to_endpoints(double p_short, double p_long,
                                  double t_short, double t_long);

std::string family_name(DelayFamily family);

}  // namespace fow

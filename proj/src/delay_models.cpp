#include "fow/delay_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fow/errors.hpp"

namespace fow {

namespace {

// Guards against a measure-zero draw landing exactly on a bin edge / at the
// distribution origin; delays must be strictly positive.
constexpr double kTinyDelay = 1e-12;

void check_p_conv(double p_conv) {
  if (!(p_conv >= 0.0 && p_conv <= 1.0)) {
    throw ConfigError("p_conv must be in [0, 1], got " +
                      std::to_string(p_conv));
  }
}

}  // namespace

DelayDistribution DelayDistribution::zero_inflated_exponential(double p_conv,
                                                               double rate) {
  check_p_conv(p_conv);
  if (!(rate > 0.0)) {
    throw ConfigError("exponential rate must be positive, got " +
                      std::to_string(rate));
  }
  DelayDistribution d;
  d.family_ = DelayFamily::kZeroInflatedExponential;
  d.p_conv_ = p_conv;
  d.rate_ = rate;
  return d;
}

DelayDistribution DelayDistribution::zero_inflated_weibull(double p_conv,
                                                           double shape,
                                                           double scale) {
  check_p_conv(p_conv);
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw ConfigError("weibull shape and scale must be positive");
  }
  DelayDistribution d;
  d.family_ = DelayFamily::kZeroInflatedWeibull;
  d.p_conv_ = p_conv;
  d.shape_ = shape;
  d.scale_ = scale;
  return d;
}

DelayDistribution DelayDistribution::empirical_histogram(
    std::vector<double> edges, std::vector<double> masses) {
  if (edges.size() < 2 || masses.size() != edges.size() - 1) {
    throw ConfigError("histogram needs n+1 edges for n masses");
  }
  if (edges.front() < 0.0 || !std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ConfigError("histogram edges must be non-negative and strictly increasing");
  }
  for (double m : masses) {
    if (!(m >= 0.0)) throw ConfigError("histogram masses must be non-negative");
  }
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  check_p_conv(total);
  DelayDistribution d;
  d.family_ = DelayFamily::kEmpiricalHistogram;
  d.p_conv_ = total;
  d.edges_ = std::move(edges);
  d.masses_ = std::move(masses);
  return d;
}

double DelayDistribution::cdf(double t) const {
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case DelayFamily::kZeroInflatedExponential:
      return p_conv_ * -std::expm1(-rate_ * t);
    case DelayFamily::kZeroInflatedWeibull:
      return p_conv_ * -std::expm1(-std::pow(t / scale_, shape_));
    case DelayFamily::kEmpiricalHistogram: {
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
        const double lo = edges_[i];
        const double hi = edges_[i + 1];
        if (t >= hi) {
          acc += masses_[i];
        } else if (t > lo) {
          acc += masses_[i] * (t - lo) / (hi - lo);
          break;
        } else {
          break;
        }
      }
      return acc;
    }
  }
  return 0.0;
}

DelayDistribution DelayDistribution::with_p_conv(double p) const {
  check_p_conv(p);
  DelayDistribution d = *this;
  d.p_conv_ = p;
  if (family_ == DelayFamily::kEmpiricalHistogram) {
    const double old = p_conv_;
    for (double& m : d.masses_) {
      m = old > 0.0 ? m * (p / old) : 0.0;
    }
  }
  return d;
}

std::optional<double> DelayDistribution::sample_delay(RngStream& rng) const {
  if (!rng.bernoulli(p_conv_)) return std::nullopt;
  return sample_conditional_delay(rng);
}

double DelayDistribution::sample_conditional_delay(RngStream& rng) const {
  double delay = 0.0;
  switch (family_) {
    case DelayFamily::kZeroInflatedExponential:
      delay = rng.exponential(rate_);
      break;
    case DelayFamily::kZeroInflatedWeibull:
      delay = rng.weibull(shape_, scale_);
      break;
    case DelayFamily::kEmpiricalHistogram: {
      // One uniform picks both the bin (by conditional mass) and the
      // position within it.
      const double u = rng.next_double() * p_conv_;
      double acc = 0.0;
      delay = edges_.back();
      for (std::size_t i = 0; i < masses_.size(); ++i) {
        if (u < acc + masses_[i] || i + 1 == masses_.size()) {
          const double frac = masses_[i] > 0.0 ? (u - acc) / masses_[i] : 0.0;
          delay = edges_[i] + std::clamp(frac, 0.0, 1.0) * (edges_[i + 1] - edges_[i]);
          break;
        }
        acc += masses_[i];
      }
      break;
    }
  }
  return std::max(delay, kTinyDelay);
}

EndpointFit fit_rate_to_endpoints(double p_short, double p_long,
                                  double t_short, double t_long) {
  if (!(0.0 < t_short && t_short < t_long)) {
    throw InfeasibleError("endpoint fit needs 0 < t_short < t_long");
  }
  if (!(0.0 < p_short && p_short <= p_long && p_long <= 1.0)) {
    throw InfeasibleError("endpoint fit needs 0 < p_short <= p_long <= 1");
  }
  const double target = p_short / p_long;
  // ratio(rate) = F(t_short)/F(t_long) rises from t_short/t_long (rate -> 0)
  // to 1 (rate -> inf); it is strictly increasing, so bisection suffices.
  const auto ratio = [&](double rate) {
    return std::expm1(-rate * t_short) / std::expm1(-rate * t_long);
  };
  double lo = 1e-9;
  double hi = 1e6;
  if (!(ratio(lo) <= target && target <= ratio(hi))) {
    throw InfeasibleError("no feasible rate for endpoints p_short=" +
                          std::to_string(p_short) +
                          " p_long=" + std::to_string(p_long));
  }
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (ratio(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double rate = 0.5 * (lo + hi);
  EndpointFit fit;
  fit.rate = rate;
  fit.p_conv = p_long / -std::expm1(-rate * t_long);
  if (fit.p_conv > 1.0 + 1e-9) {
    throw InfeasibleError("no feasible rate: implied p_conv exceeds 1");
  }
  fit.p_conv = std::min(fit.p_conv, 1.0);
  return fit;
}

std::string family_name(DelayFamily family) {
  switch (family) {
    case DelayFamily::kZeroInflatedExponential:
      return "zero_inflated_exponential";
    case DelayFamily::kZeroInflatedWeibull:
      return "zero_inflated_weibull";
    case DelayFamily::kEmpiricalHistogram:
      return "empirical_histogram";
  }
  return "unknown";
}

}  // namespace fow

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fow/delay_models.hpp"
#include "fow/errors.hpp"
#include "fow/rng.hpp"

using fow::ConfigError;
using fow::DelayDistribution;
using fow::DelayFamily;
using fow::EndpointFit;
using fow::fit_rate_to_endpoints;
using fow::InfeasibleError;
using fow::RngStream;

namespace {

// One-sample Kolmogorov-Smirnov distance between draws and a conditional CDF.
double ks_distance(std::vector<double> samples,
                   const DelayDistribution& dist) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double model = dist.cdf(samples[i]) / dist.p_conv();
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    worst = std::max(worst, std::max(std::abs(model - lo),
                                     std::abs(model - hi)));
  }
  return worst;
}

std::vector<double> draw_conditional(const DelayDistribution& dist, int n,
                                     std::uint64_t seed) {
  RngStream rng = RngStream::seeded(seed);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(dist.sample_conditional_delay(rng));
  return out;
}

}  // namespace

TEST_SUITE("delay_models") {

TEST_CASE("exponential cdf has closed form") {
  DelayDistribution d = DelayDistribution::zero_inflated_exponential(0.2, 1.5);
  CHECK(d.cdf(0.0) == 0.0);
  CHECK(d.cdf(-1.0) == 0.0);
  CHECK(d.cdf(1.0) == doctest::Approx(0.2 * -std::expm1(-1.5)).epsilon(1e-15));
  CHECK(d.cdf(1e9) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("weibull with shape 1 is the exponential") {
  DelayDistribution w =
      DelayDistribution::zero_inflated_weibull(0.3, 1.0, 2.0);
  DelayDistribution e =
      DelayDistribution::zero_inflated_exponential(0.3, 0.5);
  for (double t : {0.1, 0.5, 1.0, 3.0, 10.0}) {
    CHECK(w.cdf(t) == doctest::Approx(e.cdf(t)).epsilon(1e-12));
  }
}

TEST_CASE("cdf is monotone nondecreasing for every family") {
  std::vector<DelayDistribution> dists = {
      DelayDistribution::zero_inflated_exponential(0.18, 2.0),
      DelayDistribution::zero_inflated_weibull(0.25, 0.35, 1.1),
      DelayDistribution::empirical_histogram({0.0, 0.5, 1.0, 3.0, 7.0},
                                             {0.05, 0.04, 0.03, 0.02}),
  };
  for (const DelayDistribution& d : dists) {
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double t = i * 0.05;
      const double cur = d.cdf(t);
      CHECK(cur >= prev);
      prev = cur;
    }
    CHECK(prev <= d.p_conv() + 1e-12);
  }
}

TEST_CASE("histogram cdf interpolates linearly inside bins") {
  DelayDistribution h = DelayDistribution::empirical_histogram(
      {0.0, 1.0, 3.0}, {0.10, 0.06});
  CHECK(h.cdf(0.5) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(h.cdf(1.0) == doctest::Approx(0.10).epsilon(1e-15));
  CHECK(h.cdf(2.0) == doctest::Approx(0.13).epsilon(1e-15));
  CHECK(h.cdf(3.0) == doctest::Approx(0.16).epsilon(1e-15));
  CHECK(h.cdf(99.0) == doctest::Approx(0.16).epsilon(1e-15));
  CHECK(h.p_conv() == doctest::Approx(0.16).epsilon(1e-15));
}

TEST_CASE("with_p_conv rescales mass but keeps the delay shape") {
  DelayDistribution d = DelayDistribution::zero_inflated_weibull(0.2, 0.4, 1.0);
  DelayDistribution scaled = d.with_p_conv(0.1);
  CHECK(scaled.p_conv() == doctest::Approx(0.1));
  for (double t : {0.5, 1.0, 4.0}) {
    CHECK(scaled.cdf(t) / scaled.p_conv() ==
          doctest::Approx(d.cdf(t) / d.p_conv()).epsilon(1e-12));
  }

  DelayDistribution h = DelayDistribution::empirical_histogram(
      {0.0, 1.0, 2.0}, {0.12, 0.04});
  DelayDistribution hs = h.with_p_conv(0.08);
  CHECK(hs.p_conv() == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(hs.cdf(1.0) / hs.p_conv() ==
        doctest::Approx(h.cdf(1.0) / h.p_conv()).epsilon(1e-12));
}

TEST_CASE("factories validate their parameters") {
  CHECK_THROWS_AS(DelayDistribution::zero_inflated_exponential(-0.1, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(DelayDistribution::zero_inflated_exponential(1.5, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(DelayDistribution::zero_inflated_exponential(0.2, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(DelayDistribution::zero_inflated_weibull(0.2, -1.0, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(DelayDistribution::zero_inflated_weibull(0.2, 1.0, 0.0),
                  ConfigError);
  // Edges must be strictly increasing and start at >= 0.
  CHECK_THROWS_AS(
      DelayDistribution::empirical_histogram({0.0, 1.0, 1.0}, {0.1, 0.1}),
      ConfigError);
  CHECK_THROWS_AS(
      DelayDistribution::empirical_histogram({-1.0, 1.0}, {0.1}),
      ConfigError);
  // One mass per bin.
  CHECK_THROWS_AS(
      DelayDistribution::empirical_histogram({0.0, 1.0, 2.0}, {0.1}),
      ConfigError);
  // Negative or super-unit total mass.
  CHECK_THROWS_AS(
      DelayDistribution::empirical_histogram({0.0, 1.0}, {-0.1}),
      ConfigError);
  CHECK_THROWS_AS(
      DelayDistribution::empirical_histogram({0.0, 1.0, 2.0}, {0.6, 0.6}),
      ConfigError);
}

TEST_CASE("sample_delay matches p_conv and the conditional law") {
  DelayDistribution d = DelayDistribution::zero_inflated_exponential(0.18, 2.0);
  RngStream rng = RngStream::seeded(11);
  const int n = 200000;
  int converted = 0;
  for (int i = 0; i < n; ++i) {
    if (d.sample_delay(rng)) ++converted;
  }
  const double rate = static_cast<double>(converted) / n;
  CHECK(rate == doctest::Approx(0.18).epsilon(0.02));
}

TEST_CASE("conditional draws pass a KS check at 1e5 samples") {
  std::vector<DelayDistribution> dists = {
      DelayDistribution::zero_inflated_exponential(0.18, 2.0),
      DelayDistribution::zero_inflated_weibull(0.25, 0.35, 1.1),
      DelayDistribution::empirical_histogram(
          {0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0},
          {0.0942, 0.0628, 0.0092, 0.00345, 0.00299, 0.00276, 0.0023,
           0.0023}),
  };
  std::uint64_t seed = 101;
  for (const DelayDistribution& d : dists) {
    const double ks = ks_distance(draw_conditional(d, 100000, seed++), d);
    CHECK(ks <= 0.01);
  }
}

TEST_CASE("conditional draws are strictly positive") {
  DelayDistribution w =
      DelayDistribution::zero_inflated_weibull(0.25, 0.30, 0.7);
  RngStream rng = RngStream::seeded(3);
  for (int i = 0; i < 10000; ++i) {
    CHECK(w.sample_conditional_delay(rng) > 0.0);
  }
}

TEST_CASE("endpoint fit reproduces pinned values") {
  EndpointFit fit = fit_rate_to_endpoints(0.157, 0.18, 1.0, 7.0);
  CHECK(fit.rate == doctest::Approx(2.057458838579228).epsilon(1e-12));
  CHECK(fit.p_conv == doctest::Approx(0.18000010010864986).epsilon(1e-12));

  // The fitted law passes through both endpoints.
  DelayDistribution d =
      DelayDistribution::zero_inflated_exponential(fit.p_conv, fit.rate);
  CHECK(d.cdf(1.0) == doctest::Approx(0.157).epsilon(1e-9));
  CHECK(d.cdf(7.0) == doctest::Approx(0.18).epsilon(1e-9));
}

TEST_CASE("endpoint fit rejects infeasible endpoint pairs") {
  // p_short > p_long: the CDF cannot decrease.
  CHECK_THROWS_AS(fit_rate_to_endpoints(0.2, 0.1, 1.0, 7.0), InfeasibleError);
  // Ratio below t_short/t_long is slower than any exponential start.
  CHECK_THROWS_AS(fit_rate_to_endpoints(0.02, 0.18, 1.0, 7.0),
                  InfeasibleError);
  CHECK_THROWS_AS(fit_rate_to_endpoints(0.0, 0.18, 1.0, 7.0),
                  InfeasibleError);
}

TEST_CASE("family_name names each family") {
  CHECK(fow::family_name(DelayFamily::kZeroInflatedExponential) ==
        "zero_inflated_exponential");
  CHECK(fow::family_name(DelayFamily::kZeroInflatedWeibull) ==
        "zero_inflated_weibull");
  CHECK(fow::family_name(DelayFamily::kEmpiricalHistogram) ==
        "empirical_histogram");
}

}  // TEST_SUITE("delay_models")

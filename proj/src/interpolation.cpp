#include "fow/interpolation.hpp"

#include <cmath>
#include <stdexcept>

#include "fow/errors.hpp"

namespace fow {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(name) +
                                " must be a probability, got " +
                                std::to_string(p));
  }
}

void check_beta_value(AlphaFamily family, double beta,
                      const WindowSpec& windows) {
  bool ok = false;
  std::string range;
  switch (family) {
    case AlphaFamily::kLinear: {
      const double cap = 1.0 / (windows.t_long() - windows.t_short());
      ok = beta >= 0.0 && beta <= cap;
      range = "[0, " + std::to_string(cap) + "]";
      break;
    }
    case AlphaFamily::kRational:
      ok = beta >= 0.0 && beta < 1.0;
      range = "[0, 1)";
      break;
    case AlphaFamily::kExponential:
      ok = beta >= 0.0;
      range = "[0, inf)";
      break;
  }
  if (!ok) {
    throw InfeasibleError("beta out of feasible range: " +
                          alpha_family_name(family) + " needs beta in " +
                          range + ", got " + std::to_string(beta));
  }
}

}  // namespace

double beta_for_segment(const AlphaDesign& design, int segment) {
  const auto it = design.beta_by_segment.find(segment);
  return it == design.beta_by_segment.end() ? design.beta : it->second;
}

void check_feasible(const AlphaDesign& design, const WindowSpec& windows) {
  check_beta_value(design.family, design.beta, windows);
  for (const auto& [segment, beta] : design.beta_by_segment) {
    check_beta_value(design.family, beta, windows);
    (void)segment;
  }
}

double alpha(const AlphaDesign& design, const WindowSpec& windows,
             int segment) {
  const double beta = beta_for_segment(design, segment);
  check_beta_value(design.family, beta, windows);
  const double ts = windows.t_short();
  const double tl = windows.t_long();
  const double tf = windows.t_flex();
  switch (design.family) {
    case AlphaFamily::kLinear:
      return beta * (tf - tl) + 1.0;
    case AlphaFamily::kRational:
      return (tf - ts) / (beta * (tf - tl) + tl - ts);
    case AlphaFamily::kExponential:
      if (beta < kExponentialBetaFloor) {
        return (tf - ts) / (tl - ts);
      }
      return std::expm1(-beta * (tf - ts)) / std::expm1(-beta * (tl - ts));
  }
  throw std::logic_error("unreachable alpha family");
}

double compose_unconditional(double p_short, double p_long, double a) {
  check_probability(p_short, "p_short");
  check_probability(p_long, "p_long");
  check_probability(a, "alpha");
  return (1.0 - a) * p_short + a * p_long;
}

double compose_conditional(const PredictionPair& pair, double a) {
  check_probability(pair.p_short, "p_short");
  check_probability(pair.p_cond, "p_cond");
  check_probability(a, "alpha");
  return pair.p_short + (1.0 - pair.p_short) * a * pair.p_cond;
}

double recover_long_window(const PredictionPair& pair) {
  check_probability(pair.p_short, "p_short");
  check_probability(pair.p_cond, "p_cond");
  return pair.p_short + (1.0 - pair.p_short) * pair.p_cond;
}

double estimate_unconditional(double p_short, double p_long,
                              const AlphaDesign& design,
                              const WindowSpec& windows, int segment) {
  if (windows.flex_at_short()) return p_short;
  if (windows.flex_at_long()) return p_long;
  return compose_unconditional(p_short, p_long, alpha(design, windows, segment));
}

double estimate_conditional(const PredictionPair& pair,
                            const AlphaDesign& design,
                            const WindowSpec& windows, int segment) {
  if (windows.flex_at_short()) return pair.p_short;
  if (windows.flex_at_long()) return recover_long_window(pair);
  return compose_conditional(pair, alpha(design, windows, segment));
}

std::string alpha_family_name(AlphaFamily family) {
  switch (family) {
    case AlphaFamily::kLinear:
      return "linear";
    case AlphaFamily::kRational:
      return "rational";
    case AlphaFamily::kExponential:
      return "exponential";
  }
  return "unknown";
}

}  // namespace fow

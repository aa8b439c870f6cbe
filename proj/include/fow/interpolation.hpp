#pragma once

#include <map>
#include <string>

#include "fow/core_types.hpp"

namespace fow {

// ---------------------------------------------------------------------------
// Interpolation between the short- and long-window conversion estimates.
//
// A design maps the serving window t_flex to a weight alpha in [0, 1]:
//   linear       alpha = beta * (t_flex - t_long) + 1
//   rational     alpha = (t_flex - t_short) / (beta * (t_flex - t_long)
//                                              + t_long - t_short)
//   exponential  alpha = expm1(-beta (t_flex - t_short))
//                        / expm1(-beta (t_long - t_short))
// Every design hits alpha(t_long) = 1; linear pays for its simplicity by
// generally not reaching 0 at t_short. beta can be personalized per segment.
// ---------------------------------------------------------------------------

enum class AlphaFamily { kLinear, kRational, kExponential };

struct AlphaDesign {
  AlphaFamily family = AlphaFamily::kLinear;
  double beta = 0.0;
  // Per-segment overrides; segments not present use `beta`.
  std::map<int, double> beta_by_segment;
};

// Below this the exponential design switches to its beta -> 0 limit,
// (t_flex - t_short) / (t_long - t_short); the formula is 0/0 at beta = 0.
inline constexpr double kExponentialBetaFloor = 1e-7;

double beta_for_segment(const AlphaDesign& design, int segment);

// Throws InfeasibleError ("beta out of feasible range ...") when the default
// beta or any per-segment override violates the family's constraint:
//   linear: 0 <= beta <= 1 / (t_long - t_short)
//   rational: 0 <= beta < 1
//   exponential: beta >= 0
void check_feasible(const AlphaDesign& design, const WindowSpec& windows);

// The interpolation weight for one segment. Validates feasibility.
double alpha(const AlphaDesign& design, const WindowSpec& windows,
             int segment = -1);

// ---------------------------------------------------------------------------
// Composition. The conditional form takes the model's two heads directly:
// p_short = P(tau <= t_short), p_cond = P(tau <= t_long | tau > t_short).
// ---------------------------------------------------------------------------

struct PredictionPair {
  double p_short = 0.0;
  double p_cond = 0.0;
};

// (1 - a) * p_short + a * p_long.
double compose_unconditional(double p_short, double p_long, double a);

// p_short + (1 - p_short) * a * p_cond; equals the unconditional form with
// p_long = recover_long_window(pair).
double compose_conditional(const PredictionPair& pair, double a);

// The implied long-window estimate, p_short + (1 - p_short) * p_cond.
double recover_long_window(const PredictionPair& pair);

// ---------------------------------------------------------------------------
// Application with endpoint pinning: when t_flex lands exactly on t_short or
// t_long, the raw endpoint estimate is served, so all designs agree there by
// construction (alpha itself is not pinned; the linear family's alpha is
// legitimately nonzero at t_short for beta < 1/(t_long - t_short)).
// ---------------------------------------------------------------------------

double estimate_unconditional(double p_short, double p_long,
                              const AlphaDesign& design,
                              const WindowSpec& windows, int segment = -1);

double estimate_conditional(const PredictionPair& pair,
                            const AlphaDesign& design,
                            const WindowSpec& windows, int segment = -1);

std::string alpha_family_name(AlphaFamily family);

}  // namespace fow

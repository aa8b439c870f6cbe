#pragma once

#include <cstdint>
#include <optional>

namespace fow {

// Probabilities are clipped to this band before scoring or serving, so a
// single bad example can never contribute an unbounded log-loss term.
inline constexpr double kClipFloor = 1e-6;
inline constexpr double kClipCeil = 1.0 - 1e-6;

inline double clip_probability(double p) {
  if (p < kClipFloor) return kClipFloor;
  if (p > kClipCeil) return kClipCeil;
  return p;
}

// ---------------------------------------------------------------------------
// Event: one ad interaction. `day` is continuous time in days since the
// stream epoch. `delay` is the lag from the event to its conversion, in
// days; it is present exactly when `converted` is true, and positive.
// ---------------------------------------------------------------------------
struct Event {
  std::uint64_t event_id = 0;
  double day = 0.0;
  int segment = 0;
  bool converted = false;
  std::optional<double> delay;
};

// Throws DataError when the converted/delay invariants are violated
// (used by the event-log reader; generated events hold them by construction).
void validate_event(const Event& event);

// ---------------------------------------------------------------------------
// WindowSpec: the three optimization horizons, in days.
//   0 < t_short <= t_flex <= t_long, t_short < t_long.
// t_flex is the serving horizon; t_short/t_long are the trained endpoints.
// ---------------------------------------------------------------------------
class WindowSpec {
 public:
  WindowSpec(double t_short, double t_long, double t_flex);

  double t_short() const { return t_short_; }
  double t_long() const { return t_long_; }
  double t_flex() const { return t_flex_; }

  // Same endpoints, different serving horizon.
  [[nodiscard]] WindowSpec with_flex(double t_flex) const {
    return WindowSpec(t_short_, t_long_, t_flex);
  }

  bool flex_at_short() const { return t_flex_ == t_short_; }
  bool flex_at_long() const { return t_flex_ == t_long_; }

 private:
  double t_short_;
  double t_long_;
  double t_flex_;
};

// ---------------------------------------------------------------------------
// LabeledExample: a training row derived from an event at some snapshot.
// `censored` records that the window had not fully elapsed at the snapshot;
// a censored row still carries a positive label when the conversion itself
// was already observed (labels are sticky: once true they stay true as the
// snapshot advances). A censored row is negative only provisionally.
// ---------------------------------------------------------------------------
struct LabeledExample {
  std::uint64_t event_id = 0;
  int segment = 0;
  bool window_label = false;
  bool censored = false;
};

// Ground-truth label: did the event convert within t_window days of the
// event, regardless of any snapshot? t_window must be positive.
bool window_label(const Event& event, double t_window);

// Label as observable at `snapshot_day`: a conversion counts only when it
// falls inside the window AND has already happened by the snapshot.
// Throws DataError when the snapshot predates the event.
LabeledExample maturation_label(const Event& event, double t_window,
                                double snapshot_day);

}  // namespace fow

#include "fow/core_types.hpp"

#include <stdexcept>
#include <string>

#include "fow/errors.hpp"

namespace fow {

void validate_event(const Event& event) {
  if (event.converted != event.delay.has_value()) {
    throw DataError("event " + std::to_string(event.event_id) +
                    ": delay must be present exactly when converted");
  }
  if (event.delay && *event.delay <= 0.0) {
    throw DataError("event " + std::to_string(event.event_id) +
                    ": delay must be positive");
  }
  if (event.day < 0.0) {
    throw DataError("event " + std::to_string(event.event_id) +
                    ": day must be non-negative");
  }
  if (event.segment < 0) {
    throw DataError("event " + std::to_string(event.event_id) +
                    ": segment must be non-negative");
  }
}

WindowSpec::WindowSpec(double t_short, double t_long, double t_flex)
    : t_short_(t_short), t_long_(t_long), t_flex_(t_flex) {
  if (!(0.0 < t_short) || !(t_short < t_long)) {
    throw InfeasibleError("window out of range: need 0 < t_short < t_long, got t_short=" +
                          std::to_string(t_short) +
                          " t_long=" + std::to_string(t_long));
  }
  if (!(t_short <= t_flex && t_flex <= t_long)) {
    throw InfeasibleError("window out of range: t_flex=" + std::to_string(t_flex) +
                          " outside [" + std::to_string(t_short) + ", " +
                          std::to_string(t_long) + "]");
  }
}

bool window_label(const Event& event, double t_window) {
  if (!(t_window > 0.0)) {
    throw std::invalid_argument("t_window must be positive");
  }
  return event.converted && *event.delay <= t_window;
}

LabeledExample maturation_label(const Event& event, double t_window,
                                double snapshot_day) {
  if (!(t_window > 0.0)) {
    throw std::invalid_argument("t_window must be positive");
  }
  if (snapshot_day < event.day) {
    throw DataError("snapshot day " + std::to_string(snapshot_day) +
                    " predates event " + std::to_string(event.event_id));
  }
  LabeledExample row;
  row.event_id = event.event_id;
  row.segment = event.segment;
  row.censored = snapshot_day < event.day + t_window;
  const bool conversion_observed =
      event.converted && event.day + *event.delay <= snapshot_day;
  row.window_label = conversion_observed && *event.delay <= t_window;
  return row;
}

}  // namespace fow

#include "fow/event_log.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "fow/errors.hpp"

namespace fow {

namespace {

using nlohmann::json;

json to_json(const Event& event) {
  json j;
  j["event_id"] = event.event_id;
  j["day"] = event.day;
  j["segment"] = event.segment;
  j["converted"] = event.converted;
  if (event.delay) j["delay"] = *event.delay;
  return j;
}

}  // namespace

std::string format_event_line(const Event& event) {
  return to_json(event).dump();
}

Event parse_event_line(const std::string& line) {
  json j = json::parse(line, /*cb=*/nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw DataError("malformed event line: " + line);
  }
  static const char* const kKnownKeys[] = {"event_id", "day", "segment",
                                           "converted", "delay"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) ==
        std::end(kKnownKeys)) {
      throw DataError("unknown key \"" + key + "\" in event line");
    }
  }
  Event event;
  try {
    event.event_id = j.at("event_id").get<std::uint64_t>();
    event.day = j.at("day").get<double>();
    event.segment = j.at("segment").get<int>();
    event.converted = j.at("converted").get<bool>();
    if (j.contains("delay")) event.delay = j.at("delay").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed event line: ") + e.what());
  }
  validate_event(event);
  return event;
}

void write_event_log(const std::filesystem::path& path,
                     const std::vector<Event>& events) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open event log for writing: " + path.string());
  }
  for (const Event& event : events) {
    out << format_event_line(event) << '\n';
  }
  if (!out) {
    throw DataError("write failed for event log: " + path.string());
  }
}

std::vector<Event> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open event log: " + path.string());
  }
  std::vector<Event> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(parse_event_line(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return events;
}

}  // namespace fow

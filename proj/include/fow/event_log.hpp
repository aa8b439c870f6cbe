#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fow/core_types.hpp"

namespace fow {

// ---------------------------------------------------------------------------
// JSONL event logs. One object per line, keys sorted, no trailing spaces:
//   {"converted":true,"day":3.25,"delay":0.5,"event_id":17,"segment":4}
// `delay` is omitted for non-converting events. Serialization is exact for
// round-trip purposes (shortest-representation doubles).
// ---------------------------------------------------------------------------

std::string format_event_line(const Event& event);

// Throws DataError on malformed JSON, missing keys, or invariant violations.
Event parse_event_line(const std::string& line);

void write_event_log(const std::filesystem::path& path,
                     const std::vector<Event>& events);

// Throws DataError when the file is missing or any line is malformed.
std::vector<Event> read_event_log(const std::filesystem::path& path);

}  // namespace fow

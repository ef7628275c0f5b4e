#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace derail {

using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

// Accepts "YYYY-MM-DDTHH:MM:SS" followed by optional fractional seconds and
// a "Z" or "+HH:MM"/"-HH:MM" offset; the result is normalized to UTC.
Timestamp parse_iso8601(std::string_view text);

// Always "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp t);

using Clock = std::function<Timestamp()>;

Clock system_clock();
Clock fixed_clock(Timestamp t);

}  // namespace derail

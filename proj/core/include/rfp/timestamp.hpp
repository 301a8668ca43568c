#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace rfp {

using TimePoint = std::chrono::system_clock::time_point;

// RFC 3339 date-time, e.g. "2018-10-17T03:32:29+02:00" or "...29.125Z".
std::optional<TimePoint> parse_rfc3339(std::string_view text);
inline bool is_rfc3339(std::string_view text) { return parse_rfc3339(text).has_value(); }

// UTC with microsecond precision and a trailing "Z".
std::string format_rfc3339(TimePoint tp);

}  // namespace rfp

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace readmit {

// Timestamps are integer minutes since 2000-01-01 00:00 (no time zones).
using Minutes = std::int64_t;

inline constexpr Minutes kMinutesPerHour = 60;
inline constexpr Minutes kMinutesPerDay = 24 * 60;

// "YYYY-MM-DD HH:MM:SS"; seconds are always 00.
std::string format_timestamp(Minutes t);

// Accepts "YYYY-MM-DD HH:MM[:SS]" with ' ' or 'T' between date and time.
// Returns false on malformed input or non-zero seconds.
bool parse_timestamp(std::string_view text, Minutes& out);

// Calendar month 1..12.
int month_of(Minutes t);

}  // namespace readmit

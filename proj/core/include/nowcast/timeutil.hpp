#pragma once

#include <string>
#include <string_view>

#include "nowcast/core_types.hpp"

namespace nowcast {

/// Parses `YYYY-MM-DDTHH:MM[:SS]` followed by `Z` or `+00:00`. Any other
/// offset, or no designator at all, is rejected with Error("non-UTC timestamp").
TimePoint parse_utc(std::string_view text);

/// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_utc(TimePoint t);

/// Compact form used in grid file names: `YYYYMMDDTHHZ`.
std::string format_compact_hour(TimePoint t);

/// Truncates to the containing hour.
TimePoint floor_hour(TimePoint t);

}  // namespace nowcast

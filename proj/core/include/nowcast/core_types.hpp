#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace nowcast {

/// Every recoverable failure in the library surfaces as this exception; the
/// message is a short stable phrase ("out of grid", "unsorted input", ...)
/// optionally followed by ": <detail>".
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TimePoint = std::chrono::sys_seconds;
inline constexpr std::int64_t kHourSeconds = 3600;

enum class Continent { Africa, Antarctica, Asia, Europe, NorthAmerica, Oceania, SouthAmerica };

std::string_view to_string(Continent c);
Continent continent_from_string(std::string_view s);

struct StationMeta {
  std::string station_id;
  double latitude = 0.0;
  double longitude = 0.0;
  double elevation = 0.0;
  Continent continent = Continent::Asia;

  /// Throws Error("invalid station") when id is empty or coordinates are out of range.
  void validate() const;
};

// Column order is fixed across the codebase; tp is always last.
enum Variable : std::size_t { kT2m = 0, kSp = 1, kRh = 2, kWindSpeed = 3, kPwv = 4, kTp = 5 };
inline constexpr std::size_t kNumVariables = 6;
inline constexpr std::size_t kTargetColumn = kTp;

struct VariableSchema {
  static constexpr std::array<std::string_view, kNumVariables> names = {
      "t2m", "sp", "rh", "wind_speed", "pwv", "tp"};
  static constexpr std::array<std::string_view, kNumVariables> units = {
      "K", "Pa", "%", "m/s", "mm", "mm/h"};

  /// Column index for a variable name; throws Error("unknown variable").
  static std::size_t index_of(std::string_view name);
};

/// One variable on the hourly grid. Values under a set mask bit are unspecified.
struct HourlySeries {
  TimePoint start_time{};
  std::vector<double> values;
  std::vector<bool> missing_mask;

  std::size_t size() const { return values.size(); }
  TimePoint time_at(std::size_t i) const {
    return start_time + std::chrono::seconds(static_cast<std::int64_t>(i) * kHourSeconds);
  }
  bool present(std::size_t i) const { return !missing_mask[i]; }
};

/// Aligned hourly 6-variable record for one station.
struct StationSeries {
  StationMeta meta;
  TimePoint start_time{};
  Eigen::MatrixXd data;                                         // T x 6, VariableSchema order
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing;   // T x 6
  bool qc_applied = false;

  std::size_t length() const { return static_cast<std::size_t>(data.rows()); }
  TimePoint time_at(std::size_t i) const {
    return start_time + std::chrono::seconds(static_cast<std::int64_t>(i) * kHourSeconds);
  }
  std::vector<double> column(std::size_t var) const;

  /// Checks the post-QC invariants (T > 0, no missing, tp >= 0).
  void validate() const;
};

/// Half-open index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct SplitIndices {
  IndexRange train;
  IndexRange val;
  IndexRange test;
};

/// Chronological 7:1:2 split with floor boundaries at 0.7T and 0.8T.
SplitIndices make_split(std::size_t t);

struct Seed {
  std::uint64_t value = 0;
  friend bool operator==(const Seed&, const Seed&) = default;
};

}  // namespace nowcast

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nowcast/core_types.hpp"

namespace nowcast {

struct RawSample {
  TimePoint time{};
  std::optional<double> value;  // nullopt = flagged missing
};

/// Native-resolution samples of one variable, timestamps strictly increasing.
struct RawSamples {
  std::string variable;
  std::vector<RawSample> samples;
  std::int64_t native_step = kHourSeconds;  // seconds
  std::size_t malformed_rows = 0;
  std::vector<std::size_t> malformed_lines;  // 1-based line numbers
};

/// Regular lat/lon grid of one variable at one instant. Row i sits at
/// lat0 + i*dlat, column j at lon0 + j*dlon. Missing cells hold NaN.
struct GridField {
  TimePoint time{};
  std::string variable;
  double lat0 = 0.0;
  double lon0 = 0.0;
  double dlat = 0.1;
  double dlon = 0.1;
  Eigen::MatrixXd values;  // nlat x nlon

  Eigen::Index nlat() const { return values.rows(); }
  Eigen::Index nlon() const { return values.cols(); }
  bool missing(Eigen::Index i, Eigen::Index j) const;
  double lat_at(Eigen::Index i) const { return lat0 + static_cast<double>(i) * dlat; }
  double lon_at(Eigen::Index j) const { return lon0 + static_cast<double>(j) * dlon; }
  void validate() const;
};

struct TimeSpan {
  TimePoint begin{};
  TimePoint end{};  // exclusive
};

struct CompletenessReport {
  std::string station_id;
  double fraction_present = 0.0;
  std::size_t gap_count = 0;
  double longest_gap_hours = 0.0;
};

// Station CSV: `timestamp,<variable>`; empty value = missing.
RawSamples parse_station_csv(const std::filesystem::path& path);
RawSamples parse_station_csv(std::istream& in, const std::string& source_name = "<stream>");

// Gridded CSV: literal header `timestamp,lat0,lon0,dlat,dlon,nlat,nlon`, one
// metadata line with those values, then nlat rows of nlon values (`NA` = missing).
GridField parse_grid_csv(const std::filesystem::path& path, const std::string& variable);
GridField parse_grid_csv(std::istream& in, const std::string& variable,
                         const std::string& source_name = "<stream>");
void write_grid_csv(std::ostream& out, const GridField& field);

/// Mean of samples in [H-30min, H+30min) for every hour H spanned by the input.
HourlySeries resample_to_hourly(const RawSamples& raw);

/// Bilinear blend of the four surrounding cell centers.
/// Throws Error("out of grid") or Error("missing corner").
double bilinear_sample(const GridField& field, double lat, double lon);

/// Value of the closest cell centroid; ties go to the smaller (row, column).
/// Throws Error("missing cell") when that cell is missing.
double nearest_sample(const GridField& field, double lat, double lon);

/// Gridded inputs keyed by variable name (t2m, sp, rh, wind_speed).
using MetFields = std::map<std::string, std::vector<GridField>>;

/// Builds the hourly 6-column station record. Continuous fields are sampled
/// bilinearly, precipitation by nearest neighbour, PWV by hourly resampling;
/// the common covered hour span defines T.
StationSeries align_station(const RawSamples& pwv, const MetFields& met_fields,
                            const std::vector<GridField>& precip_fields, const StationMeta& meta);

/// Trims leading/trailing rows with missing continuous values, then fills
/// interior gaps: linear interpolation for continuous variables, forward fill
/// for tp (leading tp gap filled with 0).
StationSeries qc_fill(const StationSeries& series);

CompletenessReport completeness(const RawSamples& raw, const TimeSpan& span,
                                const std::string& station_id = {});

// Aligned output CSV: `timestamp,t2m,sp,rh,wind_speed,pwv,tp`.
void write_station_csv(std::ostream& out, const StationSeries& series);
void write_station_csv(const std::filesystem::path& path, const StationSeries& series);
StationSeries read_station_csv(std::istream& in, const StationMeta& meta);
StationSeries read_station_csv(const std::filesystem::path& path, const StationMeta& meta);

/// Shortest round-trip decimal form; keeps written files byte-stable.
std::string format_double(double v);

}  // namespace nowcast

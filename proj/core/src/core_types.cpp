#include "nowcast/core_types.hpp"

#include <cmath>

namespace nowcast {

namespace {
constexpr std::array<std::string_view, 7> kContinentNames = {
    "Africa", "Antarctica", "Asia", "Europe", "NorthAmerica", "Oceania", "SouthAmerica"};
}

std::string_view to_string(Continent c) { return kContinentNames[static_cast<std::size_t>(c)]; }

Continent continent_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kContinentNames.size(); ++i) {
    if (kContinentNames[i] == s) return static_cast<Continent>(i);
  }
  throw Error("unknown continent: " + std::string(s));
}

void StationMeta::validate() const {
  if (station_id.empty()) throw Error("invalid station: empty station_id");
  if (!(latitude >= -90.0 && latitude <= 90.0))
    throw Error("invalid station: latitude out of range for " + station_id);
  if (!(longitude >= -180.0 && longitude <= 180.0))
    throw Error("invalid station: longitude out of range for " + station_id);
}

std::size_t VariableSchema::index_of(std::string_view name) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw Error("unknown variable: " + std::string(name));
}

std::vector<double> StationSeries::column(std::size_t var) const {
  std::vector<double> out(length());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(var));
  return out;
}

void StationSeries::validate() const {
  if (data.rows() == 0) throw Error("invalid series: empty");
  if (data.cols() != static_cast<Eigen::Index>(kNumVariables)) throw Error("invalid series: expected 6 columns");
  if (qc_applied && missing.any()) throw Error("invalid series: missing entries after QC");
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (missing.size() != 0 && missing(i, j)) continue;
      if (!std::isfinite(data(i, j))) throw Error("invalid series: non-finite value");
    }
    const bool tp_missing = missing.size() != 0 && missing(i, kTargetColumn);
    if (!tp_missing && data(i, kTargetColumn) < 0.0) throw Error("invalid series: negative tp");
  }
}

SplitIndices make_split(std::size_t t) {
  if (t < 10) throw Error("series too short to split");
  // Integer arithmetic keeps floor(0.7T) exact for any T.
  const std::size_t a = (7 * t) / 10;
  const std::size_t b = (8 * t) / 10;
  return SplitIndices{{0, a}, {a, b}, {b, t}};
}

}  // namespace nowcast

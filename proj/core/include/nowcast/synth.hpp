#pragma once

#include <filesystem>

#include "nowcast/core_types.hpp"

namespace nowcast {

/// Desk-scale station generator. Rain onset is driven by a persistent latent
/// wetness plus a term that switches on once PWV exceeds `pwv_threshold`;
/// the wettest (1 - zero_fraction) share of hours receive rain.
struct SyntheticSpec {
  std::string station_id = "SYN01";
  double latitude = 30.5;
  double longitude = 114.3;
  std::size_t hours = 2 * 8760;
  double zero_fraction = 0.82;
  double pwv_threshold = 38.0;  // mm
  double pwv_noise = 1.2;       // innovation std of the PWV AR process, mm
  double rain_noise = 0.35;     // multiplicative intensity noise (log scale)
  double regime_hours = 1200.0; // mean length of a stationary segment
  std::string start = "2021-01-01T00:00:00Z";
  std::uint64_t seed = 7;

  void validate() const;
};

/// QC'd hourly 6-variable series; deterministic in the spec.
StationSeries generate_synthetic(const SyntheticSpec& spec);

/// Raw inputs for the ingest pipeline covering the first `hours` of `series`:
/// `<id>_pwv.csv` at 30-minute spacing and one 3x3 grid file per variable
/// and hour named `<variable>_<YYYYMMDDTHHZ>.csv` centred on the station.
void write_ingest_fixture(const StationSeries& series, std::size_t hours, const std::filesystem::path& station_dir,
                          const std::filesystem::path& grid_dir);

}  // namespace nowcast

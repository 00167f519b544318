#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nowcast/metrics.hpp"
#include "nowcast/model_spec.hpp"
#include "nowcast/protocol.hpp"
#include "nowcast/synth.hpp"
#include "nowcast/training.hpp"

namespace nowcast {

/// One station of a run, given as an aligned CSV, a raw PWV CSV plus the
/// shared grid directory (needs `ingest`), or a synthetic spec.
struct StationEntry {
  enum class Source { Aligned, Raw, Synthetic };
  Source source = Source::Synthetic;
  StationMeta meta;
  std::filesystem::path path;  // aligned or raw PWV CSV
  SyntheticSpec synthetic;
};

struct IngestSettings {
  std::filesystem::path grid_dir;
  std::string begin;  // first hour expected in the grid files
  std::string end;    // exclusive
};

struct RunConfig {
  std::vector<StationEntry> stations;
  std::optional<IngestSettings> ingest;
  ProtocolGrid grid;
  std::vector<ModelSpec> models;
  TrainConfig train;
  ExtremeConfig extreme;
  std::filesystem::path output_dir = "nowcast_out";
};

/// Parses and validates a JSON run config. Unknown keys anywhere are
/// rejected; relative paths resolve against `base_dir`.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Series length a station will have once loaded (synthetic: spec hours).
std::size_t expected_length(const StationEntry& entry, const std::filesystem::path& output_dir);

/// Loads every station as a QC'd series. Raw stations are read from the
/// aligned CSV written by ingest under output_dir/aligned.
std::vector<StationSeries> load_stations(const RunConfig& cfg);

/// Rejects grid cells whose span L_in + L_out * R exceeds the shortest series.
void check_grid_fits(const ProtocolGrid& grid, std::size_t shortest_length);

std::filesystem::path aligned_path(const RunConfig& cfg, const std::string& station_id);

}  // namespace nowcast

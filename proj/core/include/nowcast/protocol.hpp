#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nowcast/metrics.hpp"
#include "nowcast/model_spec.hpp"
#include "nowcast/training.hpp"

namespace nowcast {

struct ProtocolGrid {
  std::vector<std::size_t> input_lengths{12, 24};
  std::vector<std::size_t> output_lengths{2, 4, 6};
  std::vector<std::size_t> resolutions{1, 2, 3};
  std::size_t horizon_hours = 6;  // fixed total horizon of the resolution cells
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool multi_scale = true;        // input_lengths x output_lengths at 1 h
  bool multi_resolution = true;   // input_lengths x resolutions, L_out = H / R

  void validate() const;
};

/// Distinct window configurations of the grid in a fixed order: multi-scale
/// cells first, then resolution cells not already present.
std::vector<WindowConfig> enumerate_configs(const ProtocolGrid& grid);

struct CellKey {
  std::string station;
  std::string model;
  std::size_t input_length = 0;
  std::size_t output_length = 0;
  std::size_t resolution = 0;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellRecord {
  CellKey key;
  std::uint64_t seed = 0;
  MetricSet metrics;
  std::size_t best_epoch = 0;  // 0 for untrained baselines
};

struct FailedCell {
  CellKey key;
  std::uint64_t seed = 0;
  std::string reason;
};

/// Mean over seeds of one (station, model, config) cell.
struct CellMean {
  CellKey key;
  std::size_t n_seeds = 0;
  double mse = 0.0;
  double mae = 0.0;
  bool extreme_defined = false;
  double eere = 0.0;
  double aeere = 0.0;
};

/// Cross-station mean for one model, either per config or over all configs
/// (input_length = output_length = resolution = 0).
struct ModelAverage {
  std::string model;
  std::size_t input_length = 0;
  std::size_t output_length = 0;
  std::size_t resolution = 0;
  std::size_t n_cells = 0;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t n_extreme_cells = 0;  // cells contributing to EERE/AEERE
  double eere = 0.0;
  double aeere = 0.0;
};

struct RankEntry {
  std::size_t rank = 0;
  std::string model;
  double value = 0.0;
};

struct RankTables {
  std::vector<RankEntry> by_mse;
  std::vector<RankEntry> by_mae;
};

struct EvaluationReport {
  ProtocolGrid grid;
  std::vector<std::string> stations;
  std::vector<std::string> models;
  std::vector<CellRecord> records;
  std::vector<FailedCell> failures;
  // Derived from records by recompute_aggregates().
  std::vector<CellMean> cell_means;
  std::vector<ModelAverage> config_averages;
  std::vector<ModelAverage> model_averages;
  RankTables rankings;
};

/// Sorts records and failures and rebuilds every derived table from records.
void recompute_aggregates(EvaluationReport& report);

/// Ascending overall mean MSE and MAE; ties broken by model name.
RankTables rank_models(const EvaluationReport& report);

struct ProtocolOptions {
  std::size_t jobs = 1;  // 0 = hardware concurrency; NOWCAST_BENCH_THREADS caps it
  ExtremeConfig extreme;
  std::function<void(const std::string&)> log;
};

/// Worker count after applying the NOWCAST_BENCH_THREADS cap.
std::size_t effective_jobs(std::size_t requested, std::size_t work_units);

/// Seed used for the cell; shared by every model so paired models start from
/// identical streams.
Seed cell_seed(std::uint64_t seed, const std::string& station, const WindowConfig& cfg);

/// Full evaluation: for every station, config, model and seed build windows,
/// fit on train, select on validation, score the test windows in mm/h.
/// Cell failures are recorded, never thrown.
EvaluationReport run_protocol(const std::vector<StationSeries>& stations, const std::vector<ModelSpec>& models,
                              const ProtocolGrid& grid, const TrainConfig& tc, const ProtocolOptions& opts = {});

}  // namespace nowcast

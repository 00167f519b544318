#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "nowcast/protocol.hpp"

namespace nowcast {

/// Identifies the library build; stable across runs of the same binary.
std::string build_id();

// {meta: {grid, seeds, stations, models, build_id}, records, averages, rankings, failures}
std::string report_to_json(const EvaluationReport& report);
/// Reads records, failures and meta back; derived tables are recomputed.
EvaluationReport report_from_json(std::string_view text);

/// One table per window config: a row per model, MSE/MAE per station, then
/// the cross-station averages. The best value of each column is bold.
std::string report_to_markdown(const EvaluationReport& report);

/// Long format: station,model,L_in,L_out,R,seed,metric,value.
std::string report_to_csv(const EvaluationReport& report);

/// Writes report.json, report.md and report_long.csv under `dir`.
void write_report_files(const EvaluationReport& report, const std::filesystem::path& dir);

}  // namespace nowcast

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "nowcast/core_types.hpp"

namespace nowcast {

struct WindowConfig {
  std::size_t input_length = 24;   // hours of 1-hour input
  std::size_t output_length = 6;   // target steps
  std::size_t resolution = 1;      // hours per target step
  std::size_t stride = 1;

  std::size_t horizon_hours() const { return output_length * resolution; }
  std::size_t span_hours() const { return input_length + horizon_hours(); }
  /// Library use allows any input_length >= 2; protocol runs require 12 or 24.
  void validate(bool protocol = false) const;
  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

/// Per-variable z-score statistics from the training range only.
class Normalizer {
 public:
  Normalizer();
  static Normalizer fit(const StationSeries& series, IndexRange range);
  static Normalizer from_stats(const std::array<double, kNumVariables>& mean,
                               const std::array<double, kNumVariables>& std);

  double transform(std::size_t var, double value) const { return (value - mean_[var]) / std_[var]; }
  double inverse(std::size_t var, double z) const { return z * std_[var] + mean_[var]; }
  double mean(std::size_t var) const { return mean_[var]; }
  double std(std::size_t var) const { return std_[var]; }
  bool constant(std::size_t var) const { return constant_[var]; }

 private:
  std::array<double, kNumVariables> mean_{};
  std::array<double, kNumVariables> std_{};
  std::array<bool, kNumVariables> constant_{};
};

struct WindowedSample {
  Eigen::MatrixXd x;       // L_in x 6, normalised
  Eigen::VectorXd raw_tp;  // L_in, mm/h
  Eigen::VectorXd y;       // L_out, mm/h at the configured resolution
  std::size_t start = 0;   // series index of the first input hour
};

struct WindowSplits {
  std::vector<WindowedSample> train;
  std::vector<WindowedSample> val;
  std::vector<WindowedSample> test;
};

/// Every stride-1 window of the series, ignoring splits.
std::vector<WindowedSample> make_windows(const StationSeries& series, const WindowConfig& cfg,
                                         const Normalizer& norm);

/// Windows assigned to the split that holds their last target hour; targets
/// never cross a split boundary, inputs may reach back L_in hours.
WindowSplits window_dataset(const StationSeries& series, const WindowConfig& cfg, const SplitIndices& split,
                            const Normalizer& norm);

/// Stacked batch for the trainable models.
struct Batch {
  Eigen::MatrixXd x;       // (B*L_in) x 6
  Eigen::MatrixXd raw_tp;  // B x L_in
  Eigen::MatrixXd y_norm;  // B x L_out, normalised target
  Eigen::MatrixXd y_raw;   // B x L_out
  std::size_t size() const { return static_cast<std::size_t>(raw_tp.rows()); }
};

Batch make_batch(std::span<const WindowedSample> samples, std::span<const std::size_t> order,
                 const Normalizer& norm);
Batch make_batch(std::span<const WindowedSample> samples, const Normalizer& norm);

}  // namespace nowcast

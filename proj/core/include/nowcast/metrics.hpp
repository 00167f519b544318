#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nowcast {

struct ExtremeConfig {
  double threshold = 4.0;  // mm/h, strictly greater counts as extreme
  void validate() const;
};

struct MetricSet {
  double mse = 0.0;
  double mae = 0.0;
  double eere = 0.0;   // meaningful only when extreme_defined
  double aeere = 0.0;
  std::size_t n_points = 0;
  std::size_t n_extreme = 0;
  bool extreme_defined = false;
};

double mse(std::span<const double> y_hat, std::span<const double> y);
double mae(std::span<const double> y_hat, std::span<const double> y);

/// Indices t with y[t] > cfg.threshold.
std::vector<std::size_t> extreme_mask(std::span<const double> y, const ExtremeConfig& cfg = {});

/// Squared / absolute error over `e`; throws on an empty set.
double eere(std::span<const double> y_hat, std::span<const double> y, std::span<const std::size_t> e);
double aeere(std::span<const double> y_hat, std::span<const double> y, std::span<const std::size_t> e);

/// All four metrics pooled over every element; EERE/AEERE are left at zero
/// with extreme_defined=false when no target exceeds the threshold.
MetricSet compute_metrics(std::span<const double> y_hat, std::span<const double> y, const ExtremeConfig& cfg = {});

/// Pools windows x steps (row-major) of de-normalised predictions and targets.
MetricSet compute_metrics(const Eigen::MatrixXd& y_hat, const Eigen::MatrixXd& y, const ExtremeConfig& cfg = {});

}  // namespace nowcast

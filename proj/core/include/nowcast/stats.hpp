#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "nowcast/core_types.hpp"

namespace nowcast::stats {

/// Fraction of entries exactly equal to zero.
double zero_inflation_ratio(std::span<const double> tp);

/// Lag-k sample autocorrelation, normalised by the full-series sum of squares.
double autocorrelation(std::span<const double> x, std::size_t k);

struct DecayFit {
  std::vector<std::size_t> lags;  // lags actually used in the fit
  std::vector<double> rho;        // their autocorrelations
  double lambda_hat = 0.0;
  double fit_r2 = 0.0;
  std::size_t excluded = 0;       // non-positive rho values dropped
};

/// Least-squares fit of -ln rho(k) = lambda * k through the origin, with
/// rhos[i] taken as rho(i + 1). Non-positive values are excluded.
DecayFit fit_decay_lambda(std::span<const double> rhos);

struct AdfConfig {
  std::size_t max_lag = 12;
  bool include_trend = true;
  double significance = 0.05;
};

struct AdfResult {
  double gamma_hat = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  std::size_t lag_used = 0;
  std::size_t n_obs = 0;
  bool reject_unit_root = false;
};

/// Augmented Dickey-Fuller regression with constant (and trend when enabled),
/// lag order chosen by AIC over 0..max_lag on a common sample.
AdfResult adf_test(std::span<const double> segment, const AdfConfig& cfg = {});

/// MacKinnon (1994) approximate p-value for a single-series ADF statistic.
double mackinnon_pvalue(double t_stat, bool include_trend);

/// Design matrix and response for the ADF regression at a fixed lag; rows
/// start at `first_row` (index into the differenced series). Exposed so tests
/// can re-solve the same regression independently.
struct AdfDesign {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::Index gamma_column = 0;
};
AdfDesign adf_design(std::span<const double> segment, std::size_t lag, std::size_t first_row, bool include_trend);

enum class CorrelationMethod { Pearson, Kendall, Spearman };
std::string_view to_string(CorrelationMethod m);

struct CorrelationMatrix {
  CorrelationMethod method = CorrelationMethod::Pearson;
  Eigen::Matrix<double, 6, 6> matrix = Eigen::Matrix<double, 6, 6>::Identity();
  /// false where a constant column made the coefficient undefined (value is NaN).
  Eigen::Matrix<bool, 6, 6> defined = Eigen::Matrix<bool, 6, 6>::Constant(true);
};

/// NaN when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);
/// Tau-b with tie corrections, O(n log n).
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

CorrelationMatrix correlation_matrix(const Eigen::MatrixXd& data, CorrelationMethod method);

}  // namespace nowcast::stats

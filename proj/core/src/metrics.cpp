#include "nowcast/metrics.hpp"

#include <cmath>

#include "nowcast/core_types.hpp"

namespace nowcast {

namespace {

void check_pair(std::span<const double> y_hat, std::span<const double> y) {
  if (y.empty()) throw Error("empty metric input");
  if (y_hat.size() != y.size()) throw Error("metric length mismatch");
}

}  // namespace

void ExtremeConfig::validate() const {
  if (!(threshold > 0.0)) throw Error("invalid extreme threshold");
}

double mse(std::span<const double> y_hat, std::span<const double> y) {
  check_pair(y_hat, y);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y_hat[i] - y[i]) * (y_hat[i] - y[i]);
  return s / static_cast<double>(y.size());
}

double mae(std::span<const double> y_hat, std::span<const double> y) {
  check_pair(y_hat, y);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y_hat[i] - y[i]);
  return s / static_cast<double>(y.size());
}

std::vector<std::size_t> extreme_mask(std::span<const double> y, const ExtremeConfig& cfg) {
  std::vector<std::size_t> e;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] > cfg.threshold) e.push_back(i);
  return e;
}

double eere(std::span<const double> y_hat, std::span<const double> y, std::span<const std::size_t> e) {
  check_pair(y_hat, y);
  if (e.empty()) throw Error("empty extreme set");
  double s = 0.0;
  for (std::size_t t : e) s += (y_hat[t] - y[t]) * (y_hat[t] - y[t]);
  return s / static_cast<double>(e.size());
}

double aeere(std::span<const double> y_hat, std::span<const double> y, std::span<const std::size_t> e) {
  check_pair(y_hat, y);
  if (e.empty()) throw Error("empty extreme set");
  double s = 0.0;
  for (std::size_t t : e) s += std::abs(y_hat[t] - y[t]);
  return s / static_cast<double>(e.size());
}

MetricSet compute_metrics(std::span<const double> y_hat, std::span<const double> y, const ExtremeConfig& cfg) {
  cfg.validate();
  MetricSet m;
  m.mse = mse(y_hat, y);
  m.mae = mae(y_hat, y);
  m.n_points = y.size();
  const std::vector<std::size_t> e = extreme_mask(y, cfg);
  m.n_extreme = e.size();
  m.extreme_defined = !e.empty();
  if (m.extreme_defined) {
    m.eere = eere(y_hat, y, e);
    m.aeere = aeere(y_hat, y, e);
  }
  return m;
}

MetricSet compute_metrics(const Eigen::MatrixXd& y_hat, const Eigen::MatrixXd& y, const ExtremeConfig& cfg) {
  if (y_hat.rows() != y.rows() || y_hat.cols() != y.cols()) throw Error("metric length mismatch");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor a = y_hat;
  const RowMajor b = y;
  return compute_metrics(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                         std::span<const double>(b.data(), static_cast<std::size_t>(b.size())), cfg);
}

}  // namespace nowcast

#include "nowcast/models.hpp"

#include <algorithm>
#include <cmath>

namespace nowcast {

void fill_uniform(ad::Matrix& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

// ---------------------------------------------------------------------------
// Forecaster

void Forecaster::check_shapes(const Eigen::MatrixXd& x, const Eigen::VectorXd& raw_tp) const {
  const auto lin = static_cast<Eigen::Index>(window_.input_length);
  if (x.rows() != lin || x.cols() != static_cast<Eigen::Index>(kNumVariables) || raw_tp.size() != lin)
    throw Error("shape mismatch: expected " + std::to_string(lin) + "x6 input for " + name());
}

Eigen::VectorXd Forecaster::predict(const Eigen::MatrixXd& x, const Eigen::VectorXd& raw_tp) const {
  check_shapes(x, raw_tp);
  return predict_raw(x, raw_tp).cwiseMax(0.0);
}

Eigen::MatrixXd Forecaster::predict_all(std::span<const WindowedSample> samples) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(window_.output_length));
  for (std::size_t i = 0; i < samples.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = predict(samples[i]).transpose();
  return out;
}

Eigen::VectorXd ZeroForecaster::predict_raw(const Eigen::MatrixXd&, const Eigen::VectorXd&) const {
  return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(window_.output_length));
}

Eigen::VectorXd PersistenceForecaster::predict_raw(const Eigen::MatrixXd&, const Eigen::VectorXd& raw_tp) const {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(window_.output_length), raw_tp(raw_tp.size() - 1));
}

MovingAverageForecaster::MovingAverageForecaster(WindowConfig w, std::size_t window) : Forecaster(w), span_(window) {
  if (span_ == 0) throw Error("moving average window must be >= 1");
}

Eigen::VectorXd MovingAverageForecaster::predict_raw(const Eigen::MatrixXd&, const Eigen::VectorXd& raw_tp) const {
  const Eigen::Index n = std::min<Eigen::Index>(static_cast<Eigen::Index>(span_), raw_tp.size());
  const double m = raw_tp.tail(n).mean();
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(window_.output_length), m);
}

// ---------------------------------------------------------------------------
// Trainable

std::size_t TrainableForecaster::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

std::vector<ad::Var> TrainableForecaster::bind(ad::Tape& tape) const {
  std::vector<ad::Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) vars.push_back(tape.variable(p.value));
  return vars;
}

Eigen::MatrixXd TrainableForecaster::denormalize(const Eigen::MatrixXd& y_norm) const {
  return (y_norm.array() * norm_.std(kTargetColumn) + norm_.mean(kTargetColumn)).matrix();
}

Eigen::VectorXd TrainableForecaster::predict_raw(const Eigen::MatrixXd& x, const Eigen::VectorXd& raw_tp) const {
  Batch batch;
  batch.x = x;
  batch.raw_tp = raw_tp.transpose();
  ad::Tape tape;
  std::vector<ad::Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) vars.push_back(tape.constant(p.value));
  const ad::Var out = forward(tape, batch, vars);
  return denormalize(out.value()).row(0).transpose();
}

Eigen::MatrixXd TrainableForecaster::predict_all(std::span<const WindowedSample> samples) const {
  constexpr std::size_t kChunk = 256;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(window_.output_length));
  for (std::size_t begin = 0; begin < samples.size(); begin += kChunk) {
    const std::size_t end = std::min(samples.size(), begin + kChunk);
    const auto chunk = samples.subspan(begin, end - begin);
    for (const auto& s : chunk) check_shapes(s.x, s.raw_tp);
    const Batch batch = make_batch(chunk, norm_);
    ad::Tape tape;
    std::vector<ad::Var> vars;
    vars.reserve(params_.size());
    for (const auto& p : params_) vars.push_back(tape.constant(p.value));
    const ad::Var y = forward(tape, batch, vars);
    out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
        denormalize(y.value()).cwiseMax(0.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear

LinearForecaster::LinearForecaster(WindowConfig w, Normalizer norm) : TrainableForecaster(w, norm) {
  const auto in = static_cast<Eigen::Index>(w.input_length * kNumVariables);
  const auto out = static_cast<Eigen::Index>(w.output_length);
  params_.push_back({"weight", ad::Matrix::Zero(in, out)});
  params_.push_back({"bias", ad::Matrix::Zero(1, out)});
}

void LinearForecaster::initialize(Seed seed) {
  Rng rng(seed.value);
  const double bound = 1.0 / std::sqrt(static_cast<double>(params_[0].value.rows()));
  fill_uniform(params_[0].value, bound, rng);
  fill_uniform(params_[1].value, bound, rng);
}

ad::Var LinearForecaster::forward(ad::Tape& tape, const Batch& batch, std::span<const ad::Var> vars) const {
  if (vars.size() != params_.size()) throw Error("linear: parameter binding mismatch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const ad::Var x = tape.constant(batch.x);
  const ad::Var flat = ad::reshape(x, b, static_cast<Eigen::Index>(window_.input_length * kNumVariables));
  return ad::add_row(ad::matmul(flat, vars[0]), vars[1]);
}

}  // namespace nowcast

#include "nowcast/bfpf.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "nowcast/core_types.hpp"

namespace nowcast::bfpf {

void BfpfParams::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error("invalid bfpf: tau must be > 0");
  if (!(sentinel > 0.0) || !std::isfinite(sentinel)) throw Error("invalid bfpf: sentinel must be finite and > 0");
  if (!std::isfinite(lambda_scale) || !std::isfinite(alpha_scale)) throw Error("invalid bfpf: non-finite scale");
}

Eigen::MatrixXd zero_distance(const Eigen::MatrixXd& raw_tp, const BfpfParams& params) {
  const Eigen::Index rows = raw_tp.rows();
  const Eigen::Index len = raw_tp.cols();
  const double sentinel = params.sentinel;
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(rows, len, sentinel);
  for (Eigen::Index b = 0; b < rows; ++b) {
    // Forward scan carries the running maximum zero index seen so far.
    Eigen::Index last_zero = -1;
    for (Eigen::Index t = 0; t < len; ++t) {
      if (raw_tp(b, t) == 0.0) {
        last_zero = t;
      } else if (last_zero >= 0) {
        d(b, t) = static_cast<double>(t - last_zero);
      }
    }
    Eigen::Index next_zero = -1;
    for (Eigen::Index t = len - 1; t >= 0; --t) {
      if (raw_tp(b, t) == 0.0) {
        next_zero = t;
      } else if (next_zero >= 0) {
        d(b, t) = std::min(d(b, t), static_cast<double>(next_zero - t));
      }
    }
  }
  return d;
}

Eigen::MatrixXd proximity_weights(const Eigen::MatrixXd& distance, double tau) {
  if (!(tau > 0.0)) throw Error("invalid bfpf: tau must be > 0");
  // Vectorised exp may or may not flush subnormals depending on the lane;
  // flushing here keeps sentinel weights at exactly zero everywhere.
  return (-distance.array() / tau).exp().unaryExpr([](double w) { return w < DBL_MIN ? 0.0 : w; }).matrix();
}

Eigen::MatrixXd temporal_positions(std::size_t key_length) {
  if (key_length == 0) throw Error("temporal focus: key length must be >= 1");
  Eigen::MatrixXd p(1, static_cast<Eigen::Index>(key_length));
  for (std::size_t j = 0; j < key_length; ++j)
    p(0, static_cast<Eigen::Index>(j)) = static_cast<double>(j) / static_cast<double>(key_length);
  return p;
}

ScoreBias nonzero_focus_bias(const Eigen::MatrixXd& weights, double lambda_scale) {
  return ScoreBias{weights, lambda_scale};
}

ScoreBias temporal_focus_bias(std::size_t key_length, double alpha_scale) {
  return ScoreBias{temporal_positions(key_length), alpha_scale};
}

Tensor4 nonzero_focus_hook(const Tensor4& scores, const Eigen::MatrixXd& weights, double lambda_scale) {
  const auto [batch, heads, lq, lk] = scores.shape;
  if (static_cast<std::size_t>(weights.cols()) != lk || static_cast<std::size_t>(weights.rows()) != batch)
    throw Error("nonzero focus: weight shape does not match key axis");
  Tensor4 out = scores;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < lq; ++i)
        for (std::size_t j = 0; j < lk; ++j)
          out(b, h, i, j) += lambda_scale * weights(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
  return out;
}

Tensor4 temporal_focus_hook(const Tensor4& scores, double alpha_scale) {
  const auto [batch, heads, lq, lk] = scores.shape;
  const Eigen::MatrixXd pos = temporal_positions(lk);
  Tensor4 out = scores;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < lq; ++i)
        for (std::size_t j = 0; j < lk; ++j) out(b, h, i, j) += alpha_scale * pos(0, static_cast<Eigen::Index>(j));
  return out;
}

}  // namespace nowcast::bfpf

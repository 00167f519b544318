#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nowcast/autodiff.hpp"

namespace nowcast {

/// Dense row-major B x H x L x D tensor.
struct Tensor4 {
  std::array<std::size_t, 4> shape{0, 0, 0, 0};
  std::vector<double> data;

  Tensor4() = default;
  Tensor4(std::size_t b, std::size_t h, std::size_t l, std::size_t d, double fill = 0.0)
      : shape{b, h, l, d}, data(b * h * l * d, fill) {}

  double& operator()(std::size_t b, std::size_t h, std::size_t i, std::size_t j) {
    return data[((b * shape[1] + h) * shape[2] + i) * shape[3] + j];
  }
  double operator()(std::size_t b, std::size_t h, std::size_t i, std::size_t j) const {
    return data[((b * shape[1] + h) * shape[2] + i) * shape[3] + j];
  }
  /// Copy of the (b, h) slice as an L x D matrix.
  Eigen::MatrixXd slice(std::size_t b, std::size_t h) const;
  void set_slice(std::size_t b, std::size_t h, const Eigen::MatrixXd& m);
};

/// Additive score modifier `scale * pattern`, broadcast over heads and
/// queries. `pattern` is 1 x L_K (shared across the batch) or B x L_K.
struct ScoreBias {
  Eigen::MatrixXd pattern;
  double scale = 1.0;
};

struct AttentionResult {
  Tensor4 context;  // B x H x L_Q x d_head
  Tensor4 weights;  // B x H x L_Q x L_K
};

/// softmax(Q K^T / sqrt(d_head) + sum of hook biases) V.
/// Throws Error("bias not broadcastable") on a hook shape mismatch.
AttentionResult attention_forward(const Tensor4& q, const Tensor4& k, const Tensor4& v,
                                  std::span<const ScoreBias> hooks = {});

/// Row-wise softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

namespace ad {

/// Key-axis bias whose scale is a tape variable (1 x 1), so the scale gets a gradient.
struct KeyBias {
  Eigen::MatrixXd pattern;  // 1 x L or B x L
  Var scale;
};

/// Multi-head attention core on packed activations. q, k, v are (B*L) x
/// d_model with head h occupying columns [h*dh, (h+1)*dh) and row b*L + i
/// holding token i of sample b. Returns the packed context, same layout.
Var multi_head_attention(Var q, Var k, Var v, std::size_t batch, std::size_t heads,
                         std::span<const KeyBias> biases = {});

}  // namespace ad

}  // namespace nowcast

#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "nowcast/attention.hpp"

namespace nowcast::bfpf {

/// Bi-focus attention bias settings. tau is fixed; lambda and alpha are the
/// initial values of the two learned scales.
struct BfpfParams {
  double tau = 2.0;             // hours
  double lambda_scale = 0.1;
  double alpha_scale = 0.1;
  double sentinel = 1e4;        // hours; exp(-sentinel/tau) underflows to 0
  bool nonzero_focus = true;
  bool temporal_focus = true;

  void validate() const;
};

/// Per-row distance (in steps) from each non-zero entry to the nearest exact
/// zero; sentinel at zero entries and when neither side has a zero. Two
/// linear scans, O(B*L).
Eigen::MatrixXd zero_distance(const Eigen::MatrixXd& raw_tp, const BfpfParams& params);

/// exp(-D / tau), elementwise, with subnormal results flushed to 0. W is in [0, 1].
Eigen::MatrixXd proximity_weights(const Eigen::MatrixXd& distance, double tau);

/// [0/L, 1/L, ..., (L-1)/L] as a 1 x L row.
Eigen::MatrixXd temporal_positions(std::size_t key_length);

/// Score hooks in bias form, for attention_forward.
ScoreBias nonzero_focus_bias(const Eigen::MatrixXd& weights, double lambda_scale);
ScoreBias temporal_focus_bias(std::size_t key_length, double alpha_scale);

/// S~[b,h,i,j] = S[b,h,i,j] + lambda * W[b,j]. Throws on a key-length mismatch.
Tensor4 nonzero_focus_hook(const Tensor4& scores, const Eigen::MatrixXd& weights, double lambda_scale);

/// S~[b,h,i,j] = S[b,h,i,j] + alpha * j / L_K.
Tensor4 temporal_focus_hook(const Tensor4& scores, double alpha_scale);

}  // namespace nowcast::bfpf

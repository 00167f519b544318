#pragma once

#include "nowcast/bfpf.hpp"
#include "nowcast/models.hpp"

namespace nowcast {

struct TransformerConfig {
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t ff_dim = 64;
  bool bfpf_enabled = false;
  bfpf::BfpfParams bfpf;

  void validate() const;
};

/// Pre-norm encoder over hourly tokens with a flatten-then-linear head.
/// When BFPF is enabled every attention layer receives the same two key-axis
/// biases: lambda * exp(-D/tau) from the raw rain input and alpha * j/L.
/// lambda and alpha are trailing parameters shared by all layers.
class TransformerForecaster final : public TrainableForecaster {
 public:
  TransformerForecaster(WindowConfig w, Normalizer norm, TransformerConfig cfg);

  std::string name() const override { return cfg_.bfpf_enabled ? "transformer_bfpf" : "transformer"; }
  const TransformerConfig& config() const { return cfg_; }

  void initialize(Seed seed) override;
  ad::Var forward(ad::Tape& tape, const Batch& batch, std::span<const ad::Var> vars) const override;

  /// Current learned scales (initial values when the component is off).
  double lambda_scale() const;
  double alpha_scale() const;

 private:
  std::size_t lambda_index_ = 0;  // 0 = absent
  std::size_t alpha_index_ = 0;
  TransformerConfig cfg_;
  Eigen::MatrixXd positional_;  // L x d_model sinusoidal table
  std::vector<double> init_fan_in_;
  std::vector<ad::Matrix> init_values_;
};

}  // namespace nowcast

#include "nowcast/transformer.hpp"

#include <cmath>

#include "nowcast/attention.hpp"

namespace nowcast {

void TransformerConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || n_layers == 0 || ff_dim == 0)
    throw Error("invalid transformer config: sizes must be positive");
  if (d_model % n_heads != 0) throw Error("invalid transformer config: d_model must be divisible by n_heads");
  if (bfpf_enabled) bfpf.validate();
}

namespace {

// Per-layer parameter slots, relative to the layer's first index.
enum LayerSlot : std::size_t {
  kLn1Gain, kLn1Bias, kWq, kWk, kWv, kWo, kBo, kLn2Gain, kLn2Bias, kFf1W, kFf1B, kFf2W, kFf2B, kLayerSlots
};

Eigen::MatrixXd sinusoidal_table(std::size_t len, std::size_t d) {
  Eigen::MatrixXd pe(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(d));
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) * freq;
      pe(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i)) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace

TransformerForecaster::TransformerForecaster(WindowConfig w, Normalizer norm, TransformerConfig cfg)
    : TrainableForecaster(w, norm), cfg_(cfg) {
  cfg_.validate();
  w.validate();
  const auto d = static_cast<Eigen::Index>(cfg_.d_model);
  const auto ff = static_cast<Eigen::Index>(cfg_.ff_dim);
  const auto lin = static_cast<Eigen::Index>(w.input_length);
  const auto lout = static_cast<Eigen::Index>(w.output_length);
  const auto nvar = static_cast<Eigen::Index>(kNumVariables);
  using M = ad::Matrix;

  // fan_in == 0 marks a parameter with a fixed (non-random) initial value.
  const auto add = [this](std::string name, M value, Eigen::Index fan_in) {
    init_fan_in_.push_back(static_cast<double>(fan_in));
    init_values_.push_back(value);
    params_.push_back({std::move(name), std::move(value)});
  };
  add("embed.weight", M::Zero(nvar, d), nvar);
  add("embed.bias", M::Zero(1, d), nvar);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "ln1.gain", M::Ones(1, d), 0);
    add(p + "ln1.bias", M::Zero(1, d), 0);
    add(p + "attn.wq", M::Zero(d, d), d);
    add(p + "attn.wk", M::Zero(d, d), d);
    add(p + "attn.wv", M::Zero(d, d), d);
    add(p + "attn.wo", M::Zero(d, d), d);
    add(p + "attn.bo", M::Zero(1, d), d);
    add(p + "ln2.gain", M::Ones(1, d), 0);
    add(p + "ln2.bias", M::Zero(1, d), 0);
    add(p + "ff1.weight", M::Zero(d, ff), d);
    add(p + "ff1.bias", M::Zero(1, ff), d);
    add(p + "ff2.weight", M::Zero(ff, d), ff);
    add(p + "ff2.bias", M::Zero(1, d), ff);
  }
  add("final_ln.gain", M::Ones(1, d), 0);
  add("final_ln.bias", M::Zero(1, d), 0);
  add("head.weight", M::Zero(lin * d, lout), lin * d);
  add("head.bias", M::Zero(1, lout), lin * d);
  if (cfg_.bfpf_enabled && cfg_.bfpf.nonzero_focus) {
    lambda_index_ = params_.size();
    add("bfpf.lambda", M::Constant(1, 1, cfg_.bfpf.lambda_scale), 0);
  }
  if (cfg_.bfpf_enabled && cfg_.bfpf.temporal_focus) {
    alpha_index_ = params_.size();
    add("bfpf.alpha", M::Constant(1, 1, cfg_.bfpf.alpha_scale), 0);
  }
  positional_ = sinusoidal_table(w.input_length, cfg_.d_model);
}

double TransformerForecaster::lambda_scale() const {
  return lambda_index_ ? params_[lambda_index_].value(0, 0) : cfg_.bfpf.lambda_scale;
}

double TransformerForecaster::alpha_scale() const {
  return alpha_index_ ? params_[alpha_index_].value(0, 0) : cfg_.bfpf.alpha_scale;
}

void TransformerForecaster::initialize(Seed seed) {
  Rng rng(seed.value);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (init_fan_in_[i] > 0.0) {
      fill_uniform(params_[i].value, 1.0 / std::sqrt(init_fan_in_[i]), rng);
    } else {
      params_[i].value = init_values_[i];
    }
  }
}

ad::Var TransformerForecaster::forward(ad::Tape& tape, const Batch& batch, std::span<const ad::Var> vars) const {
  if (vars.size() != params_.size()) throw Error("transformer: parameter binding mismatch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const auto lin = static_cast<Eigen::Index>(window_.input_length);
  const auto d = static_cast<Eigen::Index>(cfg_.d_model);
  if (batch.x.rows() != b * lin || batch.raw_tp.cols() != lin) throw Error("shape mismatch: transformer batch");

  std::vector<ad::KeyBias> biases;
  if (lambda_index_) {
    const Eigen::MatrixXd dist = bfpf::zero_distance(batch.raw_tp, cfg_.bfpf);
    biases.push_back({bfpf::proximity_weights(dist, cfg_.bfpf.tau), vars[lambda_index_]});
  }
  if (alpha_index_) biases.push_back({bfpf::temporal_positions(window_.input_length), vars[alpha_index_]});

  Eigen::MatrixXd pe(b * lin, d);
  for (Eigen::Index i = 0; i < b; ++i) pe.middleRows(i * lin, lin) = positional_;

  const ad::Var x = tape.constant(batch.x);
  ad::Var h = ad::add_constant(ad::add_row(ad::matmul(x, vars[0]), vars[1]), pe);
  std::size_t base = 2;
  for (std::size_t l = 0; l < cfg_.n_layers; ++l, base += kLayerSlots) {
    const auto at = [&](LayerSlot s) { return vars[base + s]; };
    const ad::Var a = ad::layer_norm(h, at(kLn1Gain), at(kLn1Bias));
    const ad::Var q = ad::matmul(a, at(kWq));
    const ad::Var k = ad::matmul(a, at(kWk));
    const ad::Var v = ad::matmul(a, at(kWv));
    const ad::Var ctx = ad::multi_head_attention(q, k, v, batch.size(), cfg_.n_heads, biases);
    h = ad::add(h, ad::add_row(ad::matmul(ctx, at(kWo)), at(kBo)));
    const ad::Var a2 = ad::layer_norm(h, at(kLn2Gain), at(kLn2Bias));
    const ad::Var f = ad::gelu(ad::add_row(ad::matmul(a2, at(kFf1W)), at(kFf1B)));
    h = ad::add(h, ad::add_row(ad::matmul(f, at(kFf2W)), at(kFf2B)));
  }
  const ad::Var hf = ad::layer_norm(h, vars[base], vars[base + 1]);
  const ad::Var flat = ad::reshape(hf, b, lin * d);
  return ad::add_row(ad::matmul(flat, vars[base + 2]), vars[base + 3]);
}

}  // namespace nowcast

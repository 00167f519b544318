#include "nowcast/gradcheck.hpp"

#include <cmath>

namespace nowcast {

namespace {

double loss_value(const TrainableForecaster& model, const Batch& batch) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& p : model.parameters()) vars.push_back(tape.constant(p.value));
  return ad::mse_loss(model.forward(tape, batch, vars), batch.y_norm).value()(0, 0);
}

}  // namespace

GradCheckResult grad_check(TrainableForecaster& model, const Batch& batch, double tolerance, double step) {
  ad::Tape tape;
  const std::vector<ad::Var> vars = model.bind(tape);
  const ad::Var loss = ad::mse_loss(model.forward(tape, batch, vars), batch.y_norm);
  tape.backward(loss);

  GradCheckResult result;
  auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ad::Matrix analytic = vars[i].grad();
    ParameterGradError pe{params[i].name, 0.0, analytic.norm()};
    ad::Matrix& w = params[i].value;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double saved = w(r, c);
        w(r, c) = saved + step;
        const double up = loss_value(model, batch);
        w(r, c) = saved - step;
        const double down = loss_value(model, batch);
        w(r, c) = saved;
        const double fd = (up - down) / (2.0 * step);
        const double g = analytic(r, c);
        const double rel = std::abs(g - fd) / std::max(std::abs(g), 1e-8);
        pe.max_rel_error = std::max(pe.max_rel_error, rel);
        ++result.n_checked;
      }
    }
    if (pe.max_rel_error > result.max_rel_error || result.worst_parameter.empty()) {
      result.max_rel_error = std::max(result.max_rel_error, pe.max_rel_error);
      result.worst_parameter = pe.name;
    }
    result.per_parameter.push_back(pe);
  }
  result.passed = result.max_rel_error < tolerance;
  return result;
}

GradCheckSetup make_gradcheck_setup(bool bfpf, std::uint64_t seed) {
  constexpr std::size_t kBatch = 2;
  WindowConfig w;
  w.input_length = 8;
  w.output_length = 2;
  TransformerConfig tc;
  tc.d_model = 8;
  tc.n_heads = 2;
  tc.n_layers = 2;
  tc.ff_dim = 16;
  tc.bfpf_enabled = bfpf;
  tc.bfpf.lambda_scale = 0.7;
  tc.bfpf.alpha_scale = 0.4;

  GradCheckSetup s;
  s.model = std::make_unique<TransformerForecaster>(w, Normalizer(), tc);
  s.model->initialize(Seed{seed});
  Rng rng(mix_seed(seed, 0x6C));
  const auto L = static_cast<Eigen::Index>(w.input_length);
  const auto B = static_cast<Eigen::Index>(kBatch);
  s.batch.x.resize(B * L, static_cast<Eigen::Index>(kNumVariables));
  s.batch.raw_tp.resize(B, L);
  s.batch.y_norm.resize(B, static_cast<Eigen::Index>(w.output_length));
  for (Eigen::Index i = 0; i < s.batch.x.size(); ++i) s.batch.x.data()[i] = rng.normal();
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index j = 0; j < L; ++j) s.batch.raw_tp(b, j) = rng.uniform() < 0.8 ? 0.0 : rng.uniform(0.2, 6.0);
  s.batch.raw_tp(0, 3) = 1.5;  // at least one rainy key per window
  s.batch.raw_tp(1, 6) = 2.5;
  for (Eigen::Index i = 0; i < s.batch.y_norm.size(); ++i) s.batch.y_norm.data()[i] = rng.normal();
  s.batch.y_raw = s.batch.y_norm;
  return s;
}

}  // namespace nowcast

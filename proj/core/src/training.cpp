#include "nowcast/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nowcast {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
    throw Error("invalid train config: optimizer constants");
  if (batch_size == 0 || max_epochs == 0 || patience == 0) throw Error("invalid train config: counts must be positive");
}

double evaluate_loss(const TrainableForecaster& model, std::span<const WindowedSample> samples) {
  if (samples.empty()) throw Error("evaluate_loss: no samples");
  constexpr std::size_t kChunk = 256;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t begin = 0; begin < samples.size(); begin += kChunk) {
    const std::size_t end = std::min(samples.size(), begin + kChunk);
    const Batch batch = make_batch(samples.subspan(begin, end - begin), model.normalizer());
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& p : model.parameters()) vars.push_back(tape.constant(p.value));
    const ad::Var y = model.forward(tape, batch, vars);
    total += (y.value() - batch.y_norm).squaredNorm();
    count += static_cast<std::size_t>(batch.y_norm.size());
  }
  return total / static_cast<double>(count);
}

namespace {

class Adam {
 public:
  Adam(const std::vector<Parameter>& params, const TrainConfig& tc) : tc_(tc) {
    for (const auto& p : params) {
      m_.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }

  void step(std::vector<Parameter>& params, const std::vector<ad::Var>& vars) {
    ++t_;
    const double c1 = 1.0 - std::pow(tc_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(tc_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const ad::Matrix& g = vars[i].grad();
      m_[i] = tc_.beta1 * m_[i] + (1.0 - tc_.beta1) * g;
      v_[i] = tc_.beta2 * v_[i] + (1.0 - tc_.beta2) * g.cwiseProduct(g);
      params[i].value.array() -=
          tc_.learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + tc_.epsilon);
    }
  }

 private:
  TrainConfig tc_;
  std::vector<ad::Matrix> m_;
  std::vector<ad::Matrix> v_;
  std::size_t t_ = 0;
};

}  // namespace

TrainResult fit(TrainableForecaster& model, std::span<const WindowedSample> train,
                std::span<const WindowedSample> val, const TrainConfig& tc, Seed seed) {
  tc.validate();
  if (train.empty() || val.empty()) throw Error("fit requires non-empty train and val sets");
  model.initialize(Seed{mix_seed(seed.value, 0x1417)});
  Rng order_rng(mix_seed(seed.value, 0xBA7C));

  Adam adam(model.parameters(), tc);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.best_val_loss = evaluate_loss(model, val);
  std::vector<Parameter> best = model.parameters();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    std::size_t n_batches = (order.size() + tc.batch_size - 1) / tc.batch_size;
    if (tc.max_batches_per_epoch > 0) n_batches = std::min(n_batches, tc.max_batches_per_epoch);

    double loss_sum = 0.0;
    for (std::size_t bi = 0; bi < n_batches; ++bi) {
      const std::size_t begin = bi * tc.batch_size;
      const std::size_t end = std::min(order.size(), begin + tc.batch_size);
      const Batch batch = make_batch(train, std::span<const std::size_t>(order).subspan(begin, end - begin),
                                     model.normalizer());
      ad::Tape tape;
      const std::vector<ad::Var> vars = model.bind(tape);
      const ad::Var loss = ad::mse_loss(model.forward(tape, batch, vars), batch.y_norm);
      const double lv = loss.value()(0, 0);
      if (!std::isfinite(lv)) throw Error("diverged: epoch " + std::to_string(epoch));
      loss_sum += lv;
      tape.backward(loss);
      adam.step(model.parameters(), vars);
    }

    const double val_loss = evaluate_loss(model, val);
    if (!std::isfinite(val_loss)) throw Error("diverged: epoch " + std::to_string(epoch));
    result.trace.push_back({epoch, loss_sum / static_cast<double>(n_batches), val_loss});
    if (val_loss < result.best_val_loss || result.best_epoch == 0) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best = model.parameters();
      since_best = 0;
    } else if (++since_best >= tc.patience) {
      break;
    }
  }
  model.parameters() = best;
  return result;
}

}  // namespace nowcast

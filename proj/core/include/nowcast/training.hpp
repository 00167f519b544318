#pragma once

#include <span>
#include <vector>

#include "nowcast/models.hpp"

namespace nowcast {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 50;
  std::size_t patience = 3;
  /// 0 = use every training window each epoch; otherwise cap the number of
  /// mini-batches per epoch (drawn from the shuffled order).
  std::size_t max_batches_per_epoch = 0;

  void validate() const;
};

struct EpochTrace {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochTrace> trace;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Mean normalised-space MSE over the samples.
double evaluate_loss(const TrainableForecaster& model, std::span<const WindowedSample> samples);

/// Initialises from `seed`, runs mini-batch Adam on normalised MSE with
/// early stopping on validation loss, and leaves the best-epoch parameters
/// in the model. Throws Error("diverged: epoch N") on a non-finite loss.
TrainResult fit(TrainableForecaster& model, std::span<const WindowedSample> train,
                std::span<const WindowedSample> val, const TrainConfig& tc, Seed seed);

}  // namespace nowcast

#pragma once

#include <string>
#include <vector>

#include <memory>

#include "nowcast/transformer.hpp"

namespace nowcast {

struct ParameterGradError {
  std::string name;
  double max_rel_error = 0.0;
  double grad_norm = 0.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t n_checked = 0;
  std::vector<ParameterGradError> per_parameter;
  bool passed = false;
};

/// Compares reverse-mode gradients of the normalised MSE loss on `batch`
/// against central differences for every parameter entry. The relative error
/// of one entry is |g_ad - g_fd| / max(|g_ad|, 1e-8).
GradCheckResult grad_check(TrainableForecaster& model, const Batch& batch, double tolerance = 1e-5,
                           double step = 1e-5);

/// Small transformer (L=8, d_model=8, 2 heads, 2 layers) with a random
/// batch of two windows whose rain inputs are mostly zero. With `bfpf` both
/// hooks are active and lambda/alpha start away from zero.
struct GradCheckSetup {
  std::unique_ptr<TransformerForecaster> model;
  Batch batch;
};
GradCheckSetup make_gradcheck_setup(bool bfpf, std::uint64_t seed);

}  // namespace nowcast

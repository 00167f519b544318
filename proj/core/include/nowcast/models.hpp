#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nowcast/autodiff.hpp"
#include "nowcast/bfpf.hpp"
#include "nowcast/rng.hpp"
#include "nowcast/windowing.hpp"

namespace nowcast {

/// Common forecasting interface. predict() returns de-normalised mm/h,
/// clamped at zero.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  virtual std::string name() const = 0;
  virtual bool trainable() const { return false; }
  const WindowConfig& window() const { return window_; }

  /// x is L_in x 6 (normalised), raw_tp is L_in (mm/h). Throws on shape mismatch.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x, const Eigen::VectorXd& raw_tp) const;
  Eigen::VectorXd predict(const WindowedSample& s) const { return predict(s.x, s.raw_tp); }
  /// One row per sample.
  virtual Eigen::MatrixXd predict_all(std::span<const WindowedSample> samples) const;

 protected:
  explicit Forecaster(WindowConfig window) : window_(window) {}
  void check_shapes(const Eigen::MatrixXd& x, const Eigen::VectorXd& raw_tp) const;
  virtual Eigen::VectorXd predict_raw(const Eigen::MatrixXd& x, const Eigen::VectorXd& raw_tp) const = 0;

  WindowConfig window_;
};

class ZeroForecaster final : public Forecaster {
 public:
  explicit ZeroForecaster(WindowConfig w) : Forecaster(w) {}
  std::string name() const override { return "zero"; }

 protected:
  Eigen::VectorXd predict_raw(const Eigen::MatrixXd& x, const Eigen::VectorXd& raw_tp) const override;
};

/// Repeats the last observed hourly rain rate.
class PersistenceForecaster final : public Forecaster {
 public:
  explicit PersistenceForecaster(WindowConfig w) : Forecaster(w) {}
  std::string name() const override { return "persistence"; }

 protected:
  Eigen::VectorXd predict_raw(const Eigen::MatrixXd& x, const Eigen::VectorXd& raw_tp) const override;
};

/// Mean of the last `window` hourly rain rates, repeated over the horizon.
class MovingAverageForecaster final : public Forecaster {
 public:
  MovingAverageForecaster(WindowConfig w, std::size_t window = 6);
  std::string name() const override { return "moving_average"; }
  std::size_t span() const { return span_; }

 protected:
  Eigen::VectorXd predict_raw(const Eigen::MatrixXd& x, const Eigen::VectorXd& raw_tp) const override;

 private:
  std::size_t span_;
};

struct Parameter {
  std::string name;
  ad::Matrix value;
};

/// Models fitted by gradient descent. Parameters live outside the tape and
/// are declared in a fixed order (checkpoint order).
class TrainableForecaster : public Forecaster {
 public:
  bool trainable() const override { return true; }

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  const Normalizer& normalizer() const { return norm_; }
  std::size_t parameter_count() const;

  /// Re-draws every weight from the seed: uniform in +-1/sqrt(fan_in).
  virtual void initialize(Seed seed) = 0;

  /// Normalised predictions, B x L_out. `vars` must hold one tape variable
  /// per parameter, in declaration order.
  virtual ad::Var forward(ad::Tape& tape, const Batch& batch, std::span<const ad::Var> vars) const = 0;

  /// Leaf variables for every parameter on `tape`.
  std::vector<ad::Var> bind(ad::Tape& tape) const;

  Eigen::MatrixXd predict_all(std::span<const WindowedSample> samples) const override;

 protected:
  TrainableForecaster(WindowConfig w, Normalizer norm) : Forecaster(w), norm_(norm) {}
  Eigen::VectorXd predict_raw(const Eigen::MatrixXd& x, const Eigen::VectorXd& raw_tp) const override;
  Eigen::MatrixXd denormalize(const Eigen::MatrixXd& y_norm) const;

  Normalizer norm_;
  std::vector<Parameter> params_;
};

/// Flattened input window -> horizon, one dense layer.
class LinearForecaster final : public TrainableForecaster {
 public:
  LinearForecaster(WindowConfig w, Normalizer norm);
  std::string name() const override { return "linear"; }
  void initialize(Seed seed) override;
  ad::Var forward(ad::Tape& tape, const Batch& batch, std::span<const ad::Var> vars) const override;
};

/// Uniform(-bound, bound) fill from a seeded stream.
void fill_uniform(ad::Matrix& m, double bound, Rng& rng);

}  // namespace nowcast

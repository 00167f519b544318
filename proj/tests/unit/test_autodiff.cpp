#include <gtest/gtest.h>

#include <functional>

#include "nowcast/autodiff.hpp"
#include "nowcast/models.hpp"
#include "nowcast/gradcheck.hpp"
#include "nowcast/rng.hpp"

using namespace nowcast;
using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

using Fn = std::function<Var(Tape&, const std::vector<Var>&)>;

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

/// Largest |analytic - central difference| / max(|analytic|, 1e-8) over all inputs.
double max_rel_error(const Fn& f, std::vector<Matrix> inputs) {
  Tape tape;
  std::vector<Var> vars;
  for (const Matrix& m : inputs) vars.push_back(tape.variable(m));
  tape.backward(f(tape, vars));
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Matrix g = vars[i].grad();
    for (Eigen::Index e = 0; e < inputs[i].size(); ++e) {
      auto eval = [&](double delta) {
        std::vector<Matrix> moved = inputs;
        moved[i].data()[e] += delta;
        Tape t;
        std::vector<Var> vs;
        for (const Matrix& m : moved) vs.push_back(t.constant(m));
        return f(t, vs).value()(0, 0);
      };
      const double fd = (eval(h) - eval(-h)) / (2 * h);
      worst = std::max(worst, std::abs(g.data()[e] - fd) / std::max(std::abs(g.data()[e]), 1e-8));
    }
  }
  return worst;
}

/// Scalar projection of x so every entry gets a distinct gradient.
Var weighted_sum(Tape& t, Var x, std::uint64_t seed) {
  Rng rng(seed);
  const Var w = t.constant(random_matrix(x.cols(), 1, rng));
  return ad::sum(ad::matmul(x, w));
}

}  // namespace

TEST(Autodiff, MatmulAndAdd) {
  Rng rng(1);
  const Fn f = [](Tape& t, const std::vector<Var>& v) {
    return weighted_sum(t, ad::add(ad::matmul(v[0], v[1]), v[2]), 5);
  };
  EXPECT_LT(max_rel_error(f, {random_matrix(3, 4, rng), random_matrix(4, 2, rng), random_matrix(3, 2, rng)}), 1e-7);
}

TEST(Autodiff, AddRowScaleConstant) {
  Rng rng(2);
  const Fn f = [](Tape& t, const std::vector<Var>& v) {
    Rng r(9);
    return weighted_sum(t, ad::scale(ad::add_constant(ad::add_row(v[0], v[1]), random_matrix(4, 3, r)), -1.7), 6);
  };
  EXPECT_LT(max_rel_error(f, {random_matrix(4, 3, rng), random_matrix(1, 3, rng)}), 1e-7);
}

TEST(Autodiff, Gelu) {
  Rng rng(3);
  const Fn f = [](Tape& t, const std::vector<Var>& v) { return weighted_sum(t, ad::gelu(v[0]), 7); };
  EXPECT_LT(max_rel_error(f, {random_matrix(5, 4, rng)}), 1e-6);
}

TEST(Autodiff, LayerNorm) {
  Rng rng(4);
  const Fn f = [](Tape& t, const std::vector<Var>& v) {
    return weighted_sum(t, ad::layer_norm(v[0], v[1], v[2]), 8);
  };
  EXPECT_LT(max_rel_error(f, {random_matrix(6, 5, rng), random_matrix(1, 5, rng), random_matrix(1, 5, rng)}), 1e-6);
}

TEST(Autodiff, LayerNormForward) {
  Tape t;
  Matrix x(1, 4);
  x << 1, 2, 3, 4;
  const Var y = ad::layer_norm(t.constant(x), t.constant(Matrix::Ones(1, 4)), t.constant(Matrix::Zero(1, 4)), 0.0);
  const double sd = std::sqrt(1.25);
  EXPECT_NEAR(y.value()(0, 0), -1.5 / sd, 1e-12);
  EXPECT_NEAR(y.value()(0, 3), 1.5 / sd, 1e-12);
}

TEST(Autodiff, ReshapeRowMajor) {
  Tape t;
  Matrix x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  const Var y = ad::reshape(t.constant(x), 3, 2);
  Matrix expect(3, 2);
  expect << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(y.value(), expect);
  Rng rng(5);
  const Fn f = [](Tape& tp, const std::vector<Var>& v) { return weighted_sum(tp, ad::reshape(v[0], 2, 6), 3); };
  EXPECT_LT(max_rel_error(f, {random_matrix(4, 3, rng)}), 1e-7);
}

TEST(Autodiff, MseLoss) {
  Rng rng(6);
  const Matrix target = random_matrix(3, 3, rng);
  const Fn f = [&](Tape&, const std::vector<Var>& v) { return ad::mse_loss(v[0], target); };
  const Matrix x = random_matrix(3, 3, rng);
  EXPECT_LT(max_rel_error(f, {x}), 1e-7);
  Tape t;
  EXPECT_NEAR(ad::mse_loss(t.constant(x), target).value()(0, 0), (x - target).squaredNorm() / 9.0, 1e-15);
}

TEST(Autodiff, SharedSubexpressionAccumulates) {
  Rng rng(7);
  const Fn f = [](Tape& t, const std::vector<Var>& v) {
    const Var a = ad::gelu(v[0]);
    return weighted_sum(t, ad::add(ad::matmul(a, v[1]), ad::matmul(a, v[1])), 2);
  };
  EXPECT_LT(max_rel_error(f, {random_matrix(3, 3, rng), random_matrix(3, 2, rng)}), 1e-6);
}

TEST(Autodiff, ConstantsGetNoGradient) {
  Tape t;
  const Var c = t.constant(Matrix::Ones(2, 2));
  const Var w = t.variable(Matrix::Ones(2, 2));
  t.backward(ad::sum(ad::matmul(c, w)));
  EXPECT_FALSE(t.requires_grad(c.id));
  EXPECT_EQ(w.grad(), Matrix::Constant(2, 2, 2.0));
}

TEST(GradCheck, LinearForecasterExact) {
  WindowConfig w;
  w.input_length = 6;
  w.output_length = 3;
  LinearForecaster model(w, Normalizer());
  model.initialize(Seed{3});
  Rng rng(3);
  Batch b;
  b.x = random_matrix(4 * 6, 6, rng);
  b.raw_tp = Matrix::Zero(4, 6);
  b.y_norm = random_matrix(4, 3, rng);
  b.y_raw = b.y_norm;
  const GradCheckResult r = grad_check(model, b, 1e-7);
  EXPECT_TRUE(r.passed) << r.max_rel_error << " at " << r.worst_parameter;
  EXPECT_EQ(r.n_checked, model.parameter_count());
}

TEST(GradCheck, TransformerWithoutBfpf) {
  GradCheckSetup s = make_gradcheck_setup(false, 5);
  const GradCheckResult r = grad_check(*s.model, s.batch, 1e-5);
  EXPECT_TRUE(r.passed) << r.max_rel_error << " at " << r.worst_parameter;
  for (const auto& p : r.per_parameter) EXPECT_NE(p.name.rfind("bfpf", 0), 0u);
}

TEST(GradCheck, TransformerWithBothHooks) {
  GradCheckSetup s = make_gradcheck_setup(true, 6);
  const GradCheckResult r = grad_check(*s.model, s.batch, 1e-5);
  EXPECT_TRUE(r.passed) << r.max_rel_error << " at " << r.worst_parameter;
  bool saw_lambda = false, saw_alpha = false;
  for (const auto& p : r.per_parameter) {
    if (p.name == "bfpf.lambda") {
      saw_lambda = true;
      EXPECT_GT(p.grad_norm, 0.0);
    }
    if (p.name == "bfpf.alpha") {
      saw_alpha = true;
      EXPECT_GT(p.grad_norm, 0.0);
    }
  }
  EXPECT_TRUE(saw_lambda);
  EXPECT_TRUE(saw_alpha);
}

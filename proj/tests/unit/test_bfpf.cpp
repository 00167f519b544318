#include <gtest/gtest.h>

#include <cmath>

#include "nowcast/bfpf.hpp"
#include "nowcast/core_types.hpp"
#include "nowcast/rng.hpp"
#include "nowcast/transformer.hpp"
#include "oracles.hpp"

using namespace nowcast;
using bfpf::BfpfParams;

namespace {

Eigen::MatrixXd row(std::initializer_list<double> v) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

Tensor4 random_scores(std::size_t b, std::size_t h, std::size_t l, Rng& rng) {
  Tensor4 t(b, h, l, l);
  for (double& x : t.data) x = rng.normal();
  return t;
}

}  // namespace

TEST(ZeroDistance, MixedRow) {
  const BfpfParams p;
  const Eigen::MatrixXd d = bfpf::zero_distance(row({0, 2, 3, 0, 5}), p);
  const double s = p.sentinel;
  EXPECT_EQ(d, row({s, 1, 1, s, 1}));
}

TEST(ZeroDistance, AllZeroIsSentinelEverywhere) {
  const BfpfParams p;
  const Eigen::MatrixXd d = bfpf::zero_distance(row({0, 0, 0, 0}), p);
  EXPECT_TRUE((d.array() == p.sentinel).all());
  EXPECT_TRUE((bfpf::proximity_weights(d, p.tau).array() == 0.0).all());
}

TEST(ZeroDistance, NoZeroIsSentinel) {
  const BfpfParams p;
  const Eigen::MatrixXd d = bfpf::zero_distance(row({5, 7}), p);
  EXPECT_EQ(d, row({p.sentinel, p.sentinel}));
}

TEST(ZeroDistance, TinyPositiveIsNotZero) {
  const BfpfParams p;
  const Eigen::MatrixXd d = bfpf::zero_distance(row({1e-300, 0, 4}), p);
  EXPECT_EQ(d, row({1, p.sentinel, 1}));
}

TEST(ZeroDistance, MatchesQuadraticOracle) {
  Rng rng(11);
  const BfpfParams p;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index L = 1 + static_cast<Eigen::Index>(rng.below(64));
    Eigen::MatrixXd x(2, L);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform() < 0.8 ? 0.0 : rng.exponential(2.0);
    EXPECT_EQ(bfpf::zero_distance(x, p), oracle::zero_distance(x, p.sentinel)) << "trial " << trial;
  }
}

TEST(ProximityWeights, DocumentedValues) {
  EXPECT_NEAR(bfpf::proximity_weights(row({1}), 1.0)(0, 0), 0.36788, 5e-6);
  EXPECT_NEAR(bfpf::proximity_weights(row({2}), 2.0)(0, 0), 0.36788, 5e-6);
  EXPECT_LE(bfpf::proximity_weights(row({1e4}), 2.0)(0, 0), 1e-300);
}

TEST(ProximityWeights, ValuesAndRange) {
  Eigen::MatrixXd d = row({0, 1, 2, 1e4});
  const Eigen::MatrixXd w = bfpf::proximity_weights(d, 2.0);
  EXPECT_DOUBLE_EQ(w(0, 0), 1.0);
  EXPECT_NEAR(w(0, 1), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(w(0, 2), std::exp(-1.0), 1e-15);
  EXPECT_EQ(w(0, 3), 0.0);
  // Larger distance never gets a larger weight.
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(0, 20), b = rng.uniform(0, 20);
    const Eigen::MatrixXd wa = bfpf::proximity_weights(row({a, b}), 1.5);
    EXPECT_EQ(a <= b, wa(0, 0) >= wa(0, 1) || a == b);
  }
}

TEST(TemporalPositions, EvenlySpaced) {
  EXPECT_EQ(bfpf::temporal_positions(4), row({0.0, 0.25, 0.5, 0.75}));
}

TEST(Hooks, NonzeroFocusAddsBroadcastBias) {
  Rng rng(5);
  const Tensor4 s = random_scores(2, 3, 4, rng);
  Eigen::MatrixXd w(2, 4);
  w << 1, 0, 0.5, 0, 0, 0, 1, 1;
  const Tensor4 out = bfpf::nonzero_focus_hook(s, w, 0.3);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t h = 0; h < 3; ++h)
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
          EXPECT_NEAR(out(b, h, i, j), s(b, h, i, j) + 0.3 * w(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)),
                      1e-15);
}

TEST(Hooks, NonzeroFocusRejectsKeyMismatch) {
  Rng rng(6);
  const Tensor4 s = random_scores(1, 1, 4, rng);
  EXPECT_THROW(bfpf::nonzero_focus_hook(s, Eigen::MatrixXd::Zero(1, 3), 0.1), Error);
}

TEST(Hooks, TemporalFocusAddsPositionBias) {
  Rng rng(7);
  const Tensor4 s = random_scores(1, 2, 5, rng);
  const Tensor4 out = bfpf::temporal_focus_hook(s, 2.0);
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        EXPECT_NEAR(out(0, h, i, j), s(0, h, i, j) + 2.0 * static_cast<double>(j) / 5.0, 1e-15);
}

TEST(Hooks, ApplicationOrderCommutes) {
  Rng rng(8);
  const Tensor4 s = random_scores(2, 2, 6, rng);
  Eigen::MatrixXd w(2, 6);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform();
  const Tensor4 a = bfpf::temporal_focus_hook(bfpf::nonzero_focus_hook(s, w, 0.4), 0.9);
  const Tensor4 b = bfpf::nonzero_focus_hook(bfpf::temporal_focus_hook(s, 0.9), w, 0.4);
  for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-14);
}

TEST(Hooks, ZeroScalesAreIdentity) {
  Rng rng(9);
  const Tensor4 s = random_scores(1, 1, 5, rng);
  const Tensor4 a = bfpf::temporal_focus_hook(bfpf::nonzero_focus_hook(s, Eigen::MatrixXd::Ones(1, 5), 0.0), 0.0);
  EXPECT_EQ(a.data, s.data);
}

TEST(Hooks, PositiveAlphaShiftsMassToRecentKeys) {
  // Uniform scores: the temporal bias alone decides, so later keys get more weight.
  Tensor4 q(1, 1, 3, 2, 0.0);
  Tensor4 v(1, 1, 3, 2, 0.0);
  const std::vector<ScoreBias> hooks = {bfpf::temporal_focus_bias(3, 1.0)};
  const AttentionResult r = attention_forward(q, q, v, hooks);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LT(r.weights(0, 0, i, 0), r.weights(0, 0, i, 1));
    EXPECT_LT(r.weights(0, 0, i, 1), r.weights(0, 0, i, 2));
  }
}

TEST(Hooks, PositiveLambdaFavoursKeysNearDryHours) {
  const BfpfParams p;
  const Eigen::MatrixXd raw = row({3, 0, 2, 5, 6});
  const Eigen::MatrixXd w = bfpf::proximity_weights(bfpf::zero_distance(raw, p), p.tau);
  Tensor4 q(1, 1, 5, 2, 0.0);
  Tensor4 v(1, 1, 5, 2, 0.0);
  const std::vector<ScoreBias> hooks = {bfpf::nonzero_focus_bias(w, 1.0)};
  const AttentionResult r = attention_forward(q, q, v, hooks);
  // Keys 0 and 2 sit next to the dry hour; key 4 is three steps away.
  EXPECT_GT(r.weights(0, 0, 0, 0), r.weights(0, 0, 0, 4));
  EXPECT_GT(r.weights(0, 0, 0, 2), r.weights(0, 0, 0, 3));
  EXPECT_NEAR(r.weights(0, 0, 0, 0), r.weights(0, 0, 0, 2), 1e-15);
}

TEST(Hooks, NonzeroFocusSoftmaxExample) {
  Tensor4 q(1, 1, 1, 1, 0.0);
  Tensor4 k(1, 1, 2, 1, 0.0);
  const std::vector<ScoreBias> hooks = {bfpf::nonzero_focus_bias(row({0, 1}), std::log(3.0))};
  const AttentionResult r = attention_forward(q, k, k, hooks);
  EXPECT_NEAR(r.weights(0, 0, 0, 0), 0.25, 1e-12);
  EXPECT_NEAR(r.weights(0, 0, 0, 1), 0.75, 1e-12);
}

TEST(Hooks, DryWindowLeavesScoresUnchanged) {
  Rng rng(12);
  const BfpfParams p;
  const Tensor4 s = random_scores(1, 2, 6, rng);
  const Eigen::MatrixXd w = bfpf::proximity_weights(bfpf::zero_distance(Eigen::MatrixXd::Zero(1, 6), p), p.tau);
  const Tensor4 out = bfpf::nonzero_focus_hook(s, w, 5.0);
  for (std::size_t i = 0; i < s.data.size(); ++i) EXPECT_NEAR(out.data[i], s.data[i], 1e-300);
}

TEST(Hooks, PositiveLambdaMovesMassToNonzeroKeys) {
  Rng rng(13);
  const BfpfParams p;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t L = 2 + static_cast<std::size_t>(rng.below(20));
    Eigen::MatrixXd raw(1, static_cast<Eigen::Index>(L));
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(0, i) = rng.uniform() < 0.6 ? 0.0 : rng.exponential(1.0);
    const Eigen::MatrixXd w = bfpf::proximity_weights(bfpf::zero_distance(raw, p), p.tau);
    const bool mixed = (w.array() > 0.0).any() && (w.array() == 0.0).any();
    Eigen::MatrixXd scores(1, static_cast<Eigen::Index>(L));
    for (Eigen::Index i = 0; i < scores.size(); ++i) scores(0, i) = rng.normal();
    const double lambda = rng.uniform(0.01, 3.0);
    const Eigen::MatrixXd base = softmax_rows(scores);
    const Eigen::MatrixXd shifted = softmax_rows(scores + lambda * w);
    double m0 = 0.0, m1 = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (w(0, j) > 0.0) {
        m0 += base(0, j);
        m1 += shifted(0, j);
      }
    }
    if (mixed) {
      EXPECT_GT(m1, m0) << "trial " << trial;
    } else {
      EXPECT_GE(m1, m0 - 1e-15) << "trial " << trial;
    }
  }
}

TEST(Hooks, ArgmaxKeyNeverMovesEarlierAsAlphaGrows) {
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t L = 2 + static_cast<std::size_t>(rng.below(12));
    Eigen::MatrixXd s(1, static_cast<Eigen::Index>(L));
    for (Eigen::Index i = 0; i < s.size(); ++i) s(0, i) = rng.normal();
    std::size_t prev = 0;
    for (double alpha = 0.0; alpha <= 8.0; alpha += 0.25) {
      const Eigen::MatrixXd biased = s + alpha * bfpf::temporal_positions(L);
      std::size_t arg = 0;
      for (Eigen::Index j = 1; j < biased.cols(); ++j)
        if (biased(0, j) >= biased(0, static_cast<Eigen::Index>(arg))) arg = static_cast<std::size_t>(j);
      EXPECT_GE(arg, prev);
      prev = arg;
    }
  }
}

TEST(BfpfParams, Validation) {
  BfpfParams p;
  EXPECT_NO_THROW(p.validate());
  p.tau = 0.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(BfpfTransformer, ZeroScalesMatchPlainTransformer) {
  WindowConfig w;
  w.input_length = 8;
  w.output_length = 2;
  TransformerConfig plain;
  plain.d_model = 8;
  plain.n_heads = 2;
  plain.n_layers = 2;
  plain.ff_dim = 16;
  TransformerConfig with = plain;
  with.bfpf_enabled = true;
  with.bfpf.lambda_scale = 0.0;
  with.bfpf.alpha_scale = 0.0;
  TransformerForecaster a(w, Normalizer(), plain);
  TransformerForecaster b(w, Normalizer(), with);
  a.initialize(Seed{21});
  b.initialize(Seed{21});
  Rng rng(21);
  Eigen::MatrixXd x(8, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Eigen::VectorXd raw(8);
  raw << 0, 1.5, 2, 0, 0, 3, 0.2, 0;
  const Eigen::VectorXd ya = a.predict(x, raw);
  const Eigen::VectorXd yb = b.predict(x, raw);
  EXPECT_LT((ya - yb).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(b.lambda_scale(), 0.0);
  EXPECT_EQ(b.alpha_scale(), 0.0);
}

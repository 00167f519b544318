#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <sstream>

#include "nowcast/model_spec.hpp"
#include "nowcast/rng.hpp"

using namespace nowcast;

namespace {

ModelSpec small_transformer(bool bfpf) {
  ModelSpec s;
  s.name = bfpf ? "tb" : "t";
  s.kind = ModelKind::Transformer;
  s.transformer.d_model = 8;
  s.transformer.n_heads = 2;
  s.transformer.n_layers = 1;
  s.transformer.ff_dim = 16;
  s.transformer.bfpf_enabled = bfpf;
  s.transformer.bfpf.tau = 3.5;
  return s;
}

WindowConfig window() {
  WindowConfig w;
  w.input_length = 12;
  w.output_length = 3;
  return w;
}

}  // namespace

TEST(Checkpoint, TransformerRoundTripIsExact) {
  const ModelSpec spec = small_transformer(true);
  const Normalizer norm = Normalizer::from_stats({290, 101000, 70, 3, 40, 0.4}, {5, 300, 10, 1.5, 6, 1.3});
  auto model = make_forecaster(spec, window(), norm);
  auto& trainable = dynamic_cast<TrainableForecaster&>(*model);
  trainable.initialize(Seed{12});
  trainable.parameters().back().value(0, 0) = 0.37;

  std::stringstream buf;
  save_checkpoint(buf, spec, *model);
  const LoadedModel loaded = load_checkpoint(buf);
  EXPECT_EQ(loaded.spec.name, "tb");
  EXPECT_EQ(loaded.spec.transformer.bfpf.tau, 3.5);
  EXPECT_EQ(loaded.model->window(), window());
  const auto& back = dynamic_cast<const TrainableForecaster&>(*loaded.model);
  ASSERT_EQ(back.parameters().size(), trainable.parameters().size());
  for (std::size_t i = 0; i < back.parameters().size(); ++i)
    EXPECT_EQ(back.parameters()[i].value, trainable.parameters()[i].value) << back.parameters()[i].name;
  EXPECT_EQ(back.normalizer().mean(kSp), 101000.0);
  EXPECT_EQ(back.normalizer().std(kTp), 1.3);

  Rng rng(5);
  Eigen::MatrixXd x(12, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(12);
  raw(10) = 2.0;
  EXPECT_EQ(model->predict(x, raw), loaded.model->predict(x, raw));
}

TEST(Checkpoint, BaselineRoundTrip) {
  ModelSpec spec{"ma3", ModelKind::MovingAverage, 3, {}};
  auto model = make_forecaster(spec, window(), Normalizer());
  std::stringstream buf;
  save_checkpoint(buf, spec, *model);
  const LoadedModel loaded = load_checkpoint(buf);
  EXPECT_EQ(loaded.spec.kind, ModelKind::MovingAverage);
  EXPECT_EQ(loaded.spec.ma_window, 3u);
  EXPECT_EQ(dynamic_cast<const MovingAverageForecaster&>(*loaded.model).span(), 3u);
}

TEST(Checkpoint, LittleEndianLayout) {
  ModelSpec spec{"lin", ModelKind::Linear, 6, {}};
  WindowConfig w;
  w.input_length = 2;
  w.output_length = 1;
  auto model = make_forecaster(spec, w, Normalizer());
  auto& trainable = dynamic_cast<TrainableForecaster&>(*model);
  trainable.initialize(Seed{1});
  trainable.parameters()[1].value(0, 0) = 1.5;  // bias is the last parameter
  std::stringstream buf;
  save_checkpoint(buf, spec, *model);
  const std::string bytes = buf.str();
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 4), "NWB1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
  EXPECT_EQ(bytes.substr(5, 3), std::string(3, '\0'));
  std::uint64_t len = 0;
  for (int i = 7; i >= 0; --i) len = (len << 8) | static_cast<unsigned char>(bytes[8 + static_cast<std::size_t>(i)]);
  EXPECT_EQ(bytes.size(), 16 + len + 13 * 8);
  // Last eight bytes: 1.5 as little-endian IEEE-754.
  std::uint64_t tail = 0;
  for (int i = 7; i >= 0; --i) tail = (tail << 8) | static_cast<unsigned char>(bytes[bytes.size() - 8 + static_cast<std::size_t>(i)]);
  EXPECT_EQ(std::bit_cast<double>(tail), 1.5);
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::stringstream bad_magic("XWB1\x01\0\0\0");
  EXPECT_THROW(load_checkpoint(bad_magic), Error);

  const ModelSpec spec = small_transformer(false);
  auto model = make_forecaster(spec, window(), Normalizer());
  dynamic_cast<TrainableForecaster&>(*model).initialize(Seed{2});
  std::stringstream buf;
  save_checkpoint(buf, spec, *model);
  const std::string full = buf.str();
  std::stringstream truncated(full.substr(0, full.size() - 5));
  try {
    load_checkpoint(truncated);
    FAIL() << "expected truncation error";
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("corrupt checkpoint", 0), 0u);
  }
}

TEST(ModelSpec, KindNames) {
  for (ModelKind k : {ModelKind::Zero, ModelKind::Persistence, ModelKind::MovingAverage, ModelKind::Linear,
                      ModelKind::Transformer})
    EXPECT_EQ(model_kind_from_string(to_string(k)), k);
  EXPECT_THROW(model_kind_from_string("lstm"), Error);
  const auto defaults = default_model_specs();
  ASSERT_EQ(defaults.size(), 6u);
  EXPECT_EQ(defaults.back().name, "transformer_bfpf");
  EXPECT_TRUE(defaults.back().transformer.bfpf_enabled);
  EXPECT_FALSE(defaults[4].transformer.bfpf_enabled);
}

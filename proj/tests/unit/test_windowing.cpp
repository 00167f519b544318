#include <gtest/gtest.h>

#include "nowcast/windowing.hpp"
#include "series_util.hpp"

using namespace nowcast;

TEST(Windowing, HourlyTargetsAreRawTp) {
  const std::vector<double> tp = {0, 1, 2, 3, 4, 5, 6, 7};
  WindowConfig cfg;
  cfg.input_length = 3;
  cfg.output_length = 2;
  const auto windows = make_windows(testutil::series_from_tp(tp), cfg, Normalizer());
  ASSERT_EQ(windows.size(), 4u);
  for (const auto& w : windows) {
    EXPECT_EQ(w.y(0), tp[w.start + 3]);
    EXPECT_EQ(w.y(1), tp[w.start + 4]);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(w.raw_tp(i), tp[w.start + static_cast<std::size_t>(i)]);
  }
}

TEST(Windowing, CoarseResolutionUsesMean) {
  WindowConfig cfg;
  cfg.input_length = 2;
  cfg.output_length = 3;
  cfg.resolution = 2;
  const auto windows = make_windows(testutil::series_from_tp({1, 1, 2, 4, 0, 0, 6, 0}), cfg, Normalizer());
  ASSERT_EQ(windows.size(), 1u);
  EXPECT_EQ(windows[0].y(0), 3.0);
  EXPECT_EQ(windows[0].y(1), 0.0);
  EXPECT_EQ(windows[0].y(2), 3.0);
}

TEST(Windowing, ExactSpanGivesOneWindow) {
  WindowConfig cfg;
  cfg.input_length = 12;
  cfg.output_length = 2;
  cfg.resolution = 3;
  EXPECT_EQ(make_windows(testutil::series_from_tp(std::vector<double>(18, 0.0)), cfg, Normalizer()).size(), 1u);
  EXPECT_THROW(make_windows(testutil::series_from_tp(std::vector<double>(17, 0.0)), cfg, Normalizer()), Error);
}

TEST(Windowing, RequiresQc) {
  auto s = testutil::series_from_tp(std::vector<double>(20, 0.0));
  s.qc_applied = false;
  WindowConfig cfg;
  cfg.input_length = 4;
  cfg.output_length = 1;
  EXPECT_THROW(make_windows(s, cfg, Normalizer()), Error);
}

TEST(Windowing, ConfigValidation) {
  WindowConfig cfg;
  cfg.input_length = 1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.input_length = 16;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_THROW(cfg.validate(true), Error);
  cfg.input_length = 12;
  cfg.output_length = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Windowing, SplitAssignmentNeverLeaksTargets) {
  const std::size_t T = 200;
  std::vector<double> tp(T);
  for (std::size_t i = 0; i < T; ++i) tp[i] = static_cast<double>(i % 7);
  const auto series = testutil::series_from_tp(tp);
  const SplitIndices split = make_split(T);
  for (std::size_t r : {1u, 2u, 3u}) {
    WindowConfig cfg;
    cfg.input_length = 12;
    cfg.output_length = 6 / r;
    cfg.resolution = r;
    const WindowSplits ws = window_dataset(series, cfg, split, Normalizer());
    auto check = [&](const std::vector<WindowedSample>& part, IndexRange range) {
      for (const auto& w : part) {
        const std::size_t first = w.start + cfg.input_length;
        const std::size_t last = w.start + cfg.span_hours() - 1;
        EXPECT_TRUE(range.contains(first));
        EXPECT_TRUE(range.contains(last));
        EXPECT_GE(w.start + cfg.input_length, range.begin);
      }
    };
    check(ws.train, split.train);
    check(ws.val, split.val);
    check(ws.test, split.test);
    // Every window whose whole target lies in one split is kept exactly once.
    std::size_t expected = 0;
    for (std::size_t s = 0; s + cfg.span_hours() <= T; ++s) {
      const std::size_t first = s + cfg.input_length, last = s + cfg.span_hours() - 1;
      for (IndexRange range : {split.train, split.val, split.test})
        if (range.contains(first) && range.contains(last)) ++expected;
    }
    EXPECT_EQ(ws.train.size() + ws.val.size() + ws.test.size(), expected);
  }
}

TEST(Windowing, FirstTestWindowReachesBackIntoValidation) {
  const std::size_t T = 100;
  const auto series = testutil::series_from_tp(std::vector<double>(T, 1.0));
  WindowConfig cfg;
  cfg.input_length = 4;
  cfg.output_length = 2;
  const WindowSplits ws = window_dataset(series, cfg, make_split(T), Normalizer());
  ASSERT_FALSE(ws.test.empty());
  EXPECT_EQ(ws.test.front().start, 80u - 4u);
  EXPECT_EQ(ws.test.size(), 20u - 1u);
}

TEST(Normalizer, FitOnTrainOnlyAndRoundTrip) {
  std::vector<double> tp(100, 0.0);
  for (std::size_t i = 0; i < 100; ++i) tp[i] = i < 70 ? static_cast<double>(i % 3) : 1000.0;
  const auto series = testutil::series_from_tp(tp);
  const Normalizer n = Normalizer::fit(series, make_split(100).train);
  EXPECT_NEAR(n.mean(kTp), (24 * 0 + 23 * 1 + 23 * 2) / 70.0, 1e-12);
  for (std::size_t v = 0; v < kNumVariables; ++v) {
    EXPECT_GT(n.std(v), 0.0);
    for (double x : {-3.5, 0.0, 1.25, 1e5}) EXPECT_NEAR(n.inverse(v, n.transform(v, x)), x, 1e-12 * std::max(1.0, std::abs(x)));
  }
}

TEST(Normalizer, ConstantVariableIsFlagged) {
  const auto series = testutil::series_from_tp(std::vector<double>(50, 0.0));
  const Normalizer n = Normalizer::fit(series, {0, 50});
  EXPECT_TRUE(n.constant(kTp));
  EXPECT_EQ(n.std(kTp), 1.0);
  EXPECT_FALSE(n.constant(kPwv));
}

TEST(Batch, StacksSamplesAndNormalisesTargets) {
  std::vector<double> tp(30);
  for (std::size_t i = 0; i < 30; ++i) tp[i] = static_cast<double>(i);
  const auto series = testutil::series_from_tp(tp);
  const Normalizer n = Normalizer::fit(series, {0, 30});
  WindowConfig cfg;
  cfg.input_length = 5;
  cfg.output_length = 2;
  const auto windows = make_windows(series, cfg, n);
  const std::vector<std::size_t> order = {3, 0};
  const Batch b = make_batch(windows, order, n);
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.x.rows(), 10);
  EXPECT_EQ(b.x.topRows(5), windows[3].x);
  EXPECT_EQ(b.raw_tp(1, 4), 4.0);
  EXPECT_NEAR(b.y_norm(0, 0), n.transform(kTp, 8.0), 1e-15);
  EXPECT_EQ(b.y_raw(0, 1), 9.0);
}

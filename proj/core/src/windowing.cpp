#include "nowcast/windowing.hpp"

#include <cmath>
#include <numeric>

namespace nowcast {

void WindowConfig::validate(bool protocol) const {
  if (input_length < 2) throw Error("invalid window: input_length must be >= 2");
  if (protocol && input_length != 12 && input_length != 24)
    throw Error("invalid window: protocol input_length must be 12 or 24");
  if (output_length < 1) throw Error("invalid window: output_length must be >= 1");
  if (resolution < 1) throw Error("invalid window: resolution must be >= 1");
  if (stride != 1) throw Error("invalid window: stride must be 1");
}

Normalizer::Normalizer() {
  mean_.fill(0.0);
  std_.fill(1.0);
  constant_.fill(false);
}

Normalizer Normalizer::fit(const StationSeries& series, IndexRange range) {
  if (range.size() == 0 || range.end > series.length()) throw Error("normalizer: bad range");
  Normalizer n;
  const auto rows = series.data.middleRows(static_cast<Eigen::Index>(range.begin),
                                           static_cast<Eigen::Index>(range.size()));
  for (std::size_t v = 0; v < kNumVariables; ++v) {
    const auto col = rows.col(static_cast<Eigen::Index>(v));
    const double m = col.mean();
    const double var = (col.array() - m).square().mean();
    n.mean_[v] = m;
    if (var > 0.0) {
      n.std_[v] = std::sqrt(var);
    } else {
      n.std_[v] = 1.0;
      n.constant_[v] = true;
    }
  }
  return n;
}

Normalizer Normalizer::from_stats(const std::array<double, kNumVariables>& mean,
                                  const std::array<double, kNumVariables>& std) {
  Normalizer n;
  n.mean_ = mean;
  for (std::size_t v = 0; v < kNumVariables; ++v) {
    if (!(std[v] > 0.0)) throw Error("normalizer: std must be > 0");
    n.std_[v] = std[v];
  }
  return n;
}

namespace {

WindowedSample build_window(const StationSeries& s, const WindowConfig& cfg, const Normalizer& norm,
                            std::size_t start) {
  const auto lin = static_cast<Eigen::Index>(cfg.input_length);
  WindowedSample w;
  w.start = start;
  w.x.resize(lin, kNumVariables);
  w.raw_tp.resize(lin);
  for (Eigen::Index i = 0; i < lin; ++i) {
    const auto r = static_cast<Eigen::Index>(start) + i;
    for (std::size_t v = 0; v < kNumVariables; ++v)
      w.x(i, static_cast<Eigen::Index>(v)) = norm.transform(v, s.data(r, static_cast<Eigen::Index>(v)));
    w.raw_tp(i) = s.data(r, kTargetColumn);
  }
  w.y.resize(static_cast<Eigen::Index>(cfg.output_length));
  const std::size_t first_target = start + cfg.input_length;
  for (std::size_t j = 0; j < cfg.output_length; ++j) {
    double acc = 0.0;
    for (std::size_t h = 0; h < cfg.resolution; ++h)
      acc += s.data(static_cast<Eigen::Index>(first_target + j * cfg.resolution + h), kTargetColumn);
    w.y(static_cast<Eigen::Index>(j)) = acc / static_cast<double>(cfg.resolution);
  }
  return w;
}

void check_inputs(const StationSeries& series, const WindowConfig& cfg) {
  cfg.validate();
  if (!series.qc_applied) throw Error("windowing requires a quality-controlled series");
  if (series.length() < cfg.span_hours()) throw Error("insufficient length");
}

}  // namespace

std::vector<WindowedSample> make_windows(const StationSeries& series, const WindowConfig& cfg,
                                         const Normalizer& norm) {
  check_inputs(series, cfg);
  std::vector<WindowedSample> out;
  const std::size_t count = series.length() - cfg.span_hours() + 1;
  out.reserve(count);
  for (std::size_t s = 0; s < count; s += cfg.stride) out.push_back(build_window(series, cfg, norm, s));
  return out;
}

WindowSplits window_dataset(const StationSeries& series, const WindowConfig& cfg, const SplitIndices& split,
                            const Normalizer& norm) {
  check_inputs(series, cfg);
  WindowSplits out;
  const std::size_t count = series.length() - cfg.span_hours() + 1;
  for (std::size_t s = 0; s < count; s += cfg.stride) {
    const std::size_t first_target = s + cfg.input_length;
    const std::size_t last_target = s + cfg.span_hours() - 1;
    std::vector<WindowedSample>* dest = nullptr;
    IndexRange range;
    if (split.train.contains(last_target)) {
      dest = &out.train;
      range = split.train;
    } else if (split.val.contains(last_target)) {
      dest = &out.val;
      range = split.val;
    } else if (split.test.contains(last_target)) {
      dest = &out.test;
      range = split.test;
    } else {
      continue;
    }
    if (first_target < range.begin) continue;  // target would straddle the boundary
    dest->push_back(build_window(series, cfg, norm, s));
  }
  return out;
}

Batch make_batch(std::span<const WindowedSample> samples, std::span<const std::size_t> order,
                 const Normalizer& norm) {
  if (order.empty()) throw Error("empty batch");
  const WindowedSample& first = samples[order[0]];
  const Eigen::Index lin = first.x.rows();
  const Eigen::Index lout = first.y.size();
  const auto b = static_cast<Eigen::Index>(order.size());
  Batch batch;
  batch.x.resize(b * lin, kNumVariables);
  batch.raw_tp.resize(b, lin);
  batch.y_norm.resize(b, lout);
  batch.y_raw.resize(b, lout);
  for (Eigen::Index i = 0; i < b; ++i) {
    const WindowedSample& s = samples[order[static_cast<std::size_t>(i)]];
    if (s.x.rows() != lin || s.y.size() != lout) throw Error("shape mismatch in batch");
    batch.x.middleRows(i * lin, lin) = s.x;
    batch.raw_tp.row(i) = s.raw_tp.transpose();
    batch.y_raw.row(i) = s.y.transpose();
    for (Eigen::Index j = 0; j < lout; ++j) batch.y_norm(i, j) = norm.transform(kTargetColumn, s.y(j));
  }
  return batch;
}

Batch make_batch(std::span<const WindowedSample> samples, const Normalizer& norm) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  return make_batch(samples, order, norm);
}

}  // namespace nowcast

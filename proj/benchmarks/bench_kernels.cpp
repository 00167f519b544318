#include <benchmark/benchmark.h>

#include "nowcast/attention.hpp"
#include "nowcast/bfpf.hpp"
#include "nowcast/gradcheck.hpp"
#include "nowcast/rng.hpp"
#include "nowcast/stats.hpp"
#include "nowcast/synth.hpp"

using namespace nowcast;

static Eigen::MatrixXd zero_inflated(Eigen::Index b, Eigen::Index l, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(b, l);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform() < 0.8 ? 0.0 : rng.exponential(2.0);
  return x;
}

static void BM_ZeroDistance(benchmark::State& state) {
  const Eigen::MatrixXd x = zero_inflated(32, state.range(0), 1);
  const bfpf::BfpfParams p;
  for (auto _ : state) benchmark::DoNotOptimize(bfpf::zero_distance(x, p));
  state.SetItemsProcessed(state.iterations() * x.size());
}
BENCHMARK(BM_ZeroDistance)->Arg(12)->Arg(24)->Arg(96);

static void BM_AttentionForwardWithHooks(benchmark::State& state) {
  const auto l = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Tensor4 q(32, 4, l, 8);
  for (double& v : q.data) v = rng.normal();
  const Eigen::MatrixXd raw = zero_inflated(32, static_cast<Eigen::Index>(l), 3);
  const bfpf::BfpfParams p;
  const std::vector<ScoreBias> hooks = {
      bfpf::nonzero_focus_bias(bfpf::proximity_weights(bfpf::zero_distance(raw, p), p.tau), 0.1),
      bfpf::temporal_focus_bias(l, 0.1)};
  for (auto _ : state) benchmark::DoNotOptimize(attention_forward(q, q, q, hooks));
}
BENCHMARK(BM_AttentionForwardWithHooks)->Arg(12)->Arg(24);

static void BM_TransformerTrainStep(benchmark::State& state) {
  GradCheckSetup s = make_gradcheck_setup(state.range(0) != 0, 4);
  for (auto _ : state) {
    ad::Tape tape;
    const auto vars = s.model->bind(tape);
    const ad::Var loss = ad::mse_loss(s.model->forward(tape, s.batch, vars), s.batch.y_norm);
    tape.backward(loss);
    benchmark::DoNotOptimize(vars.front().grad().data());
  }
}
BENCHMARK(BM_TransformerTrainStep)->Arg(0)->Arg(1);

static void BM_KendallTauB(benchmark::State& state) {
  SyntheticSpec spec;
  spec.hours = static_cast<std::size_t>(state.range(0));
  const StationSeries s = generate_synthetic(spec);
  const auto tp = s.column(kTp);
  const auto pwv = s.column(kPwv);
  for (auto _ : state) benchmark::DoNotOptimize(stats::kendall_tau_b(pwv, tp));
}
BENCHMARK(BM_KendallTauB)->Arg(2000)->Arg(17520);
BENCHMARK_MAIN();

#include <gtest/gtest.h>

#include <cstdlib>
#include <map>

#include "nowcast/protocol.hpp"
#include "nowcast/report.hpp"
#include "series_util.hpp"

using namespace nowcast;

namespace {

std::vector<double> rainy_tp(std::size_t n, std::uint64_t seed, double scale) {
  Rng rng(seed);
  std::vector<double> tp(n);
  for (double& v : tp) v = rng.uniform() < 0.75 ? 0.0 : rng.exponential(scale);
  return tp;
}

StationSeries station(const std::string& id, const std::vector<double>& tp, std::uint64_t seed = 1) {
  StationSeries s = testutil::series_from_tp(tp, seed);
  s.meta.station_id = id;
  return s;
}

std::vector<ModelSpec> baselines() {
  std::vector<ModelSpec> all = default_model_specs();
  return {all[0], all[1], all[2]};
}

ProtocolGrid small_grid() {
  ProtocolGrid g;
  g.input_lengths = {12};
  g.output_lengths = {2};
  g.resolutions = {1, 3};
  g.seeds = {1, 2};
  return g;
}

TrainConfig quick_train() {
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.max_batches_per_epoch = 3;
  return tc;
}

CellRecord record(const std::string& st, const std::string& model, std::uint64_t seed, double mse, double mae,
                  bool extreme, double eere = 0.0) {
  CellRecord r;
  r.key = {st, model, 12, 2, 1};
  r.seed = seed;
  r.metrics.mse = mse;
  r.metrics.mae = mae;
  r.metrics.extreme_defined = extreme;
  r.metrics.eere = eere;
  r.metrics.aeere = std::sqrt(eere);
  return r;
}

}  // namespace

TEST(Grid, DefaultEnumeration) {
  const ProtocolGrid g;
  const auto cfgs = enumerate_configs(g);
  ASSERT_EQ(cfgs.size(), 10u);
  std::size_t hourly = 0;
  for (const auto& c : cfgs) {
    if (c.resolution == 1) ++hourly;
    EXPECT_TRUE(c.resolution == 1 || c.output_length * c.resolution == 6);
  }
  EXPECT_EQ(hourly, 6u);
  ProtocolGrid ms = g;
  ms.multi_resolution = false;
  EXPECT_EQ(enumerate_configs(ms).size(), 6u);
  EXPECT_EQ(enumerate_configs(g), enumerate_configs(g));
}

TEST(Grid, Validation) {
  ProtocolGrid g;
  g.seeds = {1, 1};
  EXPECT_THROW(g.validate(), Error);
  g.seeds = {};
  EXPECT_THROW(g.validate(), Error);
  g = ProtocolGrid{};
  g.resolutions = {4};
  EXPECT_THROW(g.validate(), Error);
}

TEST(CellSeed, DependsOnStationConfigAndSeedOnly) {
  WindowConfig a;
  WindowConfig b = a;
  b.resolution = 2;
  b.output_length = 3;
  EXPECT_EQ(cell_seed(1, "A", a), cell_seed(1, "A", a));
  EXPECT_NE(cell_seed(1, "A", a), cell_seed(2, "A", a));
  EXPECT_NE(cell_seed(1, "A", a), cell_seed(1, "B", a));
  EXPECT_NE(cell_seed(1, "A", a), cell_seed(1, "A", b));
}

TEST(EffectiveJobs, CappedByEnvironmentAndWork) {
  ::setenv("NOWCAST_BENCH_THREADS", "2", 1);
  EXPECT_EQ(effective_jobs(8, 100), 2u);
  EXPECT_EQ(effective_jobs(1, 100), 1u);
  ::unsetenv("NOWCAST_BENCH_THREADS");
  EXPECT_EQ(effective_jobs(8, 3), 3u);
  EXPECT_EQ(effective_jobs(4, 0), 1u);
}

TEST(RunProtocol, ZeroBaselineOnDryStationIsExact) {
  const auto s = station("DRY", std::vector<double>(600, 0.0));
  const auto report = run_protocol({s}, {default_model_specs()[0]}, small_grid(), quick_train());
  EXPECT_TRUE(report.failures.empty());
  ASSERT_EQ(report.records.size(), enumerate_configs(small_grid()).size() * 2);
  for (const auto& r : report.records) {
    EXPECT_EQ(r.metrics.mse, 0.0);
    EXPECT_EQ(r.metrics.mae, 0.0);
    EXPECT_FALSE(r.metrics.extreme_defined);
  }
}

TEST(RunProtocol, DeterministicAcrossRunsAndJobCounts) {
  const std::vector<StationSeries> st = {station("A", rainy_tp(500, 1, 2.0), 1), station("B", rainy_tp(500, 2, 3.0), 2)};
  std::vector<ModelSpec> models = baselines();
  models.push_back(default_model_specs()[3]);
  ProtocolOptions one;
  ProtocolOptions two;
  two.jobs = 2;
  const std::string a = report_to_json(run_protocol(st, models, small_grid(), quick_train(), one));
  const std::string b = report_to_json(run_protocol(st, models, small_grid(), quick_train(), two));
  EXPECT_EQ(a, b);
}

TEST(RunProtocol, ShortStationFailsButRunContinues) {
  const std::vector<StationSeries> st = {station("OK", rainy_tp(400, 3, 2.0)), station("SHORT", rainy_tp(15, 4, 2.0))};
  const auto report = run_protocol(st, baselines(), small_grid(), quick_train());
  EXPECT_FALSE(report.failures.empty());
  for (const auto& f : report.failures) {
    EXPECT_EQ(f.key.station, "SHORT");
    EXPECT_FALSE(f.reason.empty());
  }
  for (const auto& r : report.records) EXPECT_EQ(r.key.station, "OK");
  EXPECT_EQ(report.records.size(), 3u * enumerate_configs(small_grid()).size() * 2u);
}

TEST(RunProtocol, RejectsDuplicateNames) {
  const auto s = station("A", rainy_tp(200, 1, 1.0));
  EXPECT_THROW(run_protocol({s, s}, baselines(), small_grid(), quick_train()), Error);
  auto m = baselines();
  m.push_back(m[0]);
  EXPECT_THROW(run_protocol({s}, m, small_grid(), quick_train()), Error);
}

TEST(Aggregates, MeansMatchRecordsExactly) {
  EvaluationReport rep;
  rep.stations = {"S1", "S2"};
  rep.models = {"m"};
  rep.records = {record("S1", "m", 1, 1.0, 0.5, true, 4.0), record("S1", "m", 2, 3.0, 1.5, true, 8.0),
                 record("S2", "m", 1, 0.2, 0.1, false), record("S2", "m", 2, 0.4, 0.3, false)};
  recompute_aggregates(rep);
  ASSERT_EQ(rep.cell_means.size(), 2u);
  EXPECT_NEAR(rep.cell_means[0].mse, 2.0, 1e-12);
  EXPECT_NEAR(rep.cell_means[1].mae, 0.2, 1e-12);
  ASSERT_EQ(rep.model_averages.size(), 1u);
  const ModelAverage& avg = rep.model_averages[0];
  EXPECT_NEAR(avg.mse, (2.0 + 0.3) / 2, 1e-12);
  EXPECT_NEAR(avg.mae, (1.0 + 0.2) / 2, 1e-12);
  EXPECT_EQ(avg.n_extreme_cells, 1u);
  EXPECT_NEAR(avg.eere, 6.0, 1e-12);
}

TEST(Aggregates, DroppingDryStationOnlyMovesExtremeAverages) {
  Rng rng(31);
  EvaluationReport with;
  for (const char* st : {"W1", "W2", "DRY"})
    for (std::uint64_t seed : {1, 2, 3}) {
      const bool dry = std::string(st) == "DRY";
      with.records.push_back(record(st, "m", seed, rng.uniform(), rng.uniform(), !dry, dry ? 0.0 : rng.uniform(1, 9)));
    }
  EvaluationReport without = with;
  std::erase_if(without.records, [](const CellRecord& r) { return r.key.station == "DRY"; });
  recompute_aggregates(with);
  recompute_aggregates(without);
  // The dry station carries no extreme information, so EERE is unchanged.
  EXPECT_NEAR(with.model_averages[0].eere, without.model_averages[0].eere, 1e-12);
  EXPECT_EQ(with.model_averages[0].n_extreme_cells, without.model_averages[0].n_extreme_cells);
  EXPECT_EQ(with.model_averages[0].n_cells, 3u);
}

TEST(Ranking, OrderAndTieBreak) {
  EvaluationReport rep;
  rep.records = {record("S", "beta", 1, 1.0, 2.0, false), record("S", "alpha", 1, 1.0, 3.0, false),
                 record("S", "gamma", 1, 0.5, 9.0, false)};
  recompute_aggregates(rep);
  const RankTables& t = rep.rankings;
  ASSERT_EQ(t.by_mse.size(), 3u);
  EXPECT_EQ(t.by_mse[0].model, "gamma");
  EXPECT_EQ(t.by_mse[1].model, "alpha");
  EXPECT_EQ(t.by_mse[2].model, "beta");
  EXPECT_EQ(t.by_mae[0].model, "beta");
  EXPECT_EQ(t.by_mae[2].model, "gamma");
  EXPECT_EQ(t.by_mse[0].rank, 1u);

  EvaluationReport single;
  single.records = {record("S", "only", 1, 4.0, 2.0, false)};
  recompute_aggregates(single);
  EXPECT_EQ(single.rankings.by_mse[0].rank, 1u);
  EXPECT_EQ(single.rankings.by_mae[0].rank, 1u);
}

TEST(Report, JsonRoundTripAndFormats) {
  const std::vector<StationSeries> st = {station("A", rainy_tp(400, 5, 4.0))};
  const auto rep = run_protocol(st, baselines(), small_grid(), quick_train());
  const std::string json = report_to_json(rep);
  const EvaluationReport back = report_from_json(json);
  EXPECT_EQ(report_to_json(back), json);
  EXPECT_THROW(report_from_json("{\"records\": 3}"), Error);

  const std::string md = report_to_markdown(rep);
  EXPECT_NE(md.find("**"), std::string::npos);
  EXPECT_NE(md.find("| Model"), std::string::npos);
  const std::string csv = report_to_csv(rep);
  EXPECT_EQ(csv.rfind("station,model,L_in,L_out,R,seed,metric,value\n", 0), 0u);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  EXPECT_GE(lines, 1 + rep.records.size() * 2);
  EXPECT_NE(build_id().find("nowcast-"), std::string::npos);
}

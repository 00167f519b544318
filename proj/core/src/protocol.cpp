#include "nowcast/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace nowcast {

void ProtocolGrid::validate() const {
  if (seeds.empty()) throw Error("invalid grid: no seeds");
  if (input_lengths.empty()) throw Error("invalid grid: no input lengths");
  if (!multi_scale && !multi_resolution) throw Error("invalid grid: no protocol selected");
  if (multi_scale && output_lengths.empty()) throw Error("invalid grid: no output lengths");
  if (multi_resolution) {
    if (resolutions.empty()) throw Error("invalid grid: no resolutions");
    for (std::size_t r : resolutions)
      if (r == 0 || horizon_hours % r != 0) throw Error("invalid grid: horizon not divisible by resolution");
  }
  for (const WindowConfig& w : enumerate_configs(*this)) w.validate();
  const std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw Error("invalid grid: duplicate seeds");
}

std::vector<WindowConfig> enumerate_configs(const ProtocolGrid& grid) {
  std::vector<WindowConfig> out;
  auto add = [&](std::size_t lin, std::size_t lout, std::size_t r) {
    WindowConfig w;
    w.input_length = lin;
    w.output_length = lout;
    w.resolution = r;
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  };
  if (grid.multi_scale)
    for (std::size_t lin : grid.input_lengths)
      for (std::size_t lout : grid.output_lengths) add(lin, lout, 1);
  if (grid.multi_resolution)
    for (std::size_t lin : grid.input_lengths)
      for (std::size_t r : grid.resolutions)
        if (r > 0) add(lin, grid.horizon_hours / r, r);
  return out;
}

std::size_t effective_jobs(std::size_t requested, std::size_t work_units) {
  std::size_t jobs = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  if (const char* cap = std::getenv("NOWCAST_BENCH_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(cap, &end, 10);
    if (end != cap && *end == '\0' && v > 0) jobs = std::min<std::size_t>(jobs, v);
  }
  return std::max<std::size_t>(1, std::min(jobs, std::max<std::size_t>(1, work_units)));
}

Seed cell_seed(std::uint64_t seed, const std::string& station, const WindowConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : station) h = (h ^ ch) * 0x100000001b3ULL;
  h = mix_seed(h, cfg.input_length);
  h = mix_seed(h, cfg.output_length);
  h = mix_seed(h, cfg.resolution);
  return Seed{mix_seed(seed, h)};
}

namespace {

struct WorkUnit {
  std::size_t station = 0;
  WindowConfig cfg;
};

struct UnitResult {
  std::vector<CellRecord> records;
  std::vector<FailedCell> failures;
};

Eigen::MatrixXd stack_targets(const std::vector<WindowedSample>& samples, std::size_t l_out) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(l_out));
  for (std::size_t i = 0; i < samples.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = samples[i].y.transpose();
  return y;
}

UnitResult run_unit(const StationSeries& series, const WindowConfig& cfg, const std::vector<ModelSpec>& models,
                    const ProtocolGrid& grid, const TrainConfig& tc, const ExtremeConfig& extreme) {
  UnitResult out;
  const std::string& sid = series.meta.station_id;
  auto key_for = [&](const ModelSpec& m) {
    return CellKey{sid, m.name, cfg.input_length, cfg.output_length, cfg.resolution};
  };
  auto fail_all = [&](const std::string& reason) {
    for (const ModelSpec& m : models)
      for (std::uint64_t s : grid.seeds) out.failures.push_back({key_for(m), s, reason});
  };

  WindowSplits splits;
  Normalizer norm;
  try {
    if (!series.qc_applied) throw Error("station not quality controlled");
    const SplitIndices split = make_split(series.length());
    norm = Normalizer::fit(series, split.train);
    splits = window_dataset(series, cfg, split, norm);
    if (splits.train.empty() || splits.val.empty() || splits.test.empty())
      throw Error("series too short to split");
  } catch (const std::exception& e) {
    fail_all(e.what());
    return out;
  }
  const Eigen::MatrixXd y_test = stack_targets(splits.test, cfg.output_length);

  for (const ModelSpec& m : models) {
    for (std::uint64_t s : grid.seeds) {
      try {
        std::unique_ptr<Forecaster> model = make_forecaster(m, cfg, norm);
        std::size_t best_epoch = 0;
        if (auto* trainable = dynamic_cast<TrainableForecaster*>(model.get())) {
          const TrainResult tr = fit(*trainable, splits.train, splits.val, tc, cell_seed(s, sid, cfg));
          best_epoch = tr.best_epoch;
        }
        const Eigen::MatrixXd y_hat = model->predict_all(splits.test);
        out.records.push_back({key_for(m), s, compute_metrics(y_hat, y_test, extreme), best_epoch});
      } catch (const std::exception& e) {
        out.failures.push_back({key_for(m), s, e.what()});
      }
    }
  }
  return out;
}

}  // namespace

void recompute_aggregates(EvaluationReport& report) {
  std::sort(report.records.begin(), report.records.end(),
            [](const CellRecord& a, const CellRecord& b) { return std::tie(a.key, a.seed) < std::tie(b.key, b.seed); });
  std::sort(report.failures.begin(), report.failures.end(), [](const FailedCell& a, const FailedCell& b) {
    return std::tie(a.key, a.seed, a.reason) < std::tie(b.key, b.seed, b.reason);
  });

  report.cell_means.clear();
  for (std::size_t i = 0; i < report.records.size();) {
    std::size_t j = i;
    CellMean cm;
    cm.key = report.records[i].key;
    std::size_t n_ext = 0;
    while (j < report.records.size() && report.records[j].key == cm.key) {
      const MetricSet& m = report.records[j].metrics;
      cm.mse += m.mse;
      cm.mae += m.mae;
      if (m.extreme_defined) {
        cm.eere += m.eere;
        cm.aeere += m.aeere;
        ++n_ext;
      }
      ++j;
    }
    cm.n_seeds = j - i;
    cm.mse /= static_cast<double>(cm.n_seeds);
    cm.mae /= static_cast<double>(cm.n_seeds);
    cm.extreme_defined = n_ext > 0;
    if (n_ext > 0) {
      cm.eere /= static_cast<double>(n_ext);
      cm.aeere /= static_cast<double>(n_ext);
    }
    report.cell_means.push_back(cm);
    i = j;
  }

  auto average = [](std::vector<const CellMean*> cells, ModelAverage avg) {
    for (const CellMean* c : cells) {
      avg.mse += c->mse;
      avg.mae += c->mae;
      if (c->extreme_defined) {
        avg.eere += c->eere;
        avg.aeere += c->aeere;
        ++avg.n_extreme_cells;
      }
    }
    avg.n_cells = cells.size();
    avg.mse /= static_cast<double>(avg.n_cells);
    avg.mae /= static_cast<double>(avg.n_cells);
    if (avg.n_extreme_cells > 0) {
      avg.eere /= static_cast<double>(avg.n_extreme_cells);
      avg.aeere /= static_cast<double>(avg.n_extreme_cells);
    }
    return avg;
  };

  std::map<std::tuple<std::string, std::size_t, std::size_t, std::size_t>, std::vector<const CellMean*>> per_config;
  std::map<std::string, std::vector<const CellMean*>> per_model;
  for (const CellMean& c : report.cell_means) {
    per_config[{c.key.model, c.key.input_length, c.key.output_length, c.key.resolution}].push_back(&c);
    per_model[c.key.model].push_back(&c);
  }
  report.config_averages.clear();
  for (const auto& [k, cells] : per_config) {
    ModelAverage seed_avg;
    std::tie(seed_avg.model, seed_avg.input_length, seed_avg.output_length, seed_avg.resolution) = k;
    report.config_averages.push_back(average(cells, seed_avg));
  }
  report.model_averages.clear();
  for (const auto& [name, cells] : per_model) {
    ModelAverage seed_avg;
    seed_avg.model = name;
    report.model_averages.push_back(average(cells, seed_avg));
  }
  report.rankings = rank_models(report);
}

RankTables rank_models(const EvaluationReport& report) {
  RankTables t;
  auto build = [&](auto metric) {
    std::vector<RankEntry> entries;
    for (const ModelAverage& a : report.model_averages) entries.push_back({0, a.model, metric(a)});
    std::sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
      if (a.value != b.value) return a.value < b.value;
      return a.model < b.model;
    });
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = i + 1;
    return entries;
  };
  t.by_mse = build([](const ModelAverage& a) { return a.mse; });
  t.by_mae = build([](const ModelAverage& a) { return a.mae; });
  return t;
}

EvaluationReport run_protocol(const std::vector<StationSeries>& stations, const std::vector<ModelSpec>& models,
                              const ProtocolGrid& grid, const TrainConfig& tc, const ProtocolOptions& opts) {
  grid.validate();
  tc.validate();
  if (stations.empty()) throw Error("no stations");
  if (models.empty()) throw Error("no models");
  std::set<std::string> names;
  for (const ModelSpec& m : models)
    if (!names.insert(m.name).second) throw Error("duplicate model name: " + m.name);
  std::set<std::string> ids;
  for (const StationSeries& s : stations)
    if (!ids.insert(s.meta.station_id).second) throw Error("duplicate station id: " + s.meta.station_id);

  std::vector<WorkUnit> units;
  for (std::size_t si = 0; si < stations.size(); ++si)
    for (const WindowConfig& cfg : enumerate_configs(grid)) units.push_back({si, cfg});

  std::vector<UnitResult> results(units.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t u = next++; u < units.size(); u = next++) {
      const WorkUnit& w = units[u];
      results[u] = run_unit(stations[w.station], w.cfg, models, grid, tc, opts.extreme);
      if (opts.log) {
        std::lock_guard lock(log_mutex);
        opts.log(stations[w.station].meta.station_id + " L_in=" + std::to_string(w.cfg.input_length) +
                 " L_out=" + std::to_string(w.cfg.output_length) + " R=" + std::to_string(w.cfg.resolution) +
                 " done (" + std::to_string(results[u].failures.size()) + " failed)");
      }
    }
  };
  const std::size_t jobs = effective_jobs(opts.jobs, units.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }

  EvaluationReport report;
  report.grid = grid;
  for (const StationSeries& s : stations) report.stations.push_back(s.meta.station_id);
  for (const ModelSpec& m : models) report.models.push_back(m.name);
  for (auto& r : results) {
    report.records.insert(report.records.end(), r.records.begin(), r.records.end());
    report.failures.insert(report.failures.end(), r.failures.begin(), r.failures.end());
  }
  recompute_aggregates(report);
  return report;
}

}  // namespace nowcast

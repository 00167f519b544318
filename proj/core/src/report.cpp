#include "nowcast/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json_io.hpp"
#include "nowcast/ingest.hpp"

#ifndef NOWCAST_VERSION
#define NOWCAST_VERSION "0.0.0"
#endif

namespace nowcast {

using json_io::json;

namespace {

json key_json(const CellKey& k) {
  return json{{"station", k.station},
              {"model", k.model},
              {"L_in", k.input_length},
              {"L_out", k.output_length},
              {"R", k.resolution}};
}

CellKey key_from_json(const json& j) {
  return CellKey{j.at("station").get<std::string>(), j.at("model").get<std::string>(),
                 j.at("L_in").get<std::size_t>(), j.at("L_out").get<std::size_t>(), j.at("R").get<std::size_t>()};
}

json optional_number(bool present, double v) { return present ? json(v) : json(nullptr); }

json average_json(const ModelAverage& a, bool per_config) {
  json j{{"model", a.model}};
  if (per_config) {
    j["L_in"] = a.input_length;
    j["L_out"] = a.output_length;
    j["R"] = a.resolution;
  }
  j["n_cells"] = a.n_cells;
  j["mse"] = a.mse;
  j["mae"] = a.mae;
  j["n_extreme_cells"] = a.n_extreme_cells;
  j["eere"] = optional_number(a.n_extreme_cells > 0, a.eere);
  j["aeere"] = optional_number(a.n_extreme_cells > 0, a.aeere);
  return j;
}

json rank_json(const std::vector<RankEntry>& entries) {
  json arr = json::array();
  for (const RankEntry& e : entries) arr.push_back(json{{"rank", e.rank}, {"model", e.model}, {"value", e.value}});
  return arr;
}

std::string fmt_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string build_id() {
  std::string id = "nowcast-" NOWCAST_VERSION;
#if defined(__VERSION__)
  id += " (" __VERSION__ ")";
#endif
  return id;
}

std::string report_to_json(const EvaluationReport& report) {
  json meta{{"grid", json_io::to_json(report.grid)},
            {"seeds", report.grid.seeds},
            {"stations", report.stations},
            {"models", report.models},
            {"build_id", build_id()}};

  json records = json::array();
  for (const CellRecord& r : report.records) {
    json j = key_json(r.key);
    j["seed"] = r.seed;
    j["best_epoch"] = r.best_epoch;
    const MetricSet& m = r.metrics;
    j["metrics"] = json{{"mse", m.mse},
                        {"mae", m.mae},
                        {"eere", optional_number(m.extreme_defined, m.eere)},
                        {"aeere", optional_number(m.extreme_defined, m.aeere)},
                        {"n_points", m.n_points},
                        {"n_extreme", m.n_extreme},
                        {"extreme_defined", m.extreme_defined}};
    records.push_back(j);
  }

  json cells = json::array();
  for (const CellMean& c : report.cell_means) {
    json j = key_json(c.key);
    j["n_seeds"] = c.n_seeds;
    j["mse"] = c.mse;
    j["mae"] = c.mae;
    j["extreme_defined"] = c.extreme_defined;
    j["eere"] = optional_number(c.extreme_defined, c.eere);
    j["aeere"] = optional_number(c.extreme_defined, c.aeere);
    cells.push_back(j);
  }
  json per_config = json::array();
  for (const ModelAverage& a : report.config_averages) per_config.push_back(average_json(a, true));
  json per_model = json::array();
  for (const ModelAverage& a : report.model_averages) per_model.push_back(average_json(a, false));

  json failures = json::array();
  for (const FailedCell& f : report.failures) {
    json j = key_json(f.key);
    j["seed"] = f.seed;
    j["reason"] = f.reason;
    failures.push_back(j);
  }

  json out{{"meta", meta},
           {"records", records},
           {"averages", json{{"cells", cells}, {"per_config", per_config}, {"per_model", per_model}}},
           {"rankings", json{{"mse", rank_json(report.rankings.by_mse)}, {"mae", rank_json(report.rankings.by_mae)}}},
           {"failures", failures}};
  return out.dump(2) + "\n";
}

EvaluationReport report_from_json(std::string_view text) {
  EvaluationReport report;
  try {
    const json j = json::parse(text);
    const json& meta = j.at("meta");
    report.grid = json_io::grid_from_json(meta.at("grid"));
    report.stations = meta.at("stations").get<std::vector<std::string>>();
    report.models = meta.at("models").get<std::vector<std::string>>();
    for (const json& r : j.at("records")) {
      CellRecord rec;
      rec.key = key_from_json(r);
      rec.seed = r.at("seed").get<std::uint64_t>();
      rec.best_epoch = r.at("best_epoch").get<std::size_t>();
      const json& m = r.at("metrics");
      rec.metrics.mse = m.at("mse").get<double>();
      rec.metrics.mae = m.at("mae").get<double>();
      rec.metrics.n_points = m.at("n_points").get<std::size_t>();
      rec.metrics.n_extreme = m.at("n_extreme").get<std::size_t>();
      rec.metrics.extreme_defined = m.at("extreme_defined").get<bool>();
      if (rec.metrics.extreme_defined) {
        rec.metrics.eere = m.at("eere").get<double>();
        rec.metrics.aeere = m.at("aeere").get<double>();
      }
      report.records.push_back(rec);
    }
    for (const json& f : j.at("failures"))
      report.failures.push_back({key_from_json(f), f.at("seed").get<std::uint64_t>(), f.at("reason").get<std::string>()});
  } catch (const json::exception& e) {
    throw Error(std::string("schema mismatch: report: ") + e.what());
  }
  recompute_aggregates(report);
  return report;
}

std::string report_to_markdown(const EvaluationReport& report) {
  std::ostringstream md;
  md << "# Evaluation report\n\n";
  md << "Seeds:";
  for (std::uint64_t s : report.grid.seeds) md << ' ' << s;
  md << "  \nBuild: " << build_id() << "\n\n";

  std::map<std::tuple<std::string, std::string, std::size_t, std::size_t, std::size_t>, const CellMean*> cells;
  for (const CellMean& c : report.cell_means)
    cells[{c.key.station, c.key.model, c.key.input_length, c.key.output_length, c.key.resolution}] = &c;
  std::map<std::tuple<std::string, std::size_t, std::size_t, std::size_t>, const ModelAverage*> avgs;
  for (const ModelAverage& a : report.config_averages)
    avgs[{a.model, a.input_length, a.output_length, a.resolution}] = &a;

  for (const WindowConfig& w : enumerate_configs(report.grid)) {
    const std::size_t lin = w.input_length, lout = w.output_length, r = w.resolution;
    md << "## L_in=" << lin << ", L_out=" << lout << ", R=" << r << "h\n\n";

    // columns: per station MSE, MAE; then Avg MSE, Avg MAE, Avg EERE, Avg AEERE
    const std::size_t n_cols = report.stations.size() * 2 + 4;
    std::vector<std::vector<std::optional<double>>> table;
    for (const std::string& model : report.models) {
      std::vector<std::optional<double>> row(n_cols);
      for (std::size_t s = 0; s < report.stations.size(); ++s) {
        auto it = cells.find({report.stations[s], model, lin, lout, r});
        if (it == cells.end()) continue;
        row[2 * s] = it->second->mse;
        row[2 * s + 1] = it->second->mae;
      }
      auto ait = avgs.find({model, lin, lout, r});
      if (ait != avgs.end()) {
        const std::size_t base = report.stations.size() * 2;
        row[base] = ait->second->mse;
        row[base + 1] = ait->second->mae;
        if (ait->second->n_extreme_cells > 0) {
          row[base + 2] = ait->second->eere;
          row[base + 3] = ait->second->aeere;
        }
      }
      table.push_back(row);
    }
    std::vector<std::optional<double>> best(n_cols);
    for (const auto& row : table)
      for (std::size_t c = 0; c < n_cols; ++c)
        if (row[c] && (!best[c] || *row[c] < *best[c])) best[c] = row[c];

    md << "| Model |";
    for (const std::string& s : report.stations) md << ' ' << s << " MSE | " << s << " MAE |";
    md << " Avg MSE | Avg MAE | Avg EERE | Avg AEERE |\n|---|";
    for (std::size_t c = 0; c < n_cols; ++c) md << "---:|";
    md << '\n';
    for (std::size_t i = 0; i < table.size(); ++i) {
      md << "| " << report.models[i] << " |";
      for (std::size_t c = 0; c < n_cols; ++c) {
        if (!table[i][c]) {
          md << " - |";
        } else if (*table[i][c] == *best[c]) {
          md << " **" << fmt_metric(*table[i][c]) << "** |";
        } else {
          md << ' ' << fmt_metric(*table[i][c]) << " |";
        }
      }
      md << '\n';
    }
    md << '\n';
  }

  md << "## Ranking\n\n| Rank | By mean MSE | MSE | By mean MAE | MAE |\n|---:|---|---:|---|---:|\n";
  for (std::size_t i = 0; i < report.rankings.by_mse.size(); ++i) {
    const RankEntry& a = report.rankings.by_mse[i];
    const RankEntry& b = report.rankings.by_mae[i];
    md << "| " << a.rank << " | " << a.model << " | " << fmt_metric(a.value) << " | " << b.model << " | "
       << fmt_metric(b.value) << " |\n";
  }
  if (!report.failures.empty()) {
    md << "\n## Failed cells\n\n";
    for (const FailedCell& f : report.failures)
      md << "- " << f.key.station << ' ' << f.key.model << " L_in=" << f.key.input_length
         << " L_out=" << f.key.output_length << " R=" << f.key.resolution << " seed=" << f.seed << ": " << f.reason
         << '\n';
  }
  return md.str();
}

std::string report_to_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "station,model,L_in,L_out,R,seed,metric,value\n";
  for (const CellRecord& r : report.records) {
    const std::string prefix = r.key.station + ',' + r.key.model + ',' + std::to_string(r.key.input_length) + ',' +
                               std::to_string(r.key.output_length) + ',' + std::to_string(r.key.resolution) + ',' +
                               std::to_string(r.seed) + ',';
    out << prefix << "mse," << format_double(r.metrics.mse) << '\n';
    out << prefix << "mae," << format_double(r.metrics.mae) << '\n';
    if (r.metrics.extreme_defined) {
      out << prefix << "eere," << format_double(r.metrics.eere) << '\n';
      out << prefix << "aeere," << format_double(r.metrics.aeere) << '\n';
    }
  }
  return out.str();
}

void write_report_files(const EvaluationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write file: " + (dir / name).string());
    out << body;
  };
  write("report.json", report_to_json(report));
  write("report.md", report_to_markdown(report));
  write("report_long.csv", report_to_csv(report));
}

}  // namespace nowcast

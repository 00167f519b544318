#include "nowcast/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json_io.hpp"
#include "nowcast/ingest.hpp"
#include "nowcast/timeutil.hpp"

namespace nowcast {

using json_io::check_keys;
using json_io::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return (path.is_absolute() || base.empty()) ? path : base / path;
}

SyntheticSpec synthetic_from_json(const json& j) {
  check_keys(j,
             {"station_id", "latitude", "longitude", "hours", "zero_fraction", "pwv_threshold", "pwv_noise",
              "rain_noise", "regime_hours", "start", "seed"},
             "synthetic");
  SyntheticSpec s;
  s.station_id = j.value("station_id", s.station_id);
  s.latitude = j.value("latitude", s.latitude);
  s.longitude = j.value("longitude", s.longitude);
  s.hours = j.value("hours", s.hours);
  s.zero_fraction = j.value("zero_fraction", s.zero_fraction);
  s.pwv_threshold = j.value("pwv_threshold", s.pwv_threshold);
  s.pwv_noise = j.value("pwv_noise", s.pwv_noise);
  s.rain_noise = j.value("rain_noise", s.rain_noise);
  s.regime_hours = j.value("regime_hours", s.regime_hours);
  s.start = j.value("start", s.start);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

StationEntry station_from_json(const json& j, const std::filesystem::path& base) {
  check_keys(j, {"id", "latitude", "longitude", "elevation", "continent", "aligned_csv", "pwv_csv", "synthetic"},
             "station");
  StationEntry e;
  const int sources = static_cast<int>(j.contains("aligned_csv")) + static_cast<int>(j.contains("pwv_csv")) +
                      static_cast<int>(j.contains("synthetic"));
  if (sources != 1) throw Error("config: station needs exactly one of aligned_csv, pwv_csv, synthetic");
  if (j.contains("synthetic")) {
    e.source = StationEntry::Source::Synthetic;
    e.synthetic = synthetic_from_json(j.at("synthetic"));
    if (j.contains("id")) e.synthetic.station_id = j.at("id").get<std::string>();
    e.meta = StationMeta{e.synthetic.station_id, e.synthetic.latitude, e.synthetic.longitude, 30.0, Continent::Asia};
    return e;
  }
  e.meta.station_id = j.at("id").get<std::string>();
  e.meta.latitude = j.at("latitude").get<double>();
  e.meta.longitude = j.at("longitude").get<double>();
  e.meta.elevation = j.value("elevation", 0.0);
  if (j.contains("continent")) e.meta.continent = continent_from_string(j.at("continent").get<std::string>());
  e.meta.validate();
  if (j.contains("aligned_csv")) {
    e.source = StationEntry::Source::Aligned;
    e.path = resolve(base, j.at("aligned_csv").get<std::string>());
  } else {
    e.source = StationEntry::Source::Raw;
    e.path = resolve(base, j.at("pwv_csv").get<std::string>());
  }
  return e;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  try {
    const json j = json::parse(text);
    check_keys(j, {"stations", "ingest", "grid", "seeds", "models", "train", "extreme_threshold", "output_dir"},
               "run config");
    if (!j.contains("stations") || j.at("stations").empty()) throw Error("config: no stations");
    std::set<std::string> ids;
    for (const json& s : j.at("stations")) {
      cfg.stations.push_back(station_from_json(s, base_dir));
      if (!ids.insert(cfg.stations.back().meta.station_id).second)
        throw Error("config: duplicate station id " + cfg.stations.back().meta.station_id);
    }
    if (j.contains("ingest")) {
      const json& in = j.at("ingest");
      check_keys(in, {"grid_dir", "begin", "end"}, "ingest");
      IngestSettings s{resolve(base_dir, in.at("grid_dir").get<std::string>()), in.at("begin").get<std::string>(),
                       in.at("end").get<std::string>()};
      if (parse_utc(s.end) <= parse_utc(s.begin)) throw Error("config: ingest end must follow begin");
      cfg.ingest = s;
    }
    for (const StationEntry& e : cfg.stations)
      if (e.source == StationEntry::Source::Raw && !cfg.ingest)
        throw Error("config: station " + e.meta.station_id + " needs an ingest section");

    if (j.contains("grid")) cfg.grid = json_io::grid_from_json(j.at("grid"));
    if (j.contains("seeds")) {
      if (j.contains("grid") && j.at("grid").contains("seeds")) throw Error("config: seeds given twice");
      cfg.grid.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    }
    cfg.grid.validate();

    if (j.contains("models")) {
      std::set<std::string> names;
      for (const json& m : j.at("models")) {
        cfg.models.push_back(json_io::model_spec_from_json(m));
        if (!names.insert(cfg.models.back().name).second)
          throw Error("config: duplicate model name " + cfg.models.back().name);
      }
      if (cfg.models.empty()) throw Error("config: empty model list");
    } else {
      cfg.models = default_model_specs();
    }
    if (j.contains("train")) cfg.train = json_io::train_from_json(j.at("train"));
    cfg.extreme.threshold = j.value("extreme_threshold", cfg.extreme.threshold);
    cfg.extreme.validate();
    if (j.contains("output_dir")) cfg.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::filesystem::path aligned_path(const RunConfig& cfg, const std::string& station_id) {
  return cfg.output_dir / "aligned" / (station_id + ".csv");
}

std::size_t expected_length(const StationEntry& entry, const std::filesystem::path& output_dir) {
  switch (entry.source) {
    case StationEntry::Source::Synthetic: return entry.synthetic.hours;
    case StationEntry::Source::Aligned: return read_station_csv(entry.path, entry.meta).length();
    case StationEntry::Source::Raw:
      return read_station_csv(output_dir / "aligned" / (entry.meta.station_id + ".csv"), entry.meta).length();
  }
  return 0;
}

std::vector<StationSeries> load_stations(const RunConfig& cfg) {
  std::vector<StationSeries> out;
  for (const StationEntry& e : cfg.stations) {
    switch (e.source) {
      case StationEntry::Source::Synthetic: out.push_back(generate_synthetic(e.synthetic)); break;
      case StationEntry::Source::Aligned: out.push_back(read_station_csv(e.path, e.meta)); break;
      case StationEntry::Source::Raw: {
        const auto p = aligned_path(cfg, e.meta.station_id);
        if (!std::filesystem::exists(p)) throw Error("missing aligned series (run ingest first): " + p.string());
        out.push_back(read_station_csv(p, e.meta));
        break;
      }
    }
    if (!out.back().qc_applied) out.back() = qc_fill(out.back());
  }
  return out;
}

void check_grid_fits(const ProtocolGrid& grid, std::size_t shortest_length) {
  for (const WindowConfig& w : enumerate_configs(grid)) {
    if (w.span_hours() > shortest_length)
      throw Error("config: L_in=" + std::to_string(w.input_length) + " L_out=" + std::to_string(w.output_length) +
                  " R=" + std::to_string(w.resolution) + " spans " + std::to_string(w.span_hours()) +
                  " hours, longer than the shortest station (" + std::to_string(shortest_length) + ")");
  }
}

}  // namespace nowcast

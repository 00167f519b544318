#include "nowcast/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "nowcast/timeutil.hpp"

namespace nowcast {

namespace {

constexpr std::int64_t kHalfHour = 1800;

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

double require_number(std::string_view s, const std::string& what) {
  auto v = parse_number(s);
  if (!v) throw Error("schema mismatch: bad " + what + " '" + std::string(s) + "'");
  return *v;
}

std::int64_t seconds_between(TimePoint a, TimePoint b) { return (b - a).count(); }

std::int64_t median_gap(const std::vector<RawSample>& samples) {
  if (samples.size() < 2) return kHourSeconds;
  std::vector<std::int64_t> gaps;
  gaps.reserve(samples.size() - 1);
  for (std::size_t i = 1; i < samples.size(); ++i) gaps.push_back(seconds_between(samples[i - 1].time, samples[i].time));
  const auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  if (gaps.size() % 2 == 1) return *mid;
  const std::int64_t upper = *mid;
  const std::int64_t lower = *std::max_element(gaps.begin(), mid);
  return (lower + upper) / 2;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path.string());
  return in;
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) return "0";  // folds -0 as well
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool GridField::missing(Eigen::Index i, Eigen::Index j) const { return std::isnan(values(i, j)); }

void GridField::validate() const {
  if (!(dlat > 0.0) || !(dlon > 0.0)) throw Error("schema mismatch: grid spacing must be positive");
  if (values.rows() == 0 || values.cols() == 0) throw Error("schema mismatch: empty grid");
}

// ---------------------------------------------------------------------------
// Station CSV

RawSamples parse_station_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw Error("schema mismatch: empty file " + source_name);
  const auto header = split_commas(trim(line));
  if (header.size() != 2 || trim(header[0]) != "timestamp")
    throw Error("schema mismatch: unexpected header in " + source_name);
  RawSamples raw;
  raw.variable = std::string(trim(header[1]));
  try {
    VariableSchema::index_of(raw.variable);
  } catch (const Error&) {
    throw Error("schema mismatch: unknown variable '" + raw.variable + "' in " + source_name);
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto fields = split_commas(row);
    if (fields.size() != 2) {
      ++raw.malformed_rows;
      raw.malformed_lines.push_back(line_no);
      continue;
    }
    TimePoint t;
    try {
      t = parse_utc(fields[0]);
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with("non-UTC")) throw;
      ++raw.malformed_rows;
      raw.malformed_lines.push_back(line_no);
      continue;
    }
    RawSample s{t, std::nullopt};
    if (!trim(fields[1]).empty()) {
      s.value = parse_number(fields[1]);
      if (!s.value) {
        ++raw.malformed_rows;
        raw.malformed_lines.push_back(line_no);
        continue;
      }
    }
    if (!raw.samples.empty() && s.time <= raw.samples.back().time)
      throw Error("unsorted input: " + source_name + " line " + std::to_string(line_no));
    raw.samples.push_back(s);
  }
  raw.native_step = median_gap(raw.samples);
  return raw;
}

RawSamples parse_station_csv(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_station_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// Gridded CSV

GridField parse_grid_csv(std::istream& in, const std::string& variable, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "timestamp,lat0,lon0,dlat,dlon,nlat,nlon")
    throw Error("schema mismatch: unexpected grid header in " + source_name);
  if (!std::getline(in, line)) throw Error("schema mismatch: missing grid metadata in " + source_name);
  const auto meta = split_commas(trim(line));
  if (meta.size() != 7) throw Error("schema mismatch: grid metadata needs 7 fields in " + source_name);

  GridField g;
  g.variable = variable;
  g.time = parse_utc(meta[0]);
  g.lat0 = require_number(meta[1], "lat0");
  g.lon0 = require_number(meta[2], "lon0");
  g.dlat = require_number(meta[3], "dlat");
  g.dlon = require_number(meta[4], "dlon");
  const double nlat = require_number(meta[5], "nlat");
  const double nlon = require_number(meta[6], "nlon");
  if (nlat < 1 || nlon < 1 || nlat != std::floor(nlat) || nlon != std::floor(nlon))
    throw Error("schema mismatch: bad grid dimensions in " + source_name);
  g.values.resize(static_cast<Eigen::Index>(nlat), static_cast<Eigen::Index>(nlon));

  for (Eigen::Index i = 0; i < g.nlat(); ++i) {
    if (!std::getline(in, line)) throw Error("schema mismatch: grid has too few rows in " + source_name);
    const auto cells = split_commas(trim(line));
    if (static_cast<Eigen::Index>(cells.size()) != g.nlon())
      throw Error("schema mismatch: grid row " + std::to_string(i) + " has wrong width in " + source_name);
    for (Eigen::Index j = 0; j < g.nlon(); ++j) {
      const auto cell = trim(cells[static_cast<std::size_t>(j)]);
      if (cell == "NA") {
        g.values(i, j) = std::numeric_limits<double>::quiet_NaN();
      } else {
        g.values(i, j) = require_number(cell, "grid value");
      }
    }
  }
  g.validate();
  return g;
}

GridField parse_grid_csv(const std::filesystem::path& path, const std::string& variable) {
  auto in = open_or_throw(path);
  return parse_grid_csv(in, variable, path.string());
}

void write_grid_csv(std::ostream& out, const GridField& field) {
  out << "timestamp,lat0,lon0,dlat,dlon,nlat,nlon\n";
  out << format_utc(field.time) << ',' << format_double(field.lat0) << ',' << format_double(field.lon0) << ','
      << format_double(field.dlat) << ',' << format_double(field.dlon) << ',' << field.nlat() << ','
      << field.nlon() << '\n';
  for (Eigen::Index i = 0; i < field.nlat(); ++i) {
    for (Eigen::Index j = 0; j < field.nlon(); ++j) {
      if (j) out << ',';
      out << (field.missing(i, j) ? std::string("NA") : format_double(field.values(i, j)));
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Temporal resampling

HourlySeries resample_to_hourly(const RawSamples& raw) {
  if (raw.samples.empty()) throw Error("empty input: no samples for " + raw.variable);
  const auto shift = std::chrono::seconds(kHalfHour);
  const TimePoint first_hour = floor_hour(raw.samples.front().time + shift);
  const TimePoint last_hour = floor_hour(raw.samples.back().time + shift);
  const auto n = static_cast<std::size_t>(seconds_between(first_hour, last_hour) / kHourSeconds + 1);

  std::vector<double> sums(n, 0.0);
  std::vector<std::size_t> counts(n, 0);
  for (const auto& s : raw.samples) {
    if (!s.value) continue;
    // Window [H-30min, H+30min) is equivalent to floor((t + 30min) / 1h) == H.
    const TimePoint h = floor_hour(s.time + shift);
    const auto idx = static_cast<std::size_t>(seconds_between(first_hour, h) / kHourSeconds);
    sums[idx] += *s.value;
    ++counts[idx];
  }

  HourlySeries out;
  out.start_time = first_hour;
  out.values.assign(n, 0.0);
  out.missing_mask.assign(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0) continue;
    out.values[i] = sums[i] / static_cast<double>(counts[i]);
    out.missing_mask[i] = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spatial sampling

double bilinear_sample(const GridField& field, double lat, double lon) {
  field.validate();
  constexpr double kEdgeTol = 1e-9;
  const double fi = (lat - field.lat0) / field.dlat;
  const double fj = (lon - field.lon0) / field.dlon;
  const auto max_i = static_cast<double>(field.nlat() - 1);
  const auto max_j = static_cast<double>(field.nlon() - 1);
  if (!(fi >= -kEdgeTol && fi <= max_i + kEdgeTol && fj >= -kEdgeTol && fj <= max_j + kEdgeTol))
    throw Error("out of grid");

  const auto lower = [](double f, Eigen::Index n) -> Eigen::Index {
    if (n < 2) return 0;
    return std::clamp(static_cast<Eigen::Index>(std::floor(f)), Eigen::Index{0}, n - 2);
  };
  const Eigen::Index i0 = lower(fi, field.nlat());
  const Eigen::Index j0 = lower(fj, field.nlon());
  const double ti = field.nlat() < 2 ? 0.0 : std::clamp(fi - static_cast<double>(i0), 0.0, 1.0);
  const double tj = field.nlon() < 2 ? 0.0 : std::clamp(fj - static_cast<double>(j0), 0.0, 1.0);

  double acc = 0.0;
  for (int di = 0; di < 2; ++di) {
    for (int dj = 0; dj < 2; ++dj) {
      const double w = (di ? ti : 1.0 - ti) * (dj ? tj : 1.0 - tj);
      if (w == 0.0) continue;
      const Eigen::Index i = i0 + di;
      const Eigen::Index j = j0 + dj;
      if (field.missing(i, j)) throw Error("missing corner");
      acc += w * field.values(i, j);
    }
  }
  return acc;
}

namespace {

Eigen::Index nearest_index(double coord, double origin, double step, Eigen::Index n) {
  const double f = (coord - origin) / step;
  auto lo = static_cast<Eigen::Index>(std::floor(f));
  lo = std::clamp(lo, Eigen::Index{0}, n - 1);
  const Eigen::Index hi = std::min(lo + 1, n - 1);
  const double d_lo = std::abs(coord - (origin + static_cast<double>(lo) * step));
  const double d_hi = std::abs(coord - (origin + static_cast<double>(hi) * step));
  return d_hi < d_lo ? hi : lo;
}

}  // namespace

double nearest_sample(const GridField& field, double lat, double lon) {
  field.validate();
  // Squared distance separates per axis, so the per-axis nearest index is the
  // global minimiser; strict '<' keeps ties on the smaller index.
  const Eigen::Index i = nearest_index(lat, field.lat0, field.dlat, field.nlat());
  const Eigen::Index j = nearest_index(lon, field.lon0, field.dlon, field.nlon());
  if (field.missing(i, j)) throw Error("missing cell");
  return field.values(i, j);
}

// ---------------------------------------------------------------------------
// Alignment

namespace {

enum class Sampler { Bilinear, Nearest };

HourlySeries sample_fields(const std::vector<GridField>& fields, const std::string& variable,
                           const StationMeta& meta, Sampler sampler) {
  if (fields.empty()) throw Error("no overlapping coverage: no fields for " + variable);
  std::vector<const GridField*> sorted;
  sorted.reserve(fields.size());
  for (const auto& f : fields) sorted.push_back(&f);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->time < b->time; });

  RawSamples raw;
  raw.variable = variable;
  for (const GridField* f : sorted) {
    if (!raw.samples.empty() && f->time <= raw.samples.back().time)
      throw Error("unsorted input: duplicate grid time for " + variable);
    RawSample s{f->time, std::nullopt};
    try {
      s.value = sampler == Sampler::Bilinear ? bilinear_sample(*f, meta.latitude, meta.longitude)
                                             : nearest_sample(*f, meta.latitude, meta.longitude);
    } catch (const Error& e) {
      const std::string_view what = e.what();
      if (what != "missing corner" && what != "missing cell") throw;
    }
    raw.samples.push_back(s);
  }
  return resample_to_hourly(raw);
}

}  // namespace

StationSeries align_station(const RawSamples& pwv, const MetFields& met_fields,
                            const std::vector<GridField>& precip_fields, const StationMeta& meta) {
  meta.validate();
  std::array<HourlySeries, kNumVariables> columns;
  for (std::size_t v : {kT2m, kSp, kRh, kWindSpeed}) {
    const std::string name(VariableSchema::names[v]);
    const auto it = met_fields.find(name);
    if (it == met_fields.end()) throw Error("no overlapping coverage: no fields for " + name);
    columns[v] = sample_fields(it->second, name, meta, Sampler::Bilinear);
  }
  columns[kPwv] = resample_to_hourly(pwv);
  columns[kTp] = sample_fields(precip_fields, "tp", meta, Sampler::Nearest);

  TimePoint begin = columns[0].start_time;
  TimePoint end = columns[0].time_at(columns[0].size());
  for (const auto& c : columns) {
    begin = std::max(begin, c.start_time);
    end = std::min(end, c.time_at(c.size()));
  }
  if (end <= begin) throw Error("no overlapping coverage");

  const auto t = static_cast<std::size_t>(seconds_between(begin, end) / kHourSeconds);
  StationSeries out;
  out.meta = meta;
  out.start_time = begin;
  out.data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t), kNumVariables);
  out.missing.setConstant(static_cast<Eigen::Index>(t), kNumVariables, false);
  for (std::size_t v = 0; v < kNumVariables; ++v) {
    const auto& c = columns[v];
    const auto offset = static_cast<std::size_t>(seconds_between(c.start_time, begin) / kHourSeconds);
    for (std::size_t i = 0; i < t; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto col = static_cast<Eigen::Index>(v);
      if (c.present(offset + i)) {
        out.data(r, col) = c.values[offset + i];
      } else {
        out.missing(r, col) = true;
      }
    }
  }
  out.qc_applied = false;
  return out;
}

// ---------------------------------------------------------------------------
// Quality control

StationSeries qc_fill(const StationSeries& series) {
  const auto t = static_cast<Eigen::Index>(series.length());
  const auto row_complete = [&](Eigen::Index r) {
    for (std::size_t v = 0; v < kTp; ++v)
      if (series.missing(r, static_cast<Eigen::Index>(v))) return false;
    return true;
  };
  Eigen::Index first = 0;
  while (first < t && !row_complete(first)) ++first;
  Eigen::Index last = t - 1;
  while (last >= first && !row_complete(last)) --last;
  if (first > last) throw Error("unfillable variable: no row with all continuous variables present");

  const Eigen::Index n = last - first + 1;
  StationSeries out;
  out.meta = series.meta;
  out.start_time = series.time_at(static_cast<std::size_t>(first));
  out.data = series.data.middleRows(first, n);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> miss = series.missing.middleRows(first, n);

  for (std::size_t v = 0; v < kTp; ++v) {
    const auto col = static_cast<Eigen::Index>(v);
    if ((!miss.col(col)).count() < 2)
      throw Error("unfillable variable: " + std::string(VariableSchema::names[v]));
    Eigen::Index prev = 0;  // row 0 is present after trimming
    for (Eigen::Index r = 1; r < n; ++r) {
      if (miss(r, col)) continue;
      if (r - prev > 1) {
        const double a = out.data(prev, col);
        const double b = out.data(r, col);
        const auto span = static_cast<double>(r - prev);
        for (Eigen::Index k = prev + 1; k < r; ++k)
          out.data(k, col) = a + (b - a) * static_cast<double>(k - prev) / span;
      }
      prev = r;
    }
  }

  const auto tp = static_cast<Eigen::Index>(kTp);
  double carry = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    if (miss(r, tp)) {
      out.data(r, tp) = carry;
    } else {
      carry = out.data(r, tp);
    }
  }

  out.missing.setConstant(n, kNumVariables, false);
  out.qc_applied = true;
  out.validate();
  return out;
}

CompletenessReport completeness(const RawSamples& raw, const TimeSpan& span, const std::string& station_id) {
  if (span.end <= span.begin) throw Error("empty span");
  const std::int64_t step = raw.native_step > 0 ? raw.native_step : kHourSeconds;
  const auto slots = static_cast<std::size_t>((seconds_between(span.begin, span.end) + step - 1) / step);
  std::vector<bool> present(slots, false);
  for (const auto& s : raw.samples) {
    if (!s.value || s.time < span.begin || s.time >= span.end) continue;
    present[static_cast<std::size_t>(seconds_between(span.begin, s.time) / step)] = true;
  }

  CompletenessReport rep;
  rep.station_id = station_id;
  std::size_t count = 0;
  std::size_t run = 0;
  std::size_t longest = 0;
  for (bool p : present) {
    if (p) {
      ++count;
      run = 0;
    } else {
      if (run == 0) ++rep.gap_count;
      ++run;
      longest = std::max(longest, run);
    }
  }
  rep.fraction_present = static_cast<double>(count) / static_cast<double>(slots);
  rep.longest_gap_hours = static_cast<double>(longest) * static_cast<double>(step) / kHourSeconds;
  return rep;
}

// ---------------------------------------------------------------------------
// Aligned CSV

void write_station_csv(std::ostream& out, const StationSeries& series) {
  out << "timestamp";
  for (auto name : VariableSchema::names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < series.length(); ++i) {
    out << format_utc(series.time_at(i));
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(kNumVariables); ++c) {
      out << ',';
      const bool miss = series.missing.size() != 0 && series.missing(r, c);
      if (!miss) out << format_double(series.data(r, c));
    }
    out << '\n';
  }
}

void write_station_csv(const std::filesystem::path& path, const StationSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  write_station_csv(out, series);
}

StationSeries read_station_csv(std::istream& in, const StationMeta& meta) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "timestamp,t2m,sp,rh,wind_speed,pwv,tp")
    throw Error("schema mismatch: unexpected aligned header for " + meta.station_id);
  std::vector<std::array<double, kNumVariables>> rows;
  std::vector<std::array<bool, kNumVariables>> miss;
  TimePoint start{};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto fields = split_commas(row);
    if (fields.size() != kNumVariables + 1)
      throw Error("schema mismatch: line " + std::to_string(line_no) + " of " + meta.station_id);
    const TimePoint t = parse_utc(fields[0]);
    if (rows.empty()) {
      start = t;
    } else if (t != start + std::chrono::seconds(static_cast<std::int64_t>(rows.size()) * kHourSeconds)) {
      throw Error("unsorted input: aligned CSV must be contiguous hourly at line " + std::to_string(line_no));
    }
    std::array<double, kNumVariables> vals{};
    std::array<bool, kNumVariables> m{};
    for (std::size_t v = 0; v < kNumVariables; ++v) {
      if (trim(fields[v + 1]).empty()) {
        m[v] = true;
        continue;
      }
      vals[v] = require_number(fields[v + 1], std::string(VariableSchema::names[v]));
    }
    rows.push_back(vals);
    miss.push_back(m);
  }
  if (rows.empty()) throw Error("schema mismatch: no rows for " + meta.station_id);

  StationSeries s;
  s.meta = meta;
  s.start_time = start;
  const auto t = static_cast<Eigen::Index>(rows.size());
  s.data.resize(t, kNumVariables);
  s.missing.resize(t, kNumVariables);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (std::size_t v = 0; v < kNumVariables; ++v) {
      s.data(i, static_cast<Eigen::Index>(v)) = rows[static_cast<std::size_t>(i)][v];
      s.missing(i, static_cast<Eigen::Index>(v)) = miss[static_cast<std::size_t>(i)][v];
    }
  }
  s.qc_applied = !s.missing.any();
  s.validate();
  return s;
}

StationSeries read_station_csv(const std::filesystem::path& path, const StationMeta& meta) {
  auto in = open_or_throw(path);
  return read_station_csv(in, meta);
}

}  // namespace nowcast

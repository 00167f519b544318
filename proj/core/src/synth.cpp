#include "nowcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "nowcast/ingest.hpp"
#include "nowcast/rng.hpp"
#include "nowcast/timeutil.hpp"

namespace nowcast {

void SyntheticSpec::validate() const {
  if (station_id.empty()) throw Error("invalid synthetic spec: empty station id");
  if (hours < 2) throw Error("invalid synthetic spec: hours < 2");
  if (!(zero_fraction >= 0.0 && zero_fraction <= 1.0)) throw Error("invalid synthetic spec: zero_fraction");
  if (!(pwv_noise >= 0.0) || !(rain_noise >= 0.0)) throw Error("invalid synthetic spec: negative noise");
  if (!(regime_hours >= 1.0)) throw Error("invalid synthetic spec: regime_hours");
  StationMeta{station_id, latitude, longitude, 0.0, Continent::Asia}.validate();
  (void)parse_utc(start);
}

StationSeries generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.hours;
  const auto N = static_cast<Eigen::Index>(n);
  Rng rng(mix_seed(spec.seed, 0x5EED));
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  // Regime segments shift the PWV level and the rain propensity.
  std::vector<double> regime_pwv(n), regime_wet(n);
  {
    std::size_t t = 0;
    while (t < n) {
      const auto len = static_cast<std::size_t>(1.0 + rng.exponential(spec.regime_hours));
      const double dp = rng.uniform(-6.0, 6.0);
      const double dw = rng.uniform(-0.6, 0.6);
      for (std::size_t k = t; k < std::min(n, t + len); ++k) {
        regime_pwv[k] = dp;
        regime_wet[k] = dw;
      }
      t += len;
    }
  }

  Eigen::MatrixXd data(N, static_cast<Eigen::Index>(kNumVariables));
  std::vector<double> score(n);
  double pwv_anom = 0.0, wet = 0.0, sp_anom = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double day = static_cast<double>(t) / 24.0;
    const double season = std::sin(kTwoPi * (day - 100.0) / 365.25);
    const double diurnal = std::sin(kTwoPi * (static_cast<double>(t % 24) - 9.0) / 24.0);

    pwv_anom = 0.97 * pwv_anom + spec.pwv_noise * rng.normal();
    const double pwv = std::max(1.0, 32.0 + 6.0 * season + regime_pwv[t] + pwv_anom);
    wet = 0.85 * wet + 0.45 * rng.normal();
    const double onset = 0.25 * std::max(0.0, pwv - spec.pwv_threshold);
    score[t] = wet + onset + regime_wet[t] + 0.15 * diurnal;

    sp_anom = 0.99 * sp_anom + 40.0 * rng.normal();
    const auto r = static_cast<Eigen::Index>(t);
    data(r, kT2m) = 288.0 + 9.0 * season + 4.0 * diurnal + 0.5 * rng.normal();
    data(r, kSp) = 100800.0 + sp_anom - 25.0 * onset;
    data(r, kPwv) = pwv;
    data(r, kWindSpeed) = std::abs(2.5 + 0.8 * rng.normal() + 0.4 * std::max(0.0, wet));
  }

  // Wettest hours get rain so the zero share is exact up to rounding.
  const auto n_dry = static_cast<std::size_t>(std::llround(spec.zero_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  Eigen::VectorXd tp = Eigen::VectorXd::Zero(N);
  if (n_dry < n) {
    const double cut = score[order[n_dry > 0 ? n_dry - 1 : 0]];
    double spread = 0.0;
    for (std::size_t k = n_dry; k < n; ++k) spread += score[order[k]] - cut;
    spread = std::max(spread / static_cast<double>(n - n_dry), 1e-6);
    for (std::size_t k = n_dry; k < n; ++k) {
      const std::size_t t = order[k];
      const double excess = std::max(0.0, score[t] - cut) / spread;
      tp(static_cast<Eigen::Index>(t)) =
          (0.1 + 1.1 * std::pow(excess, 1.4)) * std::exp(spec.rain_noise * rng.normal());
    }
  }
  for (Eigen::Index r = 0; r < N; ++r) {
    data(r, kTp) = tp(r);
    const double rh_base = 55.0 + 0.9 * (data(r, kPwv) - 32.0) + (tp(r) > 0.0 ? 18.0 : 0.0);
    data(r, kRh) = std::clamp(rh_base + 4.0 * rng.normal(), 5.0, 100.0);
    if (tp(r) > 0.0) data(r, kT2m) -= std::min(3.0, 0.6 * tp(r));
  }

  StationSeries s;
  s.meta = StationMeta{spec.station_id, spec.latitude, spec.longitude, 30.0, Continent::Asia};
  s.start_time = parse_utc(spec.start);
  s.data = std::move(data);
  s.missing = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(N, kNumVariables, false);
  s.qc_applied = true;
  s.validate();
  return s;
}

void write_ingest_fixture(const StationSeries& series, std::size_t hours, const std::filesystem::path& station_dir,
                          const std::filesystem::path& grid_dir) {
  if (hours == 0 || hours > series.length()) throw Error("fixture hours out of range");
  std::filesystem::create_directories(station_dir);
  std::filesystem::create_directories(grid_dir);

  const auto pwv_path = station_dir / (series.meta.station_id + "_pwv.csv");
  std::ofstream pwv(pwv_path, std::ios::binary);
  if (!pwv) throw Error("cannot write file: " + pwv_path.string());
  pwv << "timestamp,pwv\n";
  for (std::size_t t = 0; t < hours; ++t) {
    const double v = series.data(static_cast<Eigen::Index>(t), kPwv);
    // Two half-hourly samples averaging to the hourly value.
    pwv << format_utc(series.time_at(t) - std::chrono::minutes(15)) << ',' << format_double(v - 0.25) << '\n';
    pwv << format_utc(series.time_at(t) + std::chrono::minutes(15)) << ',' << format_double(v + 0.25) << '\n';
  }

  const double d = 0.1;
  const std::array<std::size_t, 5> vars = {kT2m, kSp, kRh, kWindSpeed, kTp};
  for (std::size_t t = 0; t < hours; ++t) {
    for (std::size_t var : vars) {
      GridField g;
      g.time = series.time_at(t);
      g.variable = std::string(VariableSchema::names[var]);
      g.dlat = d;
      g.dlon = d;
      g.lat0 = series.meta.latitude - d;
      g.lon0 = series.meta.longitude - d;
      g.values.resize(3, 3);
      const double v = series.data(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(var));
      for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) {
          // Affine in the continuous fields so bilinear sampling recovers v;
          // the rain field keeps v at the station cell only.
          if (var == kTp) {
            g.values(i, j) = (i == 1 && j == 1) ? v : 0.5 * v;
          } else {
            g.values(i, j) = v + 0.01 * std::abs(v) * static_cast<double>((i - 1) - (j - 1));
          }
        }
      }
      const auto path = grid_dir / (g.variable + "_" + format_compact_hour(g.time) + ".csv");
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error("cannot write file: " + path.string());
      write_grid_csv(out, g);
    }
  }
}

}  // namespace nowcast

#include "nowcast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace nowcast::stats {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}
}  // namespace

double zero_inflation_ratio(std::span<const double> tp) {
  if (tp.empty()) throw Error("empty series");
  const auto zeros = std::count_if(tp.begin(), tp.end(), [](double v) { return v == 0.0; });
  return static_cast<double>(zeros) / static_cast<double>(tp.size());
}

double autocorrelation(std::span<const double> x, std::size_t k) {
  if (k < 1 || x.size() <= k) throw Error("invalid lag: need len(x) > k >= 1");
  const double m = mean_of(x);
  double denom = 0.0;
  for (double v : x) denom += (v - m) * (v - m);
  if (denom == 0.0) throw Error("constant series");
  double num = 0.0;
  for (std::size_t t = 0; t + k < x.size(); ++t) num += (x[t] - m) * (x[t + k] - m);
  return num / denom;
}

DecayFit fit_decay_lambda(std::span<const double> rhos) {
  DecayFit fit;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    if (rhos[i] > 0.0 && std::isfinite(rhos[i])) {
      fit.lags.push_back(i + 1);
      fit.rho.push_back(rhos[i]);
    } else {
      ++fit.excluded;
    }
  }
  if (fit.lags.size() < 2) throw Error("insufficient decay points");

  double skk = 0.0;
  double sky = 0.0;
  std::vector<double> y(fit.lags.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto k = static_cast<double>(fit.lags[i]);
    y[i] = -std::log(fit.rho[i]);
    skk += k * k;
    sky += k * y[i];
  }
  fit.lambda_hat = sky / skk;

  const double ybar = mean_of(y);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - fit.lambda_hat * static_cast<double>(fit.lags[i]);
    ss_res += r * r;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  if (ss_tot > 0.0) {
    fit.fit_r2 = 1.0 - ss_res / ss_tot;
  } else {
    fit.fit_r2 = ss_res == 0.0 ? 1.0 : 0.0;
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Augmented Dickey-Fuller

namespace {

// MacKinnon (1994) response-surface constants, N = 1.
struct MacKinnonTable {
  double tau_max;
  double tau_min;
  double tau_star;
  std::array<double, 3> small_p;  // already scaled
  std::array<double, 4> large_p;  // already scaled
};

constexpr MacKinnonTable kConstant{2.74, -18.83, -1.61,
                                   {2.1659, 1.4412, 3.8269e-2},
                                   {1.7339, 0.93202, -0.12745, -0.010368}};
constexpr MacKinnonTable kConstantTrend{0.7, -16.18, -2.89,
                                        {3.2512, 1.6047, 4.9588e-2},
                                        {2.5261, 0.61654, -0.37956, -0.060285}};

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct OlsFit {
  Eigen::VectorXd beta;
  double ssr = 0.0;
  double se_gamma = 0.0;
  Eigen::Index nobs = 0;
  Eigen::Index k = 0;
};

OlsFit ols(const AdfDesign& d) {
  const Eigen::Index n = d.x.rows();
  const Eigen::Index k = d.x.cols();
  if (n <= k) throw Error("degenerate regression: too few observations");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> piv(d.x);
  if (piv.rank() < k) throw Error("degenerate regression");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(d.x);
  OlsFit f;
  f.beta = qr.solve(d.y);
  const Eigen::VectorXd resid = d.y - d.x * f.beta;
  f.ssr = resid.squaredNorm();
  f.nobs = n;
  f.k = k;
  const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const double cov_gg = r_inv.row(d.gamma_column).squaredNorm();
  const double sigma2 = f.ssr / static_cast<double>(n - k);
  f.se_gamma = std::sqrt(sigma2 * cov_gg);
  if (!(f.se_gamma > 0.0) || !std::isfinite(f.se_gamma)) throw Error("degenerate regression");
  return f;
}

}  // namespace

double mackinnon_pvalue(double t_stat, bool include_trend) {
  const MacKinnonTable& tab = include_trend ? kConstantTrend : kConstant;
  if (t_stat > tab.tau_max) return 1.0;
  if (t_stat < tab.tau_min) return 0.0;
  double z;
  if (t_stat <= tab.tau_star) {
    z = tab.small_p[0] + t_stat * (tab.small_p[1] + t_stat * tab.small_p[2]);
  } else {
    z = tab.large_p[0] + t_stat * (tab.large_p[1] + t_stat * (tab.large_p[2] + t_stat * tab.large_p[3]));
  }
  return normal_cdf(z);
}

AdfDesign adf_design(std::span<const double> x, std::size_t lag, std::size_t first_row, bool include_trend) {
  // dx[i] = x[i+1] - x[i]; row i regresses dx[i] on [1, t, x[i], dx[i-1..i-lag]].
  const std::size_t n_diff = x.size() - 1;
  const auto rows = static_cast<Eigen::Index>(n_diff - first_row);
  const Eigen::Index det = include_trend ? 2 : 1;
  const auto cols = det + 1 + static_cast<Eigen::Index>(lag);
  AdfDesign d;
  d.x.resize(rows, cols);
  d.y.resize(rows);
  d.gamma_column = det;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t i = first_row + static_cast<std::size_t>(r);
    d.y(r) = x[i + 1] - x[i];
    d.x(r, 0) = 1.0;
    if (include_trend) d.x(r, 1) = static_cast<double>(r + 1);
    d.x(r, det) = x[i];
    for (std::size_t l = 1; l <= lag; ++l) d.x(r, det + static_cast<Eigen::Index>(l)) = x[i - l + 1] - x[i - l];
  }
  return d;
}

AdfResult adf_test(std::span<const double> segment, const AdfConfig& cfg) {
  const std::size_t n = segment.size();
  if (n <= cfg.max_lag + 4) throw Error("segment too short for max_lag");
  for (double v : segment)
    if (!std::isfinite(v)) throw Error("non-finite value in segment");

  // Lag selection on the common sample that every candidate lag can use.
  std::size_t best_lag = 0;
  double best_aic = std::numeric_limits<double>::infinity();
  for (std::size_t lag = 0; lag <= cfg.max_lag; ++lag) {
    OlsFit f;
    try {
      f = ols(adf_design(segment, lag, cfg.max_lag, cfg.include_trend));
    } catch (const Error&) {
      continue;
    }
    const double nobs = static_cast<double>(f.nobs);
    const double aic = nobs * std::log(f.ssr / nobs) + 2.0 * static_cast<double>(f.k);
    if (aic < best_aic) {
      best_aic = aic;
      best_lag = lag;
    }
  }
  if (!std::isfinite(best_aic)) throw Error("degenerate regression");

  const AdfDesign d = adf_design(segment, best_lag, best_lag, cfg.include_trend);
  const OlsFit f = ols(d);
  AdfResult res;
  res.gamma_hat = f.beta(d.gamma_column);
  res.t_stat = res.gamma_hat / f.se_gamma;
  res.p_value = mackinnon_pvalue(res.t_stat, cfg.include_trend);
  res.lag_used = best_lag;
  res.n_obs = static_cast<std::size_t>(f.nobs);
  res.reject_unit_root = res.p_value < cfg.significance;
  return res;
}

// ---------------------------------------------------------------------------
// Correlation

std::string_view to_string(CorrelationMethod m) {
  switch (m) {
    case CorrelationMethod::Pearson: return "pearson";
    case CorrelationMethod::Kendall: return "kendall";
    case CorrelationMethod::Spearman: return "spearman";
  }
  return "?";
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("correlation needs equal lengths >= 2");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && x[idx[j]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = avg;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

namespace {

std::int64_t tie_pairs(std::span<const double> sorted) {
  std::int64_t total = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    total += t * (t - 1) / 2;
    i = j;
  }
  return total;
}

// Sorts v ascending, returning the number of strictly inverted pairs.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("correlation needs equal lengths >= 2");
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[idx[i]];
    ys[i] = y[idx[i]];
  }

  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t n1 = tie_pairs(xs);
  std::int64_t n3 = 0;  // pairs tied in both
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && xs[j] == xs[i] && ys[j] == ys[i]) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    n3 += t * (t - 1) / 2;
    i = j;
  }

  std::vector<double> buf(n);
  const std::int64_t swaps = merge_count(ys, buf, 0, n);
  const std::int64_t n2 = tie_pairs(ys);  // ys is now sorted

  const double denom = std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
  if (denom == 0.0) return kNaN;
  const double s = static_cast<double>(n0 - n1 - n2 + n3) - 2.0 * static_cast<double>(swaps);
  return std::clamp(s / denom, -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const Eigen::MatrixXd& data, CorrelationMethod method) {
  if (data.cols() != static_cast<Eigen::Index>(kNumVariables)) throw Error("correlation needs 6 columns");
  if (data.rows() < 3) throw Error("correlation needs T >= 3");
  CorrelationMatrix cm;
  cm.method = method;
  std::array<std::vector<double>, kNumVariables> cols;
  for (std::size_t c = 0; c < kNumVariables; ++c) {
    const auto col = data.col(static_cast<Eigen::Index>(c));
    cols[c].assign(col.begin(), col.end());
  }
  for (Eigen::Index a = 0; a < 6; ++a) {
    for (Eigen::Index b = a + 1; b < 6; ++b) {
      const auto& xa = cols[static_cast<std::size_t>(a)];
      const auto& xb = cols[static_cast<std::size_t>(b)];
      double r = kNaN;
      switch (method) {
        case CorrelationMethod::Pearson: r = pearson(xa, xb); break;
        case CorrelationMethod::Spearman: r = spearman(xa, xb); break;
        case CorrelationMethod::Kendall: r = kendall_tau_b(xa, xb); break;
      }
      cm.matrix(a, b) = cm.matrix(b, a) = r;
      cm.defined(a, b) = cm.defined(b, a) = !std::isnan(r);
    }
  }
  return cm;
}

}  // namespace nowcast::stats

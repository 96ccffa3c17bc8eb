#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adamrl/errors.hpp"
#include "adamrl/report.hpp"

namespace adamrl {

/// Seed-aggregated error series: per-checkpoint mean and standard error over
/// n_seeds independent runs of one configuration.
struct AggregatedSeries {
  std::vector<long> t;
  std::vector<double> mean_error;
  std::vector<double> se;
  int seed_count = 0;
  std::uint64_t config_hash = 0;
  std::string config_echo;
  long invariant_violations = 0;
  double max_grad_norm = 0.0;
  double grad_norm_bound = 0.0;
  double total_wall_time_seconds = 0.0;
  std::vector<ConvergenceReport> reports;
};

using RunFn = std::function<ConvergenceReport(std::uint64_t split_index)>;

/// Runs the configured algorithm once per split seed and aggregates. The
/// reduction is performed in split order so the aggregate is independent of
/// any execution interleaving; any invariant violation aborts the batch.
inline AggregatedSeries replicate(const RunFn& run, int n_seeds) {
  if (n_seeds < 1) throw ConfigError("seeds: must be >= 1");
  AggregatedSeries agg;
  agg.seed_count = n_seeds;
  agg.reports.reserve(static_cast<std::size_t>(n_seeds));
  for (int k = 0; k < n_seeds; ++k)
    agg.reports.push_back(run(static_cast<std::uint64_t>(k)));

  const auto& first = agg.reports.front();
  agg.config_hash = first.config_hash;
  agg.config_echo = first.config_echo;
  const std::size_t n_points = first.checkpoints.size();
  agg.t.reserve(n_points);
  for (const auto& [t, value] : first.checkpoints) agg.t.push_back(t);

  for (const auto& report : agg.reports) {
    if (report.checkpoints.size() != n_points ||
        report.config_hash != agg.config_hash)
      throw ConfigError("replicate: runs disagree on checkpoint grid or config");
    agg.invariant_violations += report.invariant_violations;
    agg.max_grad_norm = std::max(agg.max_grad_norm, report.max_grad_norm);
    agg.grad_norm_bound = report.grad_norm_bound;
    agg.total_wall_time_seconds += report.wall_time_seconds;
  }
  if (agg.invariant_violations > 0)
    throw ConfigError("replicate: a run reported invariant violations");

  agg.mean_error.assign(n_points, 0.0);
  agg.se.assign(n_points, 0.0);
  for (std::size_t i = 0; i < n_points; ++i) {
    double sum = 0.0;
    for (const auto& report : agg.reports) sum += report.checkpoints[i].second;
    const double mean = sum / n_seeds;
    agg.mean_error[i] = mean;
    if (n_seeds > 1) {
      double ss = 0.0;
      for (const auto& report : agg.reports) {
        const double d = report.checkpoints[i].second - mean;
        ss += d * d;
      }
      agg.se[i] = std::sqrt(ss / (n_seeds - 1)) / std::sqrt(static_cast<double>(n_seeds));
    }
  }
  return agg;
}

/// Log-log rate fit of an error series. The slope is the least-squares
/// coefficient of log(error) against log(t) over the tail half of the
/// checkpoints; the plateau is the mean of the last tenth. A zero error is
/// reported as exact convergence rather than fitted; negative errors are
/// rejected.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  double plateau = 0.0;
  bool exact_convergence = false;
};

inline RateFit fit_rate(const std::vector<long>& t, const std::vector<double>& error) {
  if (t.size() != error.size() || t.size() < 4)
    throw DegenerateSeries("fit_rate: need at least 4 checkpoints");
  RateFit fit;
  const std::size_t n = t.size();
  const std::size_t tail = n / 10 == 0 ? 1 : n / 10;
  double plateau_sum = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) plateau_sum += error[i];
  fit.plateau = plateau_sum / static_cast<double>(tail);

  for (double e : error) {
    if (e < 0.0) throw DegenerateSeries("fit_rate: negative error value");
    if (e == 0.0) {
      fit.exact_convergence = true;
      fit.slope = 0.0;
      fit.intercept = 0.0;
      fit.r_squared = 1.0;
      fit.plateau = 0.0;
      return fit;
    }
  }

  const std::size_t lo = n / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const auto m = static_cast<double>(n - lo);
  for (std::size_t i = lo; i < n; ++i) {
    const double x = std::log(static_cast<double>(t[i]));
    const double y = std::log(error[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
  }
  const double var_x = m * sxx - sx * sx;
  const double var_y = m * syy - sy * sy;
  if (var_x <= 0.0) throw DegenerateSeries("fit_rate: checkpoint grid is degenerate");
  fit.slope = (m * sxy - sx * sy) / var_x;
  fit.intercept = (sy - fit.slope * sx) / m;
  if (var_y <= 0.0) {
    fit.r_squared = 1.0;  // exactly flat series
  } else {
    const double cov = m * sxy - sx * sy;
    fit.r_squared = std::min(1.0, std::max(0.0, (cov * cov) / (var_x * var_y)));
  }
  return fit;
}

inline RateFit fit_rate(const AggregatedSeries& agg) {
  return fit_rate(agg.t, agg.mean_error);
}

/// One plateau measurement of a constant-stepsize configuration. `separated`
/// reports whether the transient C1/T term visibly died out: the tail tenth
/// must agree with the preceding window to 10%.
struct PlateauPoint {
  double alpha = 0.0;
  double plateau = 0.0;
  long horizon_used = 0;
  bool separated = false;
};

namespace detail {

inline bool plateau_separated(const AggregatedSeries& agg) {
  const std::size_t n = agg.mean_error.size();
  if (n < 10) return false;
  const std::size_t tail = n / 10;
  double last = 0.0, window = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) last += agg.mean_error[i];
  last /= static_cast<double>(tail);
  const std::size_t w_lo = (n * 6) / 10, w_hi = (n * 8) / 10;
  for (std::size_t i = w_lo; i < w_hi; ++i) window += agg.mean_error[i];
  window /= static_cast<double>(w_hi - w_lo);
  if (last <= 0.0) return true;  // exact convergence
  return std::abs(window / last - 1.0) <= 0.1;
}

}  // namespace detail

/// Runs `make_run(alpha, T)` per stepsize, doubling T (up to `max_doublings`)
/// until the plateau separates from the transient, and reports
/// (alpha, plateau) pairs. Requires a constant-stepsize configuration and a
/// decreasing list of positive alphas.
inline std::vector<PlateauPoint> plateau_scan(
    const std::function<AggregatedSeries(double alpha, long horizon)>& make_run,
    const std::vector<double>& alphas, long base_horizon, int n_seeds,
    int max_doublings = 3) {
  (void)n_seeds;
  if (alphas.empty()) throw ConfigError("plateau_alphas: empty list");
  double prev = std::numeric_limits<double>::infinity();
  for (double a : alphas) {
    if (!(a > 0.0)) throw ConfigError("plateau_alphas: must be positive");
    if (a >= prev) throw ConfigError("plateau_alphas: must be strictly decreasing");
    prev = a;
  }
  std::vector<PlateauPoint> points;
  for (double alpha : alphas) {
    PlateauPoint point;
    point.alpha = alpha;
    long horizon = base_horizon;
    for (int attempt = 0; attempt <= max_doublings; ++attempt) {
      const AggregatedSeries agg = make_run(alpha, horizon);
      point.plateau = fit_rate(agg).plateau;
      point.horizon_used = horizon;
      point.separated = detail::plateau_separated(agg);
      if (point.separated) break;
      horizon *= 2;
    }
    points.push_back(point);
  }
  return points;
}

namespace detail {

inline std::string format_double(double x) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", x);
  return buffer;
}

}  // namespace detail

/// CSV with columns t, mean_error, se, seed_count; deterministic formatting,
/// byte-identical across repeat invocations of the same config.
inline void write_series_csv(const std::string& path, const AggregatedSeries& agg) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "t,mean_error,se,seed_count\n";
  for (std::size_t i = 0; i < agg.t.size(); ++i)
    out << agg.t[i] << ',' << detail::format_double(agg.mean_error[i]) << ','
        << detail::format_double(agg.se[i]) << ',' << agg.seed_count << '\n';
}

inline nlohmann::ordered_json summary_json(const AggregatedSeries& agg,
                                           const RateFit& fit) {
  nlohmann::ordered_json j;
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(agg.config_hash));
  j["config_hash"] = hash_hex;
  j["seed_count"] = agg.seed_count;
  j["checkpoints"] = agg.t.size();
  j["final_mean_error"] = agg.mean_error.empty() ? 0.0 : agg.mean_error.back();
  j["final_se"] = agg.se.empty() ? 0.0 : agg.se.back();
  j["rate_fit"] = {{"slope", fit.slope},
                   {"intercept", fit.intercept},
                   {"r_squared", fit.r_squared},
                   {"plateau", fit.plateau},
                   {"exact_convergence", fit.exact_convergence}};
  j["invariant_violations"] = agg.invariant_violations;
  j["max_grad_norm"] = agg.max_grad_norm;
  j["grad_norm_bound"] = agg.grad_norm_bound;
  j["config"] = agg.config_echo;
  return j;
}

inline void write_summary_json(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace adamrl

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adamrl/errors.hpp"

namespace adamrl {

enum class MetricKind { PgMinGradNormSq, TdAvgIterateDistSq };

inline const char* metric_name(MetricKind kind) {
  return kind == MetricKind::PgMinGradNormSq ? "min_grad_norm_sq"
                                             : "avg_iterate_dist_sq";
}

/// Per-iteration error series of one seeded run, with config provenance.
/// For the policy-gradient metric the series is the running minimum and is
/// therefore non-increasing; invariant_violations counts runtime bound
/// failures and must be zero for the run to be usable.
struct ConvergenceReport {
  std::string config_echo;
  std::uint64_t config_hash = 0;
  std::uint64_t global_seed = 0;
  std::uint64_t split_index = 0;
  MetricKind metric = MetricKind::TdAvgIterateDistSq;
  std::vector<std::pair<long, double>> checkpoints;
  double wall_time_seconds = 0.0;
  long invariant_violations = 0;

  double max_grad_norm = 0.0;     // largest realized ||g_t||
  double grad_norm_bound = 0.0;   // bound asserted at runtime
  double reference_grad_bound = 0.0;  // c_Theta R_max / (1 - gamma), recorded only
  int first_step_resamples = 0;
  bool g0_enforced = false;

  void check_consistent() const {
    long prev_t = 0;
    double prev_value = 0.0;
    bool first = true;
    for (const auto& [t, value] : checkpoints) {
      if (t <= prev_t)
        throw ConfigError("ConvergenceReport: checkpoints must increase in t");
      if (metric == MetricKind::PgMinGradNormSq && !first && value > prev_value)
        throw ConfigError("ConvergenceReport: running minimum increased");
      prev_t = t;
      prev_value = value;
      first = false;
    }
  }
};

/// FNV-1a over the canonical config echo; stable across runs and platforms.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace adamrl

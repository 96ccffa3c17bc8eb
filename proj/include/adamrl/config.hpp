#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adamrl/errors.hpp"
#include "adamrl/harness.hpp"
#include "adamrl/pg.hpp"
#include "adamrl/td.hpp"

namespace adamrl {

/// Flat key/value experiment description: file values first, command-line
/// overrides on top. Keys are documented in the README; unknown keys are
/// rejected so typos cannot silently fall back to defaults.
class ExperimentConfig {
 public:
  static ExperimentConfig from_file(const std::string& path,
                                    const std::map<std::string, std::string>& overrides) {
    ExperimentConfig config;
    config.kv_ = detail::parse_kv_file(path);
    config.dir_ = std::filesystem::path(path).parent_path().string();
    for (const auto& [key, value] : overrides) config.kv_[key] = value;
    return config;
  }

  static ExperimentConfig from_map(std::map<std::string, std::string> kv) {
    ExperimentConfig config;
    config.kv_ = std::move(kv);
    return config;
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError(key + ": missing required key");
    return it->second;
  }

  double number(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      std::size_t used = 0;
      const double value = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
      return value;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not a number (" + it->second + ")");
    }
  }

  long integer(const std::string& key, long fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      std::size_t used = 0;
      const long value = std::stol(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
      return value;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not an integer (" + it->second + ")");
    }
  }

  std::vector<double> number_list(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return {};
    return detail::parse_numbers<double>(it->second, key);
  }

  /// Resolves a path value relative to the config file location.
  std::string path(const std::string& key) const {
    const std::string value = require(key);
    if (!dir_.empty() && !std::filesystem::path(value).is_absolute() &&
        !std::filesystem::exists(value) &&
        std::filesystem::exists(std::filesystem::path(dir_) / value))
      return (std::filesystem::path(dir_) / value).string();
    return value;
  }

  void reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [key, value] : kv_)
      if (!known.count(key)) throw ConfigError("unknown key: " + key);
  }

  /// Canonical echo of the effective configuration: sorted key=value lines.
  /// Embedded in every report; its FNV-1a hash names the batch.
  std::string echo(const std::map<std::string, std::string>& effective) const {
    std::ostringstream out;
    for (const auto& [key, value] : effective) out << key << " = " << value << '\n';
    return out.str();
  }

  const std::map<std::string, std::string>& raw() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
  std::string dir_;
};

namespace detail {

inline std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a(buffer.str());
}

inline StepSchedule parse_schedule(const std::string& name, double gamma, double& alpha) {
  if (name == "constant") return StepSchedule::Constant;
  if (name == "diminishing") return StepSchedule::Diminishing;
  if (name == "prop1") {
    alpha = 1.0 - gamma;  // alpha_t = (1 - gamma) / sqrt(t)
    return StepSchedule::Diminishing;
  }
  throw ConfigError("schedule: expected constant, diminishing or prop1 (" + name + ")");
}

inline std::string format_number(double x) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", x);
  return buffer;
}

}  // namespace detail

struct PgExperiment {
  PgRunConfig run;
  int n_seeds = 1;
};

struct TdExperiment {
  TdRunConfig run;
  int n_seeds = 1;
  std::vector<double> plateau_alphas;
};

inline PgExperiment make_pg_experiment(const ExperimentConfig& config) {
  config.reject_unknown({"fixture", "T", "schedule", "alpha", "beta1", "beta2", "g0",
                         "seed", "seeds", "oracle_every", "algorithm", "out"});
  const std::string fixture = config.path("fixture");
  PgExperiment exp{PgRunConfig{load_mdp(fixture)}, 1};
  auto& run = exp.run;
  run.horizon = config.integer("T", 1000);
  run.alpha = config.number("alpha", 0.1);
  run.schedule =
      detail::parse_schedule(config.get("schedule", "diminishing"),
                             run.mdp.gamma(), run.alpha);
  run.beta1 = config.number("beta1", 0.9);
  run.beta2 = config.number("beta2", 0.99);
  run.g0 = config.number("g0", 1e-3);
  run.seed = static_cast<std::uint64_t>(config.integer("seed", 1));
  run.oracle_every = config.integer("oracle_every", 0);
  const std::string algorithm = config.get("algorithm", "amsgrad");
  if (algorithm == "amsgrad")
    run.algorithm = PgAlgorithm::AmsGrad;
  else if (algorithm == "sgd")
    run.algorithm = PgAlgorithm::Sgd;
  else
    throw ConfigError("algorithm: expected amsgrad or sgd (" + algorithm + ")");
  exp.n_seeds = static_cast<int>(config.integer("seeds", 1));
  if (exp.n_seeds < 1) throw ConfigError("seeds: must be >= 1");

  std::map<std::string, std::string> effective{{"kind", "run-pg"},
                                               {"fixture", fixture}};
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(detail::file_hash(fixture)));
  effective["fixture_hash"] = hash_hex;
  effective["T"] = std::to_string(run.horizon);
  effective["schedule"] =
      run.schedule == StepSchedule::Constant ? "constant" : "diminishing";
  effective["alpha"] = detail::format_number(run.alpha);
  effective["beta1"] = detail::format_number(run.beta1);
  effective["beta2"] = detail::format_number(run.beta2);
  effective["g0"] = detail::format_number(run.g0);
  effective["seed"] = std::to_string(run.seed);
  effective["seeds"] = std::to_string(exp.n_seeds);
  effective["oracle_every"] = std::to_string(run.effective_oracle_every());
  effective["algorithm"] = algorithm;
  run.config_echo = config.echo(effective);
  run.validate();
  return exp;
}

inline TdExperiment make_td_experiment(const ExperimentConfig& config) {
  config.reject_unknown({"fixture", "features", "policy", "T", "schedule", "alpha",
                         "beta1", "beta2", "lambda", "radius", "g0", "seed", "seeds",
                         "oracle_every", "plateau_alphas", "out"});
  const std::string fixture = config.path("fixture");
  const std::string features_path = config.path("features");
  TdExperiment exp{TdRunConfig{load_mdp(fixture), MatrixXd(), load_features(features_path)},
                   1,
                   {}};
  auto& run = exp.run;
  const std::string policy_name = config.get("policy", "uniform");
  if (policy_name == "uniform") {
    run.policy = uniform_policy(run.mdp);
  } else {
    const auto rows = load_features(policy_name).matrix();  // reuse matrix reader
    run.policy = rows;
  }
  run.horizon = config.integer("T", 1000);
  run.alpha = config.number("alpha", 0.1);
  run.schedule =
      detail::parse_schedule(config.get("schedule", "diminishing"),
                             run.mdp.gamma(), run.alpha);
  run.beta1 = config.number("beta1", 0.9);
  run.beta2 = config.number("beta2", 0.99);
  run.lambda = config.number("lambda", 0.99);
  run.radius = config.number("radius", 0.0);
  run.g0 = config.number("g0", 1e-3);
  run.seed = static_cast<std::uint64_t>(config.integer("seed", 1));
  run.oracle_every = config.integer("oracle_every", 0);
  exp.n_seeds = static_cast<int>(config.integer("seeds", 1));
  if (exp.n_seeds < 1) throw ConfigError("seeds: must be >= 1");
  exp.plateau_alphas = config.number_list("plateau_alphas");

  std::map<std::string, std::string> effective;
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(detail::file_hash(fixture)));
  effective["kind"] = "run-td";
  effective["fixture"] = fixture;
  effective["fixture_hash"] = hash_hex;
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(detail::file_hash(features_path)));
  effective["features"] = features_path;
  effective["features_hash"] = hash_hex;
  effective["policy"] = policy_name;
  effective["T"] = std::to_string(run.horizon);
  effective["schedule"] =
      run.schedule == StepSchedule::Constant ? "constant" : "diminishing";
  effective["alpha"] = detail::format_number(run.alpha);
  effective["beta1"] = detail::format_number(run.beta1);
  effective["beta2"] = detail::format_number(run.beta2);
  effective["lambda"] = detail::format_number(run.lambda);
  effective["radius"] = detail::format_number(run.radius);
  effective["g0"] = detail::format_number(run.g0);
  effective["seed"] = std::to_string(run.seed);
  effective["seeds"] = std::to_string(exp.n_seeds);
  effective["oracle_every"] = std::to_string(run.effective_oracle_every());
  if (!exp.plateau_alphas.empty()) {
    std::string joined;
    for (double a : exp.plateau_alphas)
      joined += (joined.empty() ? "" : " ") + detail::format_number(a);
    effective["plateau_alphas"] = joined;
  }
  run.config_echo = config.echo(effective);
  run.validate();
  return exp;
}

}  // namespace adamrl

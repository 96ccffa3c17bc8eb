#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "adamrl/config.hpp"
#include "test_util.hpp"

using namespace adamrl;
using testutil::fixture;

namespace {

std::map<std::string, std::string> td_map() {
  return {{"fixture", fixture("td10.mdp")},
          {"features", fixture("td10_features.txt")},
          {"T", "100"},
          {"oracle_every", "10"},
          {"seed", "7"}};
}

std::map<std::string, std::string> pg_map() {
  return {{"fixture", fixture("pg4x2.mdp")}, {"T", "100"}, {"oracle_every", "10"}};
}

}  // namespace

TEST_CASE("pg experiment defaults and echo") {
  const auto experiment = make_pg_experiment(ExperimentConfig::from_map(pg_map()));
  CHECK(experiment.run.horizon == 100);
  CHECK(experiment.run.algorithm == PgAlgorithm::AmsGrad);
  CHECK(experiment.run.schedule == StepSchedule::Diminishing);
  CHECK(experiment.n_seeds == 1);
  CHECK(experiment.run.config_echo.find("fixture_hash") != std::string::npos);
  CHECK(experiment.run.config_echo.find("algorithm = amsgrad") != std::string::npos);
}

TEST_CASE("prop1 schedule binds alpha to 1 - gamma") {
  auto kv = pg_map();
  kv["schedule"] = "prop1";
  kv["algorithm"] = "sgd";
  kv["alpha"] = "123.0";  // ignored by prop1
  const auto experiment = make_pg_experiment(ExperimentConfig::from_map(kv));
  CHECK(experiment.run.schedule == StepSchedule::Diminishing);
  CHECK(experiment.run.alpha == doctest::Approx(1.0 - experiment.run.mdp.gamma()));
}

TEST_CASE("validation errors name the offending field") {
  auto kv = td_map();
  kv["lambda"] = "1.5";
  CHECK_THROWS_WITH_AS(make_td_experiment(ExperimentConfig::from_map(kv)),
                       "lambda: must lie in (0, 1]", ConfigError);

  kv = td_map();
  kv["beta2"] = "0";
  CHECK_THROWS_WITH_AS(make_td_experiment(ExperimentConfig::from_map(kv)),
                       "beta2: must lie in (0, 1]", ConfigError);

  kv = td_map();
  kv["oracle_every"] = "7";
  CHECK_THROWS_WITH_AS(make_td_experiment(ExperimentConfig::from_map(kv)),
                       "oracle_every: must divide T", ConfigError);

  kv = td_map();
  kv["T"] = "ten";
  CHECK_THROWS_WITH_AS(make_td_experiment(ExperimentConfig::from_map(kv)),
                       "T: not an integer (ten)", ConfigError);

  kv = td_map();
  kv["frobnicate"] = "1";
  CHECK_THROWS_WITH_AS(make_td_experiment(ExperimentConfig::from_map(kv)),
                       "unknown key: frobnicate", ConfigError);
}

TEST_CASE("missing files are reported with their path") {
  auto kv = td_map();
  kv["fixture"] = "definitely_missing.mdp";
  CHECK_THROWS_AS(make_td_experiment(ExperimentConfig::from_map(kv)), ConfigError);
}

TEST_CASE("td experiment computes a domain ball containing theta*") {
  const auto experiment = make_td_experiment(ExperimentConfig::from_map(td_map()));
  const auto [theta_star, radius] = experiment.run.validate();
  CHECK(radius == doctest::Approx(2.0 * theta_star.norm() + 1.0));
  CHECK(theta_star.norm() <= radius);
}

TEST_CASE("config files support comments and command-line overrides") {
  const auto dir = std::filesystem::temp_directory_path() / "adamrl_config_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "exp.cfg";
  {
    std::ofstream out(path);
    out << "# a comment line\n"
        << "fixture = " << fixture("pg4x2.mdp") << "  # trailing comment\n"
        << "T = 50\n"
        << "oracle_every = 5\n"
        << "alpha = 0.25\n"
        << "seeds = 2\n";
  }
  const auto config = ExperimentConfig::from_file(path.string(), {{"seeds", "3"}});
  const auto experiment = make_pg_experiment(config);
  CHECK(experiment.run.horizon == 50);
  CHECK(experiment.run.alpha == doctest::Approx(0.25));
  CHECK(experiment.n_seeds == 3);  // override wins over the file value
}

TEST_CASE("relative paths resolve against the config file directory") {
  const auto dir = std::filesystem::temp_directory_path() / "adamrl_config_rel";
  std::filesystem::create_directories(dir);
  std::filesystem::copy_file(fixture("pg4x2.mdp"), dir / "local.mdp",
                             std::filesystem::copy_options::overwrite_existing);
  const auto path = dir / "exp.cfg";
  {
    std::ofstream out(path);
    out << "fixture = local.mdp\nT = 10\noracle_every = 1\n";
  }
  const auto experiment =
      make_pg_experiment(ExperimentConfig::from_file(path.string(), {}));
  CHECK(experiment.run.mdp.n_states() == 4);
}

TEST_CASE("identical configs hash identically and echo deterministically") {
  const auto a = make_td_experiment(ExperimentConfig::from_map(td_map()));
  const auto b = make_td_experiment(ExperimentConfig::from_map(td_map()));
  CHECK(a.run.config_echo == b.run.config_echo);
  CHECK(fnv1a(a.run.config_echo) == fnv1a(b.run.config_echo));
}

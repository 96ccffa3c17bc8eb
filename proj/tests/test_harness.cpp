#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adamrl/harness.hpp"
#include "adamrl/td.hpp"
#include "test_util.hpp"

using namespace adamrl;
using testutil::fixture;

namespace {

TdRunConfig short_td_config(std::uint64_t seed) {
  TdRunConfig config{load_mdp(fixture("td10.mdp")), MatrixXd(),
                     load_features(fixture("td10_features.txt"))};
  config.policy = uniform_policy(config.mdp);
  config.horizon = 2000;
  config.oracle_every = 100;
  config.schedule = StepSchedule::Diminishing;
  config.alpha = 0.3;
  config.seed = seed;
  config.config_echo = "harness test";
  return config;
}

RunFn td_runner(const TdRunConfig& config) {
  return [config](std::uint64_t k) {
    auto run = config;
    run.split_index = k;
    return run_td_amsgrad(run);
  };
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("replicate with one seed equals the single report") {
  const auto config = short_td_config(11);
  const auto agg = replicate(td_runner(config), 1);
  const auto single = td_runner(config)(0);
  REQUIRE(agg.t.size() == single.checkpoints.size());
  for (std::size_t i = 0; i < agg.t.size(); ++i) {
    CHECK(agg.mean_error[i] == single.checkpoints[i].second);
    CHECK(agg.se[i] == 0.0);
  }
  CHECK(agg.config_hash == fnv1a("harness test"));
}

TEST_CASE("zero-reward runs aggregate to a constant zero series") {
  auto config = short_td_config(12);
  std::vector<MatrixXd> transition{config.mdp.transition(0), config.mdp.transition(1)};
  config.mdp = TabularMdp<double>(std::move(transition), MatrixXd::Zero(10, 2), 0.5,
                                  config.mdp.initial_dist(), 1.0);
  config.g0 = 0.0;
  const auto agg = replicate(td_runner(config), 4);
  for (double value : agg.mean_error) CHECK(value == agg.mean_error.front());
  CHECK(agg.mean_error.front() == 0.0);
}

TEST_CASE("quadrupling the seed count halves the standard error") {
  const auto config = short_td_config(13);
  const auto agg16 = replicate(td_runner(config), 16);
  const auto agg64 = replicate(td_runner(config), 64);
  const double se16 = agg16.se.back();
  const double se64 = agg64.se.back();
  REQUIRE(se64 > 0.0);
  CHECK(se16 / se64 == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("fit_rate recovers synthetic power laws") {
  std::vector<long> t;
  std::vector<double> inv_sqrt, flat, log_over_sqrt;
  for (long k = 1000; k <= 100000; k += 1000) {
    t.push_back(k);
    inv_sqrt.push_back(std::pow(static_cast<double>(k), -0.5));
    flat.push_back(0.37);
    log_over_sqrt.push_back(std::log(static_cast<double>(k)) /
                            std::sqrt(static_cast<double>(k)));
  }
  const auto fit1 = fit_rate(t, inv_sqrt);
  CHECK(fit1.slope == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(fit1.r_squared == doctest::Approx(1.0).epsilon(1e-9));

  const auto fit2 = fit_rate(t, flat);
  CHECK(std::abs(fit2.slope) <= 1e-9);
  CHECK(fit2.plateau == doctest::Approx(0.37).epsilon(1e-12));

  const auto fit3 = fit_rate(t, log_over_sqrt);
  CHECK(fit3.slope > -0.5);
  CHECK(fit3.slope < -0.3);
}

TEST_CASE("fit_rate rejects degenerate series and reports exact convergence") {
  std::vector<long> t{1, 2, 3};
  std::vector<double> e{1.0, 0.5, 0.25};
  CHECK_THROWS_AS(fit_rate(t, e), DegenerateSeries);  // fewer than 4 checkpoints

  std::vector<long> t4{10, 20, 30, 40};
  CHECK_THROWS_AS(fit_rate(t4, {1.0, 0.5, -0.1, 0.2}), DegenerateSeries);

  const auto fit = fit_rate(t4, {1.0, 0.5, 0.0, 0.0});
  CHECK(fit.exact_convergence);
  CHECK(fit.plateau == 0.0);
}

TEST_CASE("plateau scan flags unseparated transients and validates its input") {
  // Pure 1/t transient: never flattens, so every attempt stays unseparated.
  auto make_run = [](double alpha, long horizon) {
    AggregatedSeries agg;
    agg.seed_count = 1;
    for (long t = horizon / 200; t <= horizon; t += horizon / 200) {
      agg.t.push_back(t);
      agg.mean_error.push_back(alpha + 100.0 / static_cast<double>(t));
      agg.se.push_back(0.0);
    }
    return agg;
  };
  const auto points = plateau_scan(make_run, {1.0, 0.001}, 1000, 1, 1);
  CHECK(points[0].separated);        // alpha floor dominates the 100/t transient
  CHECK_FALSE(points[1].separated);  // transient still decaying at the capped T
  CHECK(points[0].plateau > points[1].plateau);

  CHECK_THROWS_AS(plateau_scan(make_run, {}, 1000, 1), ConfigError);
  CHECK_THROWS_AS(plateau_scan(make_run, {0.1, 0.2}, 1000, 1), ConfigError);
  CHECK_THROWS_AS(plateau_scan(make_run, {0.1, -0.2}, 1000, 1), ConfigError);
}

TEST_CASE("plateau scan is deterministic for identical stepsizes") {
  auto base = short_td_config(14);
  base.schedule = StepSchedule::Constant;
  auto make_run = [&base](double alpha, long horizon) {
    auto config = base;
    config.alpha = alpha;
    config.horizon = horizon;
    config.oracle_every = std::max<long>(1, horizon / 200);
    return replicate(td_runner(config), 4);
  };
  const auto first = plateau_scan(make_run, {0.2}, 2000, 4, 0);
  const auto second = plateau_scan(make_run, {0.2}, 2000, 4, 0);
  CHECK(first[0].plateau == second[0].plateau);
}

TEST_CASE("csv and json artifacts are deterministic") {
  const auto agg = replicate(td_runner(short_td_config(15)), 2);
  const auto fit = fit_rate(agg);
  const auto dir = std::filesystem::temp_directory_path() / "adamrl_harness_test";
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "series.csv").string();
  const std::string json = (dir / "summary.json").string();

  write_series_csv(csv, agg);
  const std::string csv_bytes = slurp(csv);
  write_series_csv(csv, agg);
  CHECK(slurp(csv) == csv_bytes);
  CHECK(csv_bytes.rfind("t,mean_error,se,seed_count\n", 0) == 0);

  write_summary_json(json, summary_json(agg, fit));
  const std::string json_bytes = slurp(json);
  write_summary_json(json, summary_json(agg, fit));
  CHECK(slurp(json) == json_bytes);
  const auto parsed = nlohmann::json::parse(json_bytes);
  CHECK(parsed.contains("config_hash"));
  CHECK(parsed.contains("rate_fit"));
  CHECK(parsed["invariant_violations"] == 0);
  CHECK(parsed["seed_count"] == 2);
}

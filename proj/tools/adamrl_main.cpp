#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "adamrl/config.hpp"
#include "adamrl/harness.hpp"
#include "adamrl/mdp_oracles.hpp"
#include "adamrl/pg.hpp"
#include "adamrl/softmax_policy.hpp"
#include "adamrl/td.hpp"
#include "adamrl/verify.hpp"

#ifndef ADAMRL_FIXTURE_DIR
#define ADAMRL_FIXTURE_DIR "fixtures"
#endif

namespace {

using namespace adamrl;

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ADAMRL_OUT"); env && *env) return env;
  return "out";
}

void apply_overrides(std::map<std::string, std::string>& overrides, long seeds,
                     long long seed) {
  if (seeds > 0) overrides["seeds"] = std::to_string(seeds);
  if (seed >= 0) overrides["seed"] = std::to_string(seed);
}

int cmd_run_td(const std::string& config_path,
               const std::map<std::string, std::string>& overrides,
               const std::string& out_dir) {
  const auto config = ExperimentConfig::from_file(config_path, overrides);
  auto experiment = make_td_experiment(config);
  std::filesystem::create_directories(out_dir);

  const auto agg = replicate(
      [&experiment](std::uint64_t k) {
        auto run = experiment.run;
        run.split_index = k;
        return run_td_amsgrad(run);
      },
      experiment.n_seeds);
  const auto fit = fit_rate(agg);
  write_series_csv(out_dir + "/td_series.csv", agg);
  auto summary = summary_json(agg, fit);
  summary["metric"] = metric_name(MetricKind::TdAvgIterateDistSq);

  if (!experiment.plateau_alphas.empty()) {
    if (experiment.run.schedule != StepSchedule::Constant)
      throw ConfigError("plateau_alphas: requires schedule = constant");
    auto make_run = [&experiment](double alpha, long horizon) {
      auto run_config = experiment.run;
      run_config.alpha = alpha;
      run_config.horizon = horizon;
      run_config.oracle_every = std::max<long>(1, horizon / 200);
      return replicate(
          [&run_config](std::uint64_t k) {
            auto run = run_config;
            run.split_index = k;
            return run_td_amsgrad(run);
          },
          experiment.n_seeds);
    };
    const auto points = plateau_scan(make_run, experiment.plateau_alphas,
                                     experiment.run.horizon, experiment.n_seeds);
    nlohmann::ordered_json plateau = nlohmann::ordered_json::array();
    for (const auto& point : points)
      plateau.push_back({{"alpha", point.alpha},
                         {"plateau", point.plateau},
                         {"horizon_used", point.horizon_used},
                         {"separated", point.separated}});
    summary["plateau_scan"] = plateau;
    for (const auto& point : points)
      if (!point.separated)
        std::printf("warning: plateau at alpha=%g not separated from the transient\n",
                    point.alpha);
  }
  write_summary_json(out_dir + "/td_summary.json", summary);
  std::printf("run-td: %d seed(s), final mean error %.6g, wall %.1fs\n",
              agg.seed_count, agg.mean_error.empty() ? 0.0 : agg.mean_error.back(),
              agg.total_wall_time_seconds);
  std::printf("wrote %s/td_series.csv and %s/td_summary.json\n", out_dir.c_str(),
              out_dir.c_str());
  return 0;
}

int cmd_run_pg(const std::string& config_path,
               const std::map<std::string, std::string>& overrides,
               const std::string& out_dir) {
  const auto config = ExperimentConfig::from_file(config_path, overrides);
  auto experiment = make_pg_experiment(config);
  std::filesystem::create_directories(out_dir);

  const auto agg = replicate(
      [&experiment](std::uint64_t k) {
        auto run = experiment.run;
        run.split_index = k;
        return run_pg(run);
      },
      experiment.n_seeds);
  const auto fit = fit_rate(agg);
  write_series_csv(out_dir + "/pg_series.csv", agg);
  auto summary = summary_json(agg, fit);
  summary["metric"] = metric_name(MetricKind::PgMinGradNormSq);
  summary["reference_grad_bound"] = agg.reports.front().reference_grad_bound;
  write_summary_json(out_dir + "/pg_summary.json", summary);
  for (const auto& report : agg.reports)
    if (report.g0_enforced && report.first_step_resamples >= 100) {
      std::printf(
          "warning: |g_1,i| >= G0 unreachable in every coordinate (tabular softmax "
          "blocks); proceeded after %d resamples\n",
          report.first_step_resamples);
      break;
    }
  std::printf("run-pg: %d seed(s), mean min grad-norm^2 %.6g, wall %.1fs\n",
              agg.seed_count, agg.mean_error.empty() ? 0.0 : agg.mean_error.back(),
              agg.total_wall_time_seconds);
  std::printf("wrote %s/pg_series.csv and %s/pg_summary.json\n", out_dir.c_str(),
              out_dir.c_str());
  return 0;
}

// Empirical Lipschitz moduli of the softmax policy class on this MDP, sampled
// over random parameter pairs; reported for reference, never asserted.
std::pair<double, double> estimate_policy_lipschitz(const TabularMdp<double>& mdp) {
  SplitRng rng(0x11B5);
  const Index dim = mdp.n_states() * mdp.n_actions();
  double l_pi = 0.0, l_score = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    VectorXd a(dim), b(dim);
    for (Index i = 0; i < dim; ++i) a(i) = 4.0 * (2.0 * rng.next_double() - 1.0);
    for (Index i = 0; i < dim; ++i) b(i) = a(i) + 0.1 * (2.0 * rng.next_double() - 1.0);
    SoftmaxPolicy<double> pa(mdp.n_states(), mdp.n_actions(), a);
    SoftmaxPolicy<double> pb(mdp.n_states(), mdp.n_actions(), b);
    const double dist = (a - b).norm();
    if (dist < 1e-12) continue;
    for (Index s = 0; s < mdp.n_states(); ++s)
      for (Index act = 0; act < mdp.n_actions(); ++act) {
        l_pi = std::max(l_pi, std::abs(pa.prob(s, act) - pb.prob(s, act)) / dist);
        l_score =
            std::max(l_score, (pa.score(s, act) - pb.score(s, act)).norm() / dist);
      }
  }
  return {l_score, l_pi};
}

int cmd_diagnose_mdp(const std::string& fixture_path, const std::string& features_path,
                     int horizon) {
  const auto mdp = load_mdp(fixture_path);
  const auto policy = uniform_policy(mdp);
  std::printf("fixture: %s (%ld states, %ld actions, gamma %.4g, r_max %.4g)\n",
              fixture_path.c_str(), static_cast<long>(mdp.n_states()),
              static_cast<long>(mdp.n_actions()), mdp.gamma(), mdp.r_max());

  const auto nu = stationary_distribution(mdp, policy);
  std::printf("stationary distribution under the uniform policy:\n ");
  for (Index s = 0; s < mdp.n_states(); ++s) std::printf(" %.6f", nu.probs(s));
  std::printf("\n");

  const auto profile = mixing_profile(mdp, policy, horizon);
  std::printf("mixing envelope: sigma %.6g, rho %.6g\n", profile.sigma, profile.rho);
  for (double alpha : {0.1, 0.01, 0.001})
    std::printf("  tau*(%.3g) = %ld\n", alpha, tau_star(profile, alpha));

  const auto features = features_path.empty()
                            ? LinearFeatures<double>::identity(mdp.n_states())
                            : load_features(features_path);
  const auto [sigma, omega] = feature_covariance(mdp, policy, features);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eigs(sigma);
  std::printf("feature covariance eigenvalues in [%.6g, %.6g] (omega %.6g)\n",
              eigs.eigenvalues().minCoeff(), eigs.eigenvalues().maxCoeff(), omega);

  const VectorXd theta_star = td_fixed_point(mdp, policy, features);
  std::printf("TD fixed point theta* (norm %.6g):\n ", theta_star.norm());
  for (Index i = 0; i < theta_star.size(); ++i) std::printf(" %.6f", theta_star(i));
  std::printf("\n");

  std::printf("exact J under the uniform policy: %.6f\n", exact_j(mdp, policy));
  const auto [l_score, l_pi] = estimate_policy_lipschitz(mdp);
  std::printf("empirical softmax moduli (reference only): L ~ %.4g, L_pi ~ %.4g\n",
              l_score, l_pi);
  return 0;
}

int cmd_verify(const std::string& level, const std::string& out_dir,
               const std::string& fixture_dir, const std::string& inject) {
  verify::Options options;
  if (level == "fast")
    options.level = verify::Level::Fast;
  else if (level == "full")
    options.level = verify::Level::Full;
  else
    throw ConfigError("level: expected fast or full (" + level + ")");
  options.fixture_dir = fixture_dir;
  if (!inject.empty()) options.inject.insert(inject);

  const auto results = verify::run_checks(options);
  bool all_passed = true;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& result : results) {
    std::printf("[%s] %-32s (%6.2fs) %s\n", result.passed ? "PASS" : "FAIL",
                result.name.c_str(), result.seconds, result.details.c_str());
    checks.push_back({{"name", result.name},
                      {"passed", result.passed},
                      {"seconds", result.seconds},
                      {"details", result.details}});
    all_passed = all_passed && result.passed;
  }
  nlohmann::ordered_json summary;
  summary["level"] = level;
  summary["all_passed"] = all_passed;
  summary["checks"] = checks;
  std::filesystem::create_directories(out_dir);
  write_summary_json(out_dir + "/verify_" + level + ".json", summary);
  std::printf("%s\n", all_passed ? "all checks passed" : "some checks FAILED");
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adam-type reinforcement-learning laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_flag, level = "fast";
  std::string fixture_dir = ADAMRL_FIXTURE_DIR;
  std::string features_path, inject;
  long seeds = 0;
  long long seed = -1;
  int horizon = 50;
  std::string diagnose_fixture;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--out", out_flag, "output directory (default $ADAMRL_OUT or ./out)");
    cmd->add_option("--seeds", seeds, "number of replicate seeds (overrides config)");
    cmd->add_option("--seed", seed, "global seed (overrides config)");
  };
  auto* run_td = app.add_subcommand("run-td", "run TD-AMSGrad experiments");
  add_run_flags(run_td);
  auto* run_pg = app.add_subcommand("run-pg", "run PG-AMSGrad / PG-SGD experiments");
  add_run_flags(run_pg);

  auto* diagnose = app.add_subcommand("diagnose-mdp", "print fixture diagnostics");
  diagnose->add_option("fixture", diagnose_fixture, "MDP fixture file")->required();
  diagnose->add_option("--features", features_path,
                       "feature matrix file (default: indicator features)");
  diagnose->add_option("--horizon", horizon, "mixing-profile horizon");

  auto* verify_cmd = app.add_subcommand("verify", "run the invariant/property suite");
  verify_cmd->add_option("--level", level, "fast | full");
  verify_cmd->add_option("--out", out_flag, "output directory for the pass/fail JSON");
  verify_cmd->add_option("--fixtures", fixture_dir, "fixture directory");
  verify_cmd->add_option("--inject", inject, "sabotage a named check (test plumbing)")
      ->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    std::map<std::string, std::string> overrides;
    apply_overrides(overrides, seeds, seed);
    const std::string out_dir = resolve_out_dir(out_flag);
    if (run_td->parsed()) return cmd_run_td(config_path, overrides, out_dir);
    if (run_pg->parsed()) return cmd_run_pg(config_path, overrides, out_dir);
    if (diagnose->parsed())
      return cmd_diagnose_mdp(diagnose_fixture, features_path, horizon);
    if (verify_cmd->parsed()) return cmd_verify(level, out_dir, fixture_dir, inject);
  } catch (const NonErgodicChain& error) {
    std::fprintf(stderr,
                 "error: %s\nthe policy-induced chain must be irreducible and "
                 "aperiodic; check the fixture's transition rows\n",
                 error.what());
    return 2;
  } catch (const std::exception& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return 1;
  }
  return 0;
}

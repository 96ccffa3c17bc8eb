#pragma once

#include <chrono>
#include <cmath>
#include <string>

#include "adamrl/amsgrad.hpp"
#include "adamrl/features.hpp"
#include "adamrl/mdp.hpp"
#include "adamrl/mdp_oracles.hpp"
#include "adamrl/report.hpp"
#include "adamrl/rng.hpp"
#include "adamrl/sampler.hpp"

namespace adamrl {

/// Stochastic TD pseudo-gradient for one transition:
/// g = (phi(s)^T theta - r - gamma phi(s')^T theta) phi(s).
/// With ||phi|| <= 1 and ||theta|| <= radius, ||g|| <= R_max + (1+gamma) radius.
template <typename Scalar>
Vector<Scalar> td_pseudo_gradient(const Vector<Scalar>& theta,
                                  const LinearFeatures<Scalar>& features,
                                  const Transition<Scalar>& tr, Scalar gamma) {
  const Scalar delta =
      features.row(tr.s).dot(theta) - tr.r - gamma * features.row(tr.s_next).dot(theta);
  return delta * features.row(tr.s).transpose();
}

/// Mean pseudo-gradient under the stationary law,
/// gbar(theta) = sum_s nu(s) (phi(s)^T theta - r_pi(s) - gamma E_{s'|s}[phi(s')^T] theta) phi(s),
/// evaluated exactly by the per-state sum. gbar(theta*) = 0 at the TD fixed
/// point; gbar is not a gradient of any loss but satisfies the
/// strong-monotonicity inequality checked by the verification suite.
template <typename Scalar>
Vector<Scalar> mean_pseudo_gradient(const TabularMdp<Scalar>& mdp,
                                    const Matrix<Scalar>& policy,
                                    const LinearFeatures<Scalar>& features,
                                    const Vector<Scalar>& theta) {
  const Vector<Scalar> nu = stationary_distribution(mdp, policy).probs;
  const Matrix<Scalar> chain = mdp.policy_chain(policy);
  const Vector<Scalar> r_pi = mdp.policy_reward(policy);

  Vector<Scalar> gbar = Vector<Scalar>::Zero(features.dim());
  for (Index s = 0; s < mdp.n_states(); ++s) {
    Scalar next_value = Scalar(0);
    for (Index s_next = 0; s_next < mdp.n_states(); ++s_next)
      next_value += chain(s, s_next) * features.row(s_next).dot(theta);
    const Scalar delta = features.row(s).dot(theta) - r_pi(s) - mdp.gamma() * next_value;
    gbar += nu(s) * delta * features.row(s).transpose();
  }
  return gbar;
}

struct TdRunConfig {
  TdRunConfig(TabularMdp<double> mdp_in, MatrixXd policy_in,
              LinearFeatures<double> features_in)
      : mdp(std::move(mdp_in)),
        policy(std::move(policy_in)),
        features(std::move(features_in)) {}

  TabularMdp<double> mdp;
  MatrixXd policy;  // fixed evaluation policy
  LinearFeatures<double> features;
  long horizon = 1;  // T
  StepSchedule schedule = StepSchedule::Diminishing;
  double alpha = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double lambda = 0.99;
  double radius = 0.0;  // 0 -> 2 ||theta*|| + 1
  double g0 = 1e-3;     // 0 disables first-step enforcement
  std::uint64_t seed = 0;
  std::uint64_t split_index = 0;
  long oracle_every = 0;  // 0 -> max(1, T / 1000)
  std::string config_echo;

  long effective_oracle_every() const {
    return oracle_every > 0 ? oracle_every : std::max<long>(1, horizon / 1000);
  }

  /// Validates ranges and the domain-ball requirements; returns (theta*, radius).
  std::pair<VectorXd, double> validate() const {
    if (horizon < 1) throw ConfigError("T: must be >= 1");
    if (!(beta1 >= 0.0 && beta1 <= 1.0)) throw ConfigError("beta1: must lie in [0, 1]");
    if (!(beta2 > 0.0 && beta2 <= 1.0)) throw ConfigError("beta2: must lie in (0, 1]");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda: must lie in (0, 1]");
    if (alpha < 0.0) throw ConfigError("alpha: must be non-negative");
    if (g0 < 0.0) throw ConfigError("g0: must be non-negative");
    if (radius < 0.0) throw ConfigError("radius: must be non-negative");
    if (horizon % effective_oracle_every() != 0)
      throw ConfigError("oracle_every: must divide T");
    if (policy.rows() != mdp.n_states() || policy.cols() != mdp.n_actions())
      throw ConfigError("policy: table shape disagrees with the MDP");
    if (features.n_states() != mdp.n_states())
      throw ConfigError("features: row count disagrees with n_states");

    feature_covariance(mdp, policy, features);  // enforces column independence
    const VectorXd theta_star = td_fixed_point(mdp, policy, features);
    if (mean_pseudo_gradient(mdp, policy, features, theta_star).norm() > 1e-9)
      throw ConfigError("features: mean pseudo-gradient residual at theta* exceeds 1e-9");
    const double r = radius > 0.0 ? radius : 2.0 * theta_star.norm() + 1.0;
    if (theta_star.norm() > r)
      throw ConfigError("radius: domain ball does not contain theta*");
    return {theta_star, r};
  }
};

/// TD-AMSGrad: one continuous Markovian trajectory under the true kernel,
/// annealed first-moment weight beta_{1t} = beta1 lambda^t on the retained
/// momentum, weighted projection onto the domain ball after every step, and
/// the running average of projected iterates as the output. Records
/// ||theta_bar_t - theta*||^2 at the oracle cadence.
inline ConvergenceReport run_td_amsgrad(const TdRunConfig& config) {
  const auto [theta_star, radius] = config.validate();
  const auto started = std::chrono::steady_clock::now();
  const TabularMdp<double>& mdp = config.mdp;
  const long cadence = config.effective_oracle_every();
  const DomainBall<double> ball{radius};

  ConvergenceReport report;
  report.metric = MetricKind::TdAvgIterateDistSq;
  report.config_echo = config.config_echo;
  report.config_hash = fnv1a(config.config_echo);
  report.global_seed = config.seed;
  report.split_index = config.split_index;
  report.g0_enforced = config.g0 > 0.0;
  report.grad_norm_bound = mdp.r_max() + (1.0 + mdp.gamma()) * radius;
  report.reference_grad_bound = report.grad_norm_bound;

  SplitRng run_rng(config.seed);
  run_rng = run_rng.split(config.split_index);
  SplitRng chain = run_rng.split(0);

  AmsGradState<double> state(config.features.dim(), config.alpha, config.beta1,
                             config.beta2, config.lambda, config.schedule);
  VectorXd theta = VectorXd::Zero(config.features.dim());
  VectorXd theta_sum = VectorXd::Zero(config.features.dim());
  VectorXd prev_v_hat = state.v_hat();

  Index s = detail::sample_row(mdp.initial_dist(), chain);
  for (long t = 1; t <= config.horizon; ++t) {
    Index a = detail::sample_row(config.policy.row(s), chain);
    Index s_next = step_true(mdp, s, a, chain);
    Transition<double> tr{s, a, mdp.reward()(s, a), s_next};
    VectorXd g = td_pseudo_gradient(theta, config.features, tr, mdp.gamma());

    if (t == 1 && config.g0 > 0.0) {
      int attempts = 0;
      while ((g.array().abs() < config.g0).any() && attempts < 100) {
        a = detail::sample_row(config.policy.row(s), chain);
        s_next = step_true(mdp, s, a, chain);
        tr = Transition<double>{s, a, mdp.reward()(s, a), s_next};
        g = td_pseudo_gradient(theta, config.features, tr, mdp.gamma());
        ++attempts;
      }
      report.first_step_resamples = attempts;
    }

    const double g_norm = g.norm();
    report.max_grad_norm = std::max(report.max_grad_norm, g_norm);
    if (g_norm > report.grad_norm_bound + 1e-9) ++report.invariant_violations;

    theta = project(state.update(theta, g), state.v_hat(), ball);

    if (theta.norm() > radius + 1e-10) ++report.invariant_violations;
    if ((state.v_hat().array() < prev_v_hat.array()).any())
      ++report.invariant_violations;
    prev_v_hat = state.v_hat();

    theta_sum += theta;
    if (t % cadence == 0) {
      const VectorXd theta_bar = theta_sum / static_cast<double>(t);
      report.checkpoints.emplace_back(t, (theta_bar - theta_star).squaredNorm());
    }
    s = s_next;
  }

  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report.check_consistent();
  return report;
}

}  // namespace adamrl

#pragma once

#include <chrono>
#include <cmath>
#include <sstream>
#include <string>

#include "adamrl/amsgrad.hpp"
#include "adamrl/mdp.hpp"
#include "adamrl/mdp_oracles.hpp"
#include "adamrl/report.hpp"
#include "adamrl/rng.hpp"
#include "adamrl/sampler.hpp"
#include "adamrl/softmax_policy.hpp"

namespace adamrl {

enum class PgAlgorithm { AmsGrad, Sgd };

/// Unbiased Monte-Carlo Q estimate with a geometric random horizon:
/// T ~ Geom(1 - sqrt(gamma)) on {1, 2, ...}, then a true-kernel rollout from
/// (s, a) accumulating Qhat = sum_{t<=T} gamma^{(t-1)/2} R(s_t, a_t), so that
/// E[Qhat] equals the exact Q under the gamma^{t-1} return convention. The
/// caller supplies an rng stream independent of the outer chain; the realized
/// value always satisfies |Qhat| <= R_max / (1 - sqrt(gamma)).
template <typename Scalar>
Scalar est_q(const TabularMdp<Scalar>& mdp, const SoftmaxPolicy<Scalar>& policy,
             Index s, Index a, SplitRng& rng) {
  const Scalar root_gamma = std::sqrt(mdp.gamma());
  const double u = 1.0 - rng.next_double();  // in (0, 1]
  long horizon = static_cast<long>(
      std::ceil(std::log(u) / std::log(static_cast<double>(root_gamma))));
  horizon = std::max<long>(1, horizon);

  Scalar q_hat = Scalar(0);
  Scalar weight = Scalar(1);
  Index s_q = s, a_q = a;
  for (long t = 1; t <= horizon; ++t) {
    q_hat += weight * mdp.reward()(s_q, a_q);
    if (t == horizon) break;
    s_q = step_true(mdp, s_q, a_q, rng);
    a_q = detail::sample_row(policy.table().row(s_q), rng);
    weight *= root_gamma;
  }
  return q_hat;
}

/// Gradient estimator g = Qhat * score(s, a).
template <typename Scalar>
Vector<Scalar> pg_gradient(const SoftmaxPolicy<Scalar>& policy, Scalar q_hat,
                           Index s, Index a) {
  return q_hat * policy.score(s, a);
}

struct PgRunConfig {
  explicit PgRunConfig(TabularMdp<double> mdp_in) : mdp(std::move(mdp_in)) {}

  TabularMdp<double> mdp;
  long horizon = 1;  // T
  StepSchedule schedule = StepSchedule::Diminishing;
  double alpha = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double g0 = 1e-3;  // 0 disables first-step enforcement
  std::uint64_t seed = 0;
  std::uint64_t split_index = 0;
  long oracle_every = 0;  // 0 -> max(1, T / 1000)
  PgAlgorithm algorithm = PgAlgorithm::AmsGrad;
  std::string config_echo;  // optional provenance carried into reports

  long effective_oracle_every() const {
    return oracle_every > 0 ? oracle_every : std::max<long>(1, horizon / 1000);
  }

  void validate() const {
    if (horizon < 1) throw ConfigError("T: must be >= 1");
    if (!(beta1 >= 0.0 && beta1 <= 1.0)) throw ConfigError("beta1: must lie in [0, 1]");
    if (!(beta2 > 0.0 && beta2 <= 1.0)) throw ConfigError("beta2: must lie in (0, 1]");
    if (alpha < 0.0) throw ConfigError("alpha: must be non-negative");
    if (g0 < 0.0) throw ConfigError("g0: must be non-negative");
    const long cadence = effective_oracle_every();
    if (horizon % cadence != 0)
      throw ConfigError("oracle_every: must divide T");
  }
};

namespace detail {

template <typename Loop>
ConvergenceReport run_pg_loop(const PgRunConfig& config, Loop&& apply_update) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const TabularMdp<double>& mdp = config.mdp;
  const long cadence = config.effective_oracle_every();

  ConvergenceReport report;
  report.metric = MetricKind::PgMinGradNormSq;
  report.config_echo = config.config_echo;
  report.config_hash = fnv1a(config.config_echo);
  report.global_seed = config.seed;
  report.split_index = config.split_index;
  report.g0_enforced = config.g0 > 0.0;

  // Realized bound on ||g||: the score norm is at most sqrt(2) and the
  // estimator magnitude at most R_max / (1 - sqrt(gamma)). The tighter
  // constant c_Theta R_max / (1 - gamma) is recorded for reference only.
  const double q_bound = mdp.r_max() / (1.0 - std::sqrt(mdp.gamma()));
  report.grad_norm_bound = std::sqrt(2.0) * q_bound;
  report.reference_grad_bound = std::sqrt(2.0) * mdp.r_max() / (1.0 - mdp.gamma());

  SplitRng run_rng(config.seed);
  run_rng = run_rng.split(config.split_index);
  SplitRng chain = run_rng.split(0);

  SoftmaxPolicy<double> policy(mdp.n_states(), mdp.n_actions());
  VectorXd theta = VectorXd::Zero(policy.dim());
  Index s = sample_row(mdp.initial_dist(), chain);
  Index a = sample_row(policy.table().row(s), chain);

  double running_min = std::numeric_limits<double>::infinity();
  for (long t = 1; t <= config.horizon; ++t) {
    SplitRng estq_rng = run_rng.split(static_cast<std::uint64_t>(t));
    double q_hat = est_q(mdp, policy, s, a, estq_rng);
    VectorXd g = pg_gradient(policy, q_hat, s, a);

    if (t == 1 && config.g0 > 0.0) {
      // The G0 floor wants |g_{1,i}| >= G0 in every coordinate; for tabular
      // softmax only the block of the visited state can be nonzero, so this
      // is best-effort: redraw the Q estimate up to 100 times, then proceed.
      int attempts = 0;
      while ((g.array().abs() < config.g0).any() && attempts < 100) {
        q_hat = est_q(mdp, policy, s, a, estq_rng);
        g = pg_gradient(policy, q_hat, s, a);
        ++attempts;
      }
      report.first_step_resamples = attempts;
    }

    if (std::abs(q_hat) > q_bound + 1e-9) ++report.invariant_violations;
    const double g_norm = g.norm();
    report.max_grad_norm = std::max(report.max_grad_norm, g_norm);
    if (g_norm > report.grad_norm_bound + 1e-9) ++report.invariant_violations;

    if (t % cadence == 0) {
      const double grad_norm_sq = exact_policy_gradient(mdp, policy).squaredNorm();
      running_min = std::min(running_min, grad_norm_sq);
      report.checkpoints.emplace_back(t, running_min);
    }

    theta = apply_update(theta, g, t);
    policy.set_theta(theta);

    s = step_restart(mdp, s, a, chain);
    a = sample_row(policy.table().row(s), chain);
  }

  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report.check_consistent();
  return report;
}

}  // namespace detail

/// PG-AMSGrad: restart-kernel Markovian sampling, EstQ gradient estimates and
/// AMSGrad updates with a constant first-moment blend. Records the running
/// minimum of ||grad J(theta_t)||^2 at the oracle cadence.
inline ConvergenceReport run_pg_amsgrad(const PgRunConfig& config) {
  AmsGradState<double> state(config.mdp.n_states() * config.mdp.n_actions(),
                             config.alpha, config.beta1, config.beta2,
                             /*lambda=*/1.0, config.schedule);
  return detail::run_pg_loop(config, [&state](const VectorXd& theta, const VectorXd& g,
                                              long) { return state.update(theta, g); });
}

/// PG-SGD baseline: the same loop with theta <- theta - alpha_t g_t.
inline ConvergenceReport run_pg_sgd(const PgRunConfig& config) {
  return detail::run_pg_loop(
      config, [&config](const VectorXd& theta, const VectorXd& g, long t) {
        return (theta - stepsize(config.schedule, config.alpha, t) * g).eval();
      });
}

inline ConvergenceReport run_pg(const PgRunConfig& config) {
  return config.algorithm == PgAlgorithm::AmsGrad ? run_pg_amsgrad(config)
                                                  : run_pg_sgd(config);
}

}  // namespace adamrl

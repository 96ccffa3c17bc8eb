#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adamrl/mdp_oracles.hpp"
#include "adamrl/pg.hpp"
#include "adamrl/softmax_policy.hpp"
#include "test_util.hpp"

using namespace adamrl;
using testutil::fixture;

namespace {

PgRunConfig base_config(TabularMdp<double> mdp) {
  PgRunConfig config{std::move(mdp)};
  config.horizon = 100;
  config.oracle_every = 10;
  config.schedule = StepSchedule::Diminishing;
  config.alpha = 0.2;
  config.seed = 99;
  return config;
}

}  // namespace

TEST_CASE("softmax rows are normalized and score blocks sum to zero") {
  SplitRng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    SoftmaxPolicy<double> policy(3, 4, testutil::random_vector(12, 8.0, rng));
    for (Index s = 0; s < 3; ++s) {
      CHECK(policy.table().row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
      for (Index a = 0; a < 4; ++a) {
        const VectorXd score = policy.score(s, a);
        CHECK(score.segment(s * 4, 4).sum() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(score.head(s * 4).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK(score.norm() <= std::sqrt(2.0) + 1e-12);
      }
    }
  }
}

TEST_CASE("score with equal logits is the centered indicator") {
  SoftmaxPolicy<double> policy(1, 2);
  const VectorXd score = policy.score(0, 0);
  CHECK(score(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(score(1) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("score matches finite differences of log pi") {
  SplitRng rng(34);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd theta = testutil::random_vector(6, 2.0, rng);
    SoftmaxPolicy<double> policy(3, 2, theta);
    const Index s = static_cast<Index>(rng.next_u64() % 3);
    const Index a = static_cast<Index>(rng.next_u64() % 2);
    const VectorXd score = policy.score(s, a);
    for (Index i = 0; i < 6; ++i) {
      VectorXd up = theta, down = theta;
      up(i) += h;
      down(i) -= h;
      const double fd = (std::log(SoftmaxPolicy<double>(3, 2, up).prob(s, a)) -
                         std::log(SoftmaxPolicy<double>(3, 2, down).prob(s, a))) /
                        (2.0 * h);
      CHECK(score(i) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("est_q is unbiased on the one-state analytic fixture") {
  const auto mdp = load_mdp(fixture("single1.mdp"));  // gamma = 1/4, R = 1
  SoftmaxPolicy<double> policy(1, 1);
  SplitRng rng(55);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  const double bound = mdp.r_max() / (1.0 - std::sqrt(mdp.gamma()));
  for (int i = 0; i < n; ++i) {
    const double q = est_q(mdp, policy, 0, 0, rng);
    CHECK(std::abs(q) <= bound + 1e-12);
    sum += q;
    sum_sq += q * q;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - 4.0 / 3.0) <= 3.0 * se);
}

TEST_CASE("est_q is unbiased against the exact Q tables") {
  const auto mdp = load_mdp(fixture("rand3x2.mdp"));
  SplitRng theta_rng(8);
  SoftmaxPolicy<double> policy(3, 2, testutil::random_vector(6, 1.0, theta_rng));
  const auto tables = exact_v_q(mdp, policy.table());
  SplitRng rng(56);
  const int n = 20000;  // per (s, a); the acceptance suite runs 10^5
  for (Index s = 0; s < 3; ++s)
    for (Index a = 0; a < 2; ++a) {
      double sum = 0.0, sum_sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double q = est_q(mdp, policy, s, a, rng);
        sum += q;
        sum_sq += q * q;
      }
      const double mean = sum / n;
      const double se = std::sqrt((sum_sq / n - mean * mean) / n);
      CHECK(std::abs(mean - tables.q(s, a)) <= 3.0 * se);
    }
}

TEST_CASE("est_q degenerates to the immediate reward as gamma vanishes") {
  std::vector<MatrixXd> transition{(MatrixXd(2, 2) << 0.5, 0.5, 0.5, 0.5).finished()};
  MatrixXd reward(2, 1);
  reward << 0.7, 0.2;
  const TabularMdp<double> mdp(std::move(transition), std::move(reward), 1e-12,
                               (VectorXd(2) << 1.0, 0.0).finished(), 1.0);
  SoftmaxPolicy<double> policy(2, 1);
  SplitRng rng(57);
  for (int i = 0; i < 1000; ++i)
    CHECK(est_q(mdp, policy, 0, 0, rng) == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("pg_gradient scales the score") {
  SoftmaxPolicy<double> policy(1, 2);
  CHECK(pg_gradient(policy, 0.0, 0, 0).lpNorm<Eigen::Infinity>() == 0.0);
  const VectorXd g = pg_gradient(policy, 2.0, 0, 0);
  CHECK(g(0) == doctest::Approx(1.0));
  CHECK(g(1) == doctest::Approx(-1.0));
}

TEST_CASE("T = 1 report carries a single oracle value at theta_1") {
  auto config = base_config(load_mdp(fixture("pg4x2.mdp")));
  config.horizon = 1;
  config.oracle_every = 1;
  const auto report = run_pg_amsgrad(config);
  REQUIRE(report.checkpoints.size() == 1);
  CHECK(report.checkpoints[0].first == 1);
  SoftmaxPolicy<double> policy(4, 2);  // theta_1 = 0
  CHECK(report.checkpoints[0].second ==
        doctest::Approx(exact_policy_gradient(config.mdp, policy).squaredNorm())
            .epsilon(1e-12));
  CHECK(report.invariant_violations == 0);
}

TEST_CASE("identical seeds give bit-identical reports") {
  const auto config = base_config(load_mdp(fixture("pg4x2.mdp")));
  for (auto runner : {run_pg_amsgrad, run_pg_sgd}) {
    const auto r1 = runner(config);
    const auto r2 = runner(config);
    REQUIRE(r1.checkpoints.size() == r2.checkpoints.size());
    for (std::size_t i = 0; i < r1.checkpoints.size(); ++i) {
      CHECK(r1.checkpoints[i].first == r2.checkpoints[i].first);
      CHECK(r1.checkpoints[i].second == r2.checkpoints[i].second);
    }
    CHECK(r1.max_grad_norm == r2.max_grad_norm);
    CHECK(r1.invariant_violations == 0);
  }
}

TEST_CASE("running minimum is non-increasing and bounds are respected") {
  auto config = base_config(load_mdp(fixture("pg4x2.mdp")));
  config.horizon = 2000;
  config.oracle_every = 20;
  for (auto runner : {run_pg_amsgrad, run_pg_sgd}) {
    const auto report = runner(config);
    CHECK(report.invariant_violations == 0);
    CHECK(report.max_grad_norm <= report.grad_norm_bound + 1e-9);
    for (std::size_t i = 1; i < report.checkpoints.size(); ++i)
      CHECK(report.checkpoints[i].second <= report.checkpoints[i - 1].second);
  }
}

TEST_CASE("zero rewards freeze PG-SGD and the oracle series") {
  std::vector<MatrixXd> transition{(MatrixXd(2, 2) << 0.6, 0.4, 0.3, 0.7).finished()};
  TabularMdp<double> mdp(std::move(transition), MatrixXd::Zero(2, 1), 0.5,
                         (VectorXd(2) << 0.5, 0.5).finished(), 1.0);
  auto config = base_config(std::move(mdp));
  config.algorithm = PgAlgorithm::Sgd;
  config.g0 = 0.0;  // zero gradients everywhere; nothing to enforce
  const auto report = run_pg_sgd(config);
  for (const auto& [t, value] : report.checkpoints) CHECK(value == 0.0);
  CHECK(report.max_grad_norm == 0.0);
}

TEST_CASE("alpha = 0 keeps the oracle series constant") {
  auto config = base_config(load_mdp(fixture("pg4x2.mdp")));
  config.alpha = 0.0;
  config.algorithm = PgAlgorithm::Sgd;
  const auto report = run_pg(config);
  for (const auto& [t, value] : report.checkpoints)
    CHECK(value == doctest::Approx(report.checkpoints.front().second).epsilon(1e-15));
}

TEST_CASE("config validation names the offending field") {
  auto config = base_config(load_mdp(fixture("pg4x2.mdp")));
  config.oracle_every = 7;  // does not divide T = 100
  CHECK_THROWS_WITH_AS(run_pg_amsgrad(config), "oracle_every: must divide T",
                       ConfigError);
  config.oracle_every = 10;
  config.beta2 = 0.0;
  CHECK_THROWS_WITH_AS(run_pg_amsgrad(config), "beta2: must lie in (0, 1]", ConfigError);
}

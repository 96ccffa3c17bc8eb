#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "adamrl/mdp.hpp"
#include "adamrl/mdp_oracles.hpp"
#include "adamrl/rng.hpp"
#include "adamrl/sampler.hpp"
#include "test_util.hpp"

using namespace adamrl;
using testutil::fixture;

namespace {

double tv(const VectorXd& p, const VectorXd& q) { return 0.5 * (p - q).lpNorm<1>(); }

VectorXd empirical_state_dist(const std::vector<Transition<double>>& path, Index n) {
  VectorXd freq = VectorXd::Zero(n);
  for (const auto& tr : path) freq(tr.s) += 1.0;
  return freq / freq.sum();
}

}  // namespace

TEST_CASE("rng streams are reproducible and split streams differ") {
  SplitRng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  SplitRng root(7);
  SplitRng s1 = root.split(1), s2 = root.split(2), s1_again = root.split(1);
  CHECK(s1.next_u64() != s2.next_u64());
  CHECK(s1_again.next_u64() == SplitRng(7).split(1).next_u64());

  SplitRng u(99);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) mean += u.next_double();
  mean /= 100000.0;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("step_true follows deterministic rows exactly") {
  const auto mdp = load_mdp(fixture("periodic2.mdp"));  // P = [[0,1],[1,0]]
  SplitRng rng(1);
  for (int i = 0; i < 100; ++i) {
    CHECK(step_true(mdp, 0, 0, rng) == 1);
    CHECK(step_true(mdp, 1, 0, rng) == 0);
  }
}

TEST_CASE("step_true matches a half-half row to binomial accuracy") {
  std::vector<MatrixXd> transition{(MatrixXd(2, 2) << 0.5, 0.5, 0.5, 0.5).finished()};
  const TabularMdp<double> mdp(std::move(transition), MatrixXd::Zero(2, 1), 0.5,
                               (VectorXd(2) << 0.5, 0.5).finished(), 1.0);
  SplitRng rng(123);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i)
    if (step_true(mdp, 0, 0, rng) == 0) ++hits;
  const double se = std::sqrt(0.25 / n);
  CHECK(std::abs(hits / static_cast<double>(n) - 0.5) <= 3.0 * se);
}

TEST_CASE("identical seeds give identical trajectories") {
  const auto mdp = testutil::random_mdp(5, 2, 0.8, 11);
  const auto policy = uniform_policy(mdp);
  SplitRng r1(2024), r2(2024);
  const auto path1 = rollout(mdp, policy, Kernel::True, 1000, r1);
  const auto path2 = rollout(mdp, policy, Kernel::True, 1000, r2);
  REQUIRE(path1.size() == path2.size());
  for (std::size_t i = 0; i < path1.size(); ++i) {
    CHECK(path1[i].s == path2[i].s);
    CHECK(path1[i].a == path2[i].a);
    CHECK(path1[i].s_next == path2[i].s_next);
    CHECK(path1[i].r == mdp.reward()(path1[i].s, path1[i].a));
  }
}

TEST_CASE("restart step law is the gamma-mixture of kernel and restart") {
  std::vector<MatrixXd> transition{(MatrixXd(2, 2) << 0.2, 0.8, 0.5, 0.5).finished()};
  const TabularMdp<double> mdp(std::move(transition), MatrixXd::Zero(2, 1), 0.5,
                               (VectorXd(2) << 1.0, 0.0).finished(), 1.0);
  // gamma P(.|0,0) + (1-gamma) zeta = 0.5 (0.2, 0.8) + 0.5 (1, 0) = (0.6, 0.4)
  SplitRng rng(5);
  const int n = 100000;
  VectorXd freq = VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) freq(step_restart(mdp, 0, 0, rng)) += 1.0;
  freq /= n;
  for (Index s = 0; s < 2; ++s) {
    const double expect = s == 0 ? 0.6 : 0.4;
    const double se = std::sqrt(expect * (1 - expect) / n);
    CHECK(std::abs(freq(s) - expect) <= 3.0 * se);
  }
}

TEST_CASE("restart law approaches the true kernel as gamma approaches 1") {
  std::vector<MatrixXd> transition{(MatrixXd(2, 2) << 0.3, 0.7, 0.6, 0.4).finished()};
  const TabularMdp<double> mdp(std::move(transition), MatrixXd::Zero(2, 1),
                               1.0 - 1e-9, (VectorXd(2) << 0.0, 1.0).finished(), 1.0);
  SplitRng rng(6);
  const int n = 50000;
  VectorXd freq = VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) freq(step_restart(mdp, 0, 0, rng)) += 1.0;
  freq /= n;
  const double se = std::sqrt(0.3 * 0.7 / n);
  CHECK(std::abs(freq(0) - 0.3) <= 3.0 * se);
}

TEST_CASE("rollout starts from the initial distribution") {
  const auto mdp = load_mdp(fixture("chain2.mdp"));  // zeta = (1, 0)
  const auto policy = uniform_policy(mdp);
  SplitRng rng(9);
  for (int i = 0; i < 50; ++i) {
    const auto path = rollout(mdp, policy, Kernel::True, 1, rng);
    REQUIRE(path.size() == 1);
    CHECK(path[0].s == 0);
  }
}

TEST_CASE("long true-kernel rollouts concentrate on the stationary law") {
  const auto mdp = testutil::random_mdp(4, 2, 0.9, 21);
  const auto policy = uniform_policy(mdp);
  const VectorXd nu = stationary_distribution(mdp, policy).probs;
  SplitRng rng(77);
  const auto path = rollout(mdp, policy, Kernel::True, 200000, rng);
  CHECK(tv(empirical_state_dist(path, 4), nu) <= 0.01);
}

TEST_CASE("long restart-kernel rollouts concentrate on the discounted visitation") {
  const auto mdp = testutil::random_mdp(4, 2, 0.9, 22);
  const auto policy = uniform_policy(mdp);
  const VectorXd target = discounted_visitation(mdp, policy).normalized.probs;
  SplitRng rng(78);
  const auto path = rollout(mdp, policy, Kernel::Restart, 200000, rng);
  VectorXd freq = VectorXd::Zero(8);
  for (const auto& tr : path) freq(tr.s * 2 + tr.a) += 1.0;
  freq /= freq.sum();
  CHECK(tv(freq, target) <= 0.01);
}

TEST_CASE("empirical mixing stays inside the fitted envelope") {
  const auto mdp = load_mdp(fixture("mix2.mdp"));
  const auto policy = uniform_policy(mdp);
  const auto profile = mixing_profile(mdp, policy, 25);
  const VectorXd nu = stationary_distribution(mdp, policy).probs;

  const int n_paths = 20000;
  const int horizon = 20;
  std::vector<VectorXd> counts(static_cast<std::size_t>(horizon), VectorXd::Zero(2));
  SplitRng root(31);
  for (int i = 0; i < n_paths; ++i) {
    SplitRng rng = root.split(static_cast<std::uint64_t>(i));
    Index s = 0;  // worst-case deterministic start
    for (int t = 1; t <= horizon; ++t) {
      const Index a = adamrl::detail::sample_row(policy.row(s), rng);
      s = step_true(mdp, s, a, rng);
      counts[static_cast<std::size_t>(t - 1)](s) += 1.0;
    }
  }
  for (int t : {1, 5, 10, 20}) {
    const VectorXd freq = counts[static_cast<std::size_t>(t - 1)] / n_paths;
    double se_budget = 0.0;
    for (Index s = 0; s < 2; ++s)
      se_budget += 0.5 * std::sqrt(nu(s) * (1 - nu(s)) / n_paths);
    const double envelope =
        profile.sigma * std::pow(profile.rho, static_cast<double>(t));
    CHECK(tv(freq, nu) <= envelope + 3.0 * se_budget);
  }
}

TEST_CASE("time-varying policy provider is honored per step") {
  const auto mdp = load_mdp(fixture("bandit2.mdp"));
  MatrixXd always0(1, 2), always1(1, 2);
  always0 << 1.0, 0.0;
  always1 << 0.0, 1.0;
  PolicyProvider<double> provider = [&](long t) -> const MatrixXd& {
    return t % 2 == 1 ? always0 : always1;
  };
  SplitRng rng(3);
  const auto path = rollout(mdp, provider, Kernel::True, 6, rng);
  for (std::size_t i = 0; i < path.size(); ++i)
    CHECK(path[i].a == static_cast<Index>(i % 2));
}

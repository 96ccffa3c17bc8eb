#pragma once

#include <functional>
#include <vector>

#include "adamrl/mdp.hpp"
#include "adamrl/rng.hpp"
#include "adamrl/types.hpp"

namespace adamrl {

/// One sampled step: reward is looked up exactly, r = R[s][a].
template <typename Scalar>
struct Transition {
  Index s;
  Index a;
  Scalar r;
  Index s_next;
};

enum class Kernel { True, Restart };

namespace detail {

// Inverse-CDF draw from a probability row. Scans the cumulative sums for the
// first index with cdf >= u, resolving boundary ties toward the lower index;
// zero-probability entries are skipped so they are never returned.
template <typename Derived>
Index sample_row(const Eigen::MatrixBase<Derived>& row, SplitRng& rng) {
  using Scalar = typename Derived::Scalar;
  const Scalar u = static_cast<Scalar>(rng.next_double());
  const Index n = row.size();
  Scalar cdf = Scalar(0);
  Index last_positive = 0;
  for (Index i = 0; i < n; ++i) {
    if (row(i) <= Scalar(0)) continue;
    cdf += row(i);
    last_positive = i;
    if (cdf >= u) return i;
  }
  return last_positive;  // cdf fell short of u by roundoff
}

}  // namespace detail

/// Samples s' ~ P(.|s, a) under the true kernel.
template <typename Scalar>
Index step_true(const TabularMdp<Scalar>& mdp, Index s, Index a, SplitRng& rng) {
  return detail::sample_row(mdp.transition(a).row(s), rng);
}

/// Restarted kernel Phat(.|s, a) = gamma P(.|s, a) + (1 - gamma) zeta(.):
/// with probability gamma samples the true kernel, otherwise the initial
/// distribution.
template <typename Scalar>
Index step_restart(const TabularMdp<Scalar>& mdp, Index s, Index a, SplitRng& rng) {
  if (static_cast<Scalar>(rng.next_double()) < mdp.gamma())
    return step_true(mdp, s, a, rng);
  return detail::sample_row(mdp.initial_dist(), rng);
}

/// Policy source for rollouts; called with the 1-based step index so callers
/// can supply time-varying policies.
template <typename Scalar>
using PolicyProvider = std::function<const Matrix<Scalar>&(long step)>;

/// Seeded trajectory: s_1 ~ zeta, actions from the (possibly time-varying)
/// policy, states advanced by the chosen kernel.
template <typename Scalar>
std::vector<Transition<Scalar>> rollout(const TabularMdp<Scalar>& mdp,
                                        const PolicyProvider<Scalar>& policy_provider,
                                        Kernel kernel, long length, SplitRng& rng) {
  std::vector<Transition<Scalar>> path;
  path.reserve(static_cast<std::size_t>(length));
  Index s = detail::sample_row(mdp.initial_dist(), rng);
  for (long t = 1; t <= length; ++t) {
    const Matrix<Scalar>& policy = policy_provider(t);
    const Index a = detail::sample_row(policy.row(s), rng);
    const Index s_next = kernel == Kernel::True ? step_true(mdp, s, a, rng)
                                                : step_restart(mdp, s, a, rng);
    path.push_back(Transition<Scalar>{s, a, mdp.reward()(s, a), s_next});
    s = s_next;
  }
  return path;
}

/// Convenience overload for a constant policy.
template <typename Scalar>
std::vector<Transition<Scalar>> rollout(const TabularMdp<Scalar>& mdp,
                                        const Matrix<Scalar>& policy, Kernel kernel,
                                        long length, SplitRng& rng) {
  PolicyProvider<Scalar> provider = [&policy](long) -> const Matrix<Scalar>& {
    return policy;
  };
  return rollout(mdp, provider, kernel, length, rng);
}

}  // namespace adamrl

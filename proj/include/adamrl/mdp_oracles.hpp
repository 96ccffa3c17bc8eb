#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "adamrl/errors.hpp"
#include "adamrl/features.hpp"
#include "adamrl/mdp.hpp"
#include "adamrl/rng.hpp"
#include "adamrl/softmax_policy.hpp"
#include "adamrl/types.hpp"

namespace adamrl {

/// Geometric mixing envelope TV(P^t(s0, .), nu) <= sigma * rho^t fitted to a
/// finite chain, plus the recorded per-step total-variation distances.
template <typename Scalar>
struct MixingProfile {
  Scalar sigma = Scalar(0);
  Scalar rho = Scalar(1e-6);
  std::vector<Scalar> tv_series;  // tv_series[t-1] = max_s TV(P^t(s,.), nu)
};

namespace detail {

template <typename Scalar>
Scalar tv_distance(const Vector<Scalar>& p, const Vector<Scalar>& q) {
  return Scalar(0.5) * (p - q).template lpNorm<1>();
}

// One power-iteration pass nu <- nu P from a given start, L1-normalized each
// step. Returns the limit, or nothing on non-convergence.
template <typename Scalar>
bool power_iterate(const Matrix<Scalar>& chain, Vector<Scalar> start,
                   Vector<Scalar>& out, Scalar tol, long max_iters) {
  Vector<Scalar> nu = std::move(start);
  for (long it = 0; it < max_iters; ++it) {
    Vector<Scalar> next = chain.transpose() * nu;
    next /= next.sum();
    const Scalar step = (next - nu).template lpNorm<Eigen::Infinity>();
    nu = std::move(next);
    if (step <= tol) {
      out = std::move(nu);
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Stationary distribution of the policy-induced state chain, nu^T P_pi = nu^T,
/// by power iteration to residual 1e-12 (at most 10^6 sweeps).
///
/// The chain must be irreducible and aperiodic. Detection is by failure:
/// iteration from two distinct strictly positive starts must converge to the
/// same limit, which rules out both periodic chains (no convergence) and
/// reducible chains (start-dependent limits).
template <typename Scalar>
StateDist<Scalar> stationary_distribution(const TabularMdp<Scalar>& mdp,
                                          const Matrix<Scalar>& policy) {
  const Matrix<Scalar> chain = mdp.policy_chain(policy);
  const Index n = mdp.n_states();
  const Scalar tol = Scalar(1e-12);
  const long max_iters = 1000000;

  Vector<Scalar> uniform = Vector<Scalar>::Constant(n, Scalar(1) / Scalar(n));
  Vector<Scalar> skewed(n);
  for (Index s = 0; s < n; ++s) skewed(s) = Scalar(1 + (s == 0 ? n : 0));
  skewed /= skewed.sum();

  Vector<Scalar> nu_a, nu_b;
  if (!detail::power_iterate(chain, uniform, nu_a, tol, max_iters) ||
      !detail::power_iterate(chain, skewed, nu_b, tol, max_iters))
    throw NonErgodicChain("power iteration did not reach 1e-12 within 10^6 sweeps");
  if (detail::tv_distance(nu_a, nu_b) > Scalar(1e-8))
    throw NonErgodicChain("stationary distribution depends on the start (reducible chain)");
  return StateDist<Scalar>{nu_a, /*joint=*/false};
}

/// Restart kernel on the state chain under a fixed policy:
/// Phat_pi = gamma P_pi + (1 - gamma) 1 zeta^T. Its stationary distribution
/// is the normalized discounted visitation distribution.
template <typename Scalar>
Matrix<Scalar> restart_chain(const TabularMdp<Scalar>& mdp, const Matrix<Scalar>& policy) {
  const Index n = mdp.n_states();
  return mdp.gamma() * mdp.policy_chain(policy) +
         (Scalar(1) - mdp.gamma()) * Vector<Scalar>::Ones(n) *
             mdp.initial_dist().transpose();
}

template <typename Scalar>
struct DiscountedVisitation {
  Vector<Scalar> state_mass;   // m(s) = sum_{t>=1} gamma^{t-1} P(s_t = s); sums to 1/(1-gamma)
  Matrix<Scalar> sa_mass;      // m(s) pi(a|s), unnormalized
  StateDist<Scalar> normalized;  // joint over (s, a): (1-gamma) m(s) pi(a|s)
};

/// Discounted state(-action) visitation. Solves m^T = zeta^T + gamma m^T P_pi,
/// i.e. (I - gamma P_pi^T) m = zeta, and returns both the unnormalized mass
/// and the normalized joint distribution.
template <typename Scalar>
DiscountedVisitation<Scalar> discounted_visitation(const TabularMdp<Scalar>& mdp,
                                                   const Matrix<Scalar>& policy) {
  const Index n = mdp.n_states();
  const Matrix<Scalar> chain = mdp.policy_chain(policy);
  const Matrix<Scalar> system =
      Matrix<Scalar>::Identity(n, n) - mdp.gamma() * chain.transpose();
  Vector<Scalar> mass = system.partialPivLu().solve(mdp.initial_dist());
  // Cannot be singular for gamma < 1; guarded by a residual check anyway.
  if (!mass.allFinite() ||
      (system * mass - mdp.initial_dist()).norm() > Scalar(1e-9) * (Scalar(1) + mass.norm()))
    throw SingularSystem("discounted_visitation: occupancy solve failed");

  DiscountedVisitation<Scalar> out;
  out.state_mass = mass;
  out.sa_mass = mass.asDiagonal() * policy;
  Vector<Scalar> joint(n * mdp.n_actions());
  for (Index s = 0; s < n; ++s)
    joint.segment(s * mdp.n_actions(), mdp.n_actions()) =
        (Scalar(1) - mdp.gamma()) * out.sa_mass.row(s).transpose();
  out.normalized = StateDist<Scalar>{joint, /*joint=*/true};
  return out;
}

/// One application of the Bellman operator: (T_pi V)(s) = r_pi(s) + gamma (P_pi V)(s).
template <typename Scalar>
Vector<Scalar> apply_bellman(const TabularMdp<Scalar>& mdp, const Matrix<Scalar>& policy,
                             const Vector<Scalar>& v) {
  return mdp.policy_reward(policy) + mdp.gamma() * mdp.policy_chain(policy) * v;
}

template <typename Scalar>
struct ValueTables {
  Vector<Scalar> v;        // V(s) = E[sum_{t>=1} gamma^{t-1} R_t | s_1 = s]
  Matrix<Scalar> q;        // Q(s, a) = R(s, a) + gamma sum_{s'} P(s'|s,a) V(s')
};

/// Exact value tables under the gamma^{t-1} discounting convention:
/// V = (I - gamma P_pi)^{-1} r_pi; V is the fixed point of apply_bellman.
template <typename Scalar>
ValueTables<Scalar> exact_v_q(const TabularMdp<Scalar>& mdp, const Matrix<Scalar>& policy) {
  const Index n = mdp.n_states();
  const Matrix<Scalar> system =
      Matrix<Scalar>::Identity(n, n) - mdp.gamma() * mdp.policy_chain(policy);
  const Vector<Scalar> r_pi = mdp.policy_reward(policy);
  Vector<Scalar> v = system.partialPivLu().solve(r_pi);
  if (!v.allFinite() || (system * v - r_pi).norm() > Scalar(1e-9) * (Scalar(1) + v.norm()))
    throw SingularSystem("exact_v_q: value solve failed");

  Matrix<Scalar> q(n, mdp.n_actions());
  for (Index a = 0; a < mdp.n_actions(); ++a)
    q.col(a) = mdp.reward().col(a) + mdp.gamma() * mdp.transition(a) * v;
  return ValueTables<Scalar>{std::move(v), std::move(q)};
}

/// Expected discounted return from the initial distribution, J = zeta^T V.
template <typename Scalar>
Scalar exact_j(const TabularMdp<Scalar>& mdp, const Matrix<Scalar>& policy) {
  return mdp.initial_dist().dot(exact_v_q(mdp, policy).v);
}

/// Exact policy gradient for a softmax policy:
/// grad J = sum_s m(s) sum_a pi(a|s) Q(s, a) score(s, a), with m the
/// unnormalized discounted occupancy. Matches central finite differences of
/// exact_j to relative error 1e-5 (enforced by the verification suite).
template <typename Scalar>
Vector<Scalar> exact_policy_gradient(const TabularMdp<Scalar>& mdp,
                                     const SoftmaxPolicy<Scalar>& policy) {
  const Matrix<Scalar>& table = policy.table();
  const auto values = exact_v_q(mdp, table);
  const Vector<Scalar> mass = discounted_visitation(mdp, table).state_mass;

  Vector<Scalar> grad = Vector<Scalar>::Zero(policy.dim());
  for (Index s = 0; s < mdp.n_states(); ++s)
    for (Index a = 0; a < mdp.n_actions(); ++a)
      grad += mass(s) * table(s, a) * values.q(s, a) * policy.score(s, a);
  return grad;
}

/// Steady-state feature covariance Sigma = sum_s nu(s) phi(s) phi(s)^T and its
/// minimum eigenvalue omega, computed by inverse power iteration with shift 0
/// to tolerance 1e-10. Throws RankDeficientFeatures when omega <= 1e-10.
template <typename Scalar>
std::pair<Matrix<Scalar>, Scalar> feature_covariance(const TabularMdp<Scalar>& mdp,
                                                     const Matrix<Scalar>& policy,
                                                     const LinearFeatures<Scalar>& features) {
  const Vector<Scalar> nu = stationary_distribution(mdp, policy).probs;
  const Matrix<Scalar>& phi = features.matrix();
  Matrix<Scalar> sigma = phi.transpose() * nu.asDiagonal() * phi;
  sigma = ((sigma + sigma.transpose()) / Scalar(2)).eval();  // symmetrize roundoff

  const Index d = sigma.rows();
  auto ldlt = sigma.ldlt();
  // Generic start with a component along every eigen direction; a symmetric
  // start can be exactly orthogonal to the null space of a deficient Sigma.
  SplitRng start_rng(0x5161A0);
  Vector<Scalar> x(d);
  for (Index i = 0; i < d; ++i)
    x(i) = Scalar(1) + Scalar(start_rng.next_double());
  x.normalize();
  Scalar omega = Scalar(0);
  bool converged = false;
  for (int it = 0; it < 10000; ++it) {
    Vector<Scalar> y = ldlt.solve(x);
    // A zero pivot makes LDLT project onto the range of Sigma; the solve
    // residual then stays macroscopic and exposes the exact singularity.
    const bool singular =
        !y.allFinite() || y.norm() == Scalar(0) ||
        (sigma * y - x).norm() >
            Scalar(1e-6) * (sigma.template lpNorm<Eigen::Infinity>() * y.norm() + x.norm());
    if (singular) {
      omega = Scalar(0);
      converged = true;
      break;
    }
    y.normalize();
    const Scalar rayleigh = y.dot(sigma * y);
    if (it > 0 && std::abs(rayleigh - omega) <= Scalar(1e-10) * std::max(Scalar(1), rayleigh)) {
      omega = rayleigh;
      converged = true;
      break;
    }
    omega = rayleigh;
    x = std::move(y);
  }
  if (!converged || omega <= Scalar(1e-10))
    throw RankDeficientFeatures("feature_covariance: minimum eigenvalue <= 1e-10 "
                                "(columns of the feature matrix are dependent)");
  return {sigma, omega};
}

/// TD fixed point theta* solving A theta = b with A = Phi^T D (Phi - gamma P_pi Phi),
/// b = Phi^T D r_pi, D = diag(nu). The residual of the mean pseudo-gradient at
/// theta* is checked against 1e-9 through the same exact quantities.
template <typename Scalar>
Vector<Scalar> td_fixed_point(const TabularMdp<Scalar>& mdp, const Matrix<Scalar>& policy,
                              const LinearFeatures<Scalar>& features) {
  const Vector<Scalar> nu = stationary_distribution(mdp, policy).probs;
  const Matrix<Scalar>& phi = features.matrix();
  const Matrix<Scalar> chain = mdp.policy_chain(policy);
  const Matrix<Scalar> a_mat =
      phi.transpose() * nu.asDiagonal() * (phi - mdp.gamma() * chain * phi);
  const Vector<Scalar> b = phi.transpose() * nu.asDiagonal() * mdp.policy_reward(policy);

  Vector<Scalar> theta = a_mat.partialPivLu().solve(b);
  if (!theta.allFinite() || (a_mat * theta - b).norm() > Scalar(1e-9) * (Scalar(1) + theta.norm()))
    throw SingularSystem("td_fixed_point: A theta = b is numerically singular");
  return theta;
}

/// Fits a geometric mixing envelope to the policy-induced chain.
/// tv_series[t-1] = max_{s0} TV(P^t(s0, .), nu) for t = 1..horizon; rho is the
/// geometric decay slope of the tail (log-linear least squares over the last
/// half, clamped to [1e-6, 1-1e-6]) and sigma the smallest constant with
/// sigma rho^t >= tv_series[t] at every recorded t.
template <typename Scalar>
MixingProfile<Scalar> mixing_profile(const TabularMdp<Scalar>& mdp,
                                     const Matrix<Scalar>& policy, int horizon) {
  const Vector<Scalar> nu = stationary_distribution(mdp, policy).probs;
  const Matrix<Scalar> chain = mdp.policy_chain(policy);

  MixingProfile<Scalar> profile;
  profile.tv_series.reserve(static_cast<std::size_t>(horizon));
  Matrix<Scalar> power = Matrix<Scalar>::Identity(mdp.n_states(), mdp.n_states());
  for (int t = 1; t <= horizon; ++t) {
    power = (power * chain).eval();
    Scalar worst = Scalar(0);
    for (Index s = 0; s < mdp.n_states(); ++s)
      worst = std::max(worst,
                       detail::tv_distance<Scalar>(power.row(s).transpose(), nu));
    // Below ~1e-13 the distances are double roundoff, not mixing signal; a
    // flat noise floor would drag the fitted rho toward 1.
    if (worst < Scalar(1e-13) && t > 1) break;
    profile.tv_series.push_back(worst);
    if (worst < Scalar(1e-13)) break;
  }

  // Log-linear regression on the tail half, ignoring entries at numerical zero.
  const std::size_t lo = profile.tv_series.size() / 2;
  Scalar sx = 0, sy = 0, sxx = 0, sxy = 0;
  long k = 0;
  for (std::size_t i = lo; i < profile.tv_series.size(); ++i) {
    const Scalar tv = profile.tv_series[i];
    if (tv <= Scalar(1e-300)) continue;
    const Scalar x = static_cast<Scalar>(i + 1);
    const Scalar y = std::log(tv);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++k;
  }
  const Scalar rho_min = Scalar(1e-6);
  const Scalar rho_max = Scalar(1) - Scalar(1e-6);
  if (k >= 2 && (Scalar(k) * sxx - sx * sx) > Scalar(0)) {
    const Scalar slope = (Scalar(k) * sxy - sx * sy) / (Scalar(k) * sxx - sx * sx);
    profile.rho = std::clamp(std::exp(slope), rho_min, rho_max);
  } else {
    profile.rho = rho_min;  // degenerate series (e.g. one-step mixing)
  }

  profile.sigma = Scalar(0);
  Scalar rho_pow = Scalar(1);
  for (std::size_t i = 0; i < profile.tv_series.size(); ++i) {
    rho_pow *= profile.rho;
    profile.sigma = std::max(profile.sigma, profile.tv_series[i] / rho_pow);
  }
  return profile;
}

/// tau* = min{tau >= 1 : sigma rho^tau <= alpha}, evaluated from the closed
/// form ceil((log alpha - log sigma) / log rho) with an exactness correction
/// against floating-point boundary cases.
template <typename Scalar>
long tau_star(const MixingProfile<Scalar>& profile, Scalar alpha) {
  if (!(alpha > Scalar(0))) throw ConfigError("tau_star: alpha must be positive");
  if (profile.sigma <= alpha) return 1;
  const Scalar raw =
      (std::log(alpha) - std::log(profile.sigma)) / std::log(profile.rho);
  long tau = std::max<long>(1, static_cast<long>(std::ceil(raw)));
  auto bound = [&](long t) { return profile.sigma * std::pow(profile.rho, Scalar(t)); };
  while (tau > 1 && bound(tau - 1) <= alpha) --tau;
  while (bound(tau) > alpha) ++tau;
  return tau;
}

}  // namespace adamrl

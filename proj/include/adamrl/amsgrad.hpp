#pragma once

#include <cmath>
#include <string>

#include "adamrl/errors.hpp"
#include "adamrl/types.hpp"

namespace adamrl {

enum class StepSchedule { Constant, Diminishing };

/// alpha_t for the two stepsize regimes: constant alpha, or alpha / sqrt(t).
template <typename Scalar>
Scalar stepsize(StepSchedule schedule, Scalar alpha, long t) {
  return schedule == StepSchedule::Constant
             ? alpha
             : alpha / std::sqrt(static_cast<Scalar>(t));
}

/// Origin-centered parameter ball of the given radius (diameter D_inf = 2 radius).
template <typename Scalar>
struct DomainBall {
  Scalar radius;
};

/// AMSGrad optimizer state.
///
/// Moments follow the generic form
///   m_t    = (1 - w_t) m_{t-1} + w_t g_t
///   v_t    = (1 - beta2) vhat_{t-1} + beta2 g_t^2
///   vhat_t = max(vhat_{t-1}, v_t)              (element-wise, non-decreasing)
///   theta  = theta - alpha_t m_t / sqrt(vhat_t)
/// with the gradient weight w_t = beta1 when lambda = 1 (constant blend, the
/// policy-gradient regime) and w_t = 1 - beta1 lambda^t when lambda < 1 (the
/// TD regime, where the retained momentum fraction beta1 lambda^t decays
/// toward a plain preconditioned step). No bias-correction terms.
template <typename Scalar>
class AmsGradState {
 public:
  AmsGradState(Index dim, Scalar alpha, Scalar beta1, Scalar beta2, Scalar lambda,
               StepSchedule schedule)
      : m_(Vector<Scalar>::Zero(dim)),
        v_(Vector<Scalar>::Zero(dim)),
        v_hat_(Vector<Scalar>::Zero(dim)),
        alpha_(alpha),
        beta1_(beta1),
        beta2_(beta2),
        lambda_(lambda),
        schedule_(schedule) {
    if (!(beta1 >= Scalar(0) && beta1 <= Scalar(1)))
      throw ConfigError("beta1: must lie in [0, 1]");
    if (!(beta2 > Scalar(0) && beta2 <= Scalar(1)))
      throw ConfigError("beta2: must lie in (0, 1]");
    if (!(lambda > Scalar(0) && lambda <= Scalar(1)))
      throw ConfigError("lambda: must lie in (0, 1]");
    if (alpha < Scalar(0)) throw ConfigError("alpha: must be non-negative");
  }

  const Vector<Scalar>& m() const { return m_; }
  const Vector<Scalar>& v() const { return v_; }
  const Vector<Scalar>& v_hat() const { return v_hat_; }
  long t() const { return t_; }
  Scalar alpha() const { return alpha_; }
  StepSchedule schedule() const { return schedule_; }

  /// Weight placed on the new gradient at step t.
  Scalar grad_weight(long t) const {
    return lambda_ == Scalar(1)
               ? beta1_
               : Scalar(1) - beta1_ * std::pow(lambda_, static_cast<Scalar>(t));
  }

  /// One AMSGrad step; returns the updated parameters. Coordinates that have
  /// never seen a nonzero gradient (vhat = 0, m = 0) take a zero step;
  /// vhat = 0 with m != 0 cannot arise for beta2 > 0 and raises
  /// ZeroSecondMoment if it somehow does.
  Vector<Scalar> update(const Vector<Scalar>& theta, const Vector<Scalar>& g) {
    ++t_;
    const Scalar w = grad_weight(t_);
    m_ = (Scalar(1) - w) * m_ + w * g;
    v_ = (Scalar(1) - beta2_) * v_hat_ + beta2_ * g.array().square().matrix();
    v_hat_ = v_hat_.cwiseMax(v_);
    if (!m_.allFinite() || !v_hat_.allFinite())
      throw ConfigError("AmsGradState: non-finite moment");

    const Scalar alpha_t = stepsize(schedule_, alpha_, t_);
    Vector<Scalar> next = theta;
    for (Index i = 0; i < theta.size(); ++i) {
      if (v_hat_(i) > Scalar(0)) {
        next(i) -= alpha_t * m_(i) / std::sqrt(v_hat_(i));
      } else if (m_(i) != Scalar(0)) {
        throw ZeroSecondMoment("update: vhat is 0 at coordinate " + std::to_string(i) +
                               " with a nonzero first moment");
      }
    }
    return next;
  }

 private:
  Vector<Scalar> m_;
  Vector<Scalar> v_;
  Vector<Scalar> v_hat_;
  long t_ = 0;
  Scalar alpha_;
  Scalar beta1_;
  Scalar beta2_;
  Scalar lambda_;
  StepSchedule schedule_;
};

/// Weighted projection onto the domain ball:
/// argmin over ||theta|| <= radius of sum_i sqrt(vhat_i) (theta'_i - theta_i)^2.
///
/// Points inside the ball are returned unchanged. Otherwise the KKT form
/// theta_i = w_i theta'_i / (w_i + lam) with w_i = sqrt(vhat_i) is solved by
/// bisection on the monotone constraint ||theta(lam)|| = radius to 1e-12.
template <typename Scalar>
Vector<Scalar> project(const Vector<Scalar>& theta_prime, const Vector<Scalar>& v_hat,
                       const DomainBall<Scalar>& ball) {
  if (theta_prime.norm() <= ball.radius) return theta_prime;
  if ((v_hat.array() <= Scalar(0)).any())
    throw ZeroSecondMoment("project: weighted projection requires vhat > 0");

  const Vector<Scalar> w = v_hat.array().sqrt();
  auto candidate = [&](Scalar lam) -> Vector<Scalar> {
    return (w.array() * theta_prime.array() / (w.array() + lam)).matrix();
  };

  Scalar lo = Scalar(0);
  Scalar hi = w.maxCoeff() * (theta_prime.norm() / ball.radius - Scalar(1)) + Scalar(1);
  for (int attempt = 0; attempt < 200 && candidate(hi).norm() > ball.radius; ++attempt)
    hi *= Scalar(2);

  Vector<Scalar> theta = candidate(hi);
  for (int it = 0; it < 200; ++it) {
    const Scalar mid = (lo + hi) / Scalar(2);
    const Vector<Scalar> trial = candidate(mid);
    const Scalar norm = trial.norm();
    if (std::abs(norm - ball.radius) <= Scalar(1e-12)) return trial;
    if (norm > ball.radius)
      lo = mid;
    else {
      hi = mid;
      theta = trial;
    }
  }
  return theta;  // feasible endpoint of the final bracket
}

}  // namespace adamrl

#pragma once

#include <cmath>

#include "adamrl/types.hpp"

namespace adamrl {

/// Tabular softmax policy pi_theta(a|s) = exp(theta_{s,a}) / sum_a' exp(theta_{s,a'})
/// with log-sum-exp stabilization. theta is flattened as (s, a) -> s * n_actions + a;
/// the per-state action distributions are cached and recomputed on set_theta.
template <typename Scalar>
class SoftmaxPolicy {
 public:
  SoftmaxPolicy(Index n_states, Index n_actions)
      : SoftmaxPolicy(n_states, n_actions,
                      Vector<Scalar>::Zero(n_states * n_actions)) {}

  SoftmaxPolicy(Index n_states, Index n_actions, Vector<Scalar> theta)
      : n_states_(n_states), n_actions_(n_actions), table_(n_states, n_actions) {
    set_theta(std::move(theta));
  }

  Index n_states() const { return n_states_; }
  Index n_actions() const { return n_actions_; }
  Index dim() const { return n_states_ * n_actions_; }
  const Vector<Scalar>& theta() const { return theta_; }

  /// Cached per-state action distributions; rows sum to 1 within 1e-12.
  const Matrix<Scalar>& table() const { return table_; }

  Scalar prob(Index s, Index a) const { return table_(s, a); }

  void set_theta(Vector<Scalar> theta) {
    theta_ = std::move(theta);
    for (Index s = 0; s < n_states_; ++s) {
      auto logits = theta_.segment(s * n_actions_, n_actions_);
      const Scalar shift = logits.maxCoeff();
      Vector<Scalar> w = (logits.array() - shift).exp();
      table_.row(s) = w.transpose() / w.sum();
    }
  }

  /// Score function grad_theta log pi_theta(a|s): within the block for
  /// state s, entry a' is 1{a'=a} - pi(a'|s); zero elsewhere. Its norm is
  /// bounded by sqrt(2) for every (s, a, theta).
  Vector<Scalar> score(Index s, Index a) const {
    Vector<Scalar> g = Vector<Scalar>::Zero(dim());
    g.segment(s * n_actions_, n_actions_) = -table_.row(s).transpose();
    g(s * n_actions_ + a) += Scalar(1);
    return g;
  }

 private:
  Index n_states_;
  Index n_actions_;
  Vector<Scalar> theta_;
  Matrix<Scalar> table_;
};

}  // namespace adamrl

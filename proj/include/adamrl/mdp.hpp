#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adamrl/errors.hpp"
#include "adamrl/types.hpp"

namespace adamrl {

/// Finite discounted MDP: transition tensor P[s][a][s'], reward table
/// R[s][a] in [0, r_max], discount gamma in (0,1) and initial state
/// distribution zeta. Immutable after construction; every oracle in this
/// library treats it as ground truth.
template <typename Scalar>
class TabularMdp {
 public:
  /// \param transition one S x S matrix per action; row (s) of matrix (a)
  ///        is the distribution of the next state given (s, a)
  TabularMdp(std::vector<Matrix<Scalar>> transition, Matrix<Scalar> reward,
             Scalar gamma, Vector<Scalar> initial_dist, Scalar r_max)
      : transition_(std::move(transition)),
        reward_(std::move(reward)),
        gamma_(gamma),
        initial_dist_(std::move(initial_dist)),
        r_max_(r_max) {
    validate();
  }

  Index n_states() const { return initial_dist_.size(); }
  Index n_actions() const { return reward_.cols(); }
  Scalar gamma() const { return gamma_; }
  Scalar r_max() const { return r_max_; }
  const Vector<Scalar>& initial_dist() const { return initial_dist_; }
  const Matrix<Scalar>& reward() const { return reward_; }

  /// Next-state distribution matrix for a fixed action.
  const Matrix<Scalar>& transition(Index a) const { return transition_[static_cast<std::size_t>(a)]; }

  Scalar transition(Index s, Index a, Index s_next) const {
    return transition_[static_cast<std::size_t>(a)](s, s_next);
  }

  /// State chain P_pi(s, s') = sum_a pi(a|s) P(s'|s, a) under a stochastic
  /// policy table (rows are per-state action distributions).
  Matrix<Scalar> policy_chain(const Matrix<Scalar>& policy) const {
    const Index n = n_states();
    Matrix<Scalar> chain = Matrix<Scalar>::Zero(n, n);
    for (Index a = 0; a < n_actions(); ++a)
      chain += policy.col(a).asDiagonal() * transition(a);
    return chain;
  }

  /// Expected one-step reward per state, r_pi(s) = sum_a pi(a|s) R(s, a).
  Vector<Scalar> policy_reward(const Matrix<Scalar>& policy) const {
    return (policy.array() * reward_.array()).rowwise().sum();
  }

 private:
  void validate() const {
    const Index n = n_states();
    const Index m = n_actions();
    if (n < 1) throw ConfigError("n_states: must be positive");
    if (m < 1) throw ConfigError("n_actions: must be positive");
    if (!(gamma_ > Scalar(0) && gamma_ < Scalar(1)))
      throw ConfigError("gamma: must lie in (0, 1)");
    if (static_cast<Index>(transition_.size()) != m || reward_.rows() != n ||
        reward_.cols() != m)
      throw ConfigError("transition/reward: dimensions disagree with n_states/n_actions");
    for (Index a = 0; a < m; ++a) {
      const auto& P = transition(a);
      if (P.rows() != n || P.cols() != n)
        throw ConfigError("transition: matrix for action " + std::to_string(a) +
                          " is not n_states x n_states");
      for (Index s = 0; s < n; ++s) {
        if ((P.row(s).array() < Scalar(0)).any())
          throw ConfigError("transition: negative probability in row (s=" +
                            std::to_string(s) + ", a=" + std::to_string(a) + ")");
        if (std::abs(P.row(s).sum() - Scalar(1)) > Scalar(1e-12))
          throw ConfigError("transition: row (s=" + std::to_string(s) + ", a=" +
                            std::to_string(a) + ") does not sum to 1 within 1e-12");
      }
    }
    if ((initial_dist_.array() < Scalar(0)).any())
      throw ConfigError("initial_dist: negative entry");
    if (std::abs(initial_dist_.sum() - Scalar(1)) > Scalar(1e-12))
      throw ConfigError("initial_dist: does not sum to 1 within 1e-12");
    if ((reward_.array() < Scalar(0)).any() || (reward_.array() > r_max_).any())
      throw ConfigError("reward: entries must lie in [0, r_max]");
  }

  std::vector<Matrix<Scalar>> transition_;
  Matrix<Scalar> reward_;
  Scalar gamma_;
  Vector<Scalar> initial_dist_;
  Scalar r_max_;
};

/// Probability vector over states, or over flattened (s, a) pairs when
/// joint. Flattening convention: pair (s, a) sits at index s * n_actions + a.
template <typename Scalar>
struct StateDist {
  Vector<Scalar> probs;
  bool joint = false;

  void validate(Scalar tol = Scalar(1e-10)) const {
    if ((probs.array() < Scalar(0)).any())
      throw ConfigError("StateDist: negative entry");
    if (std::abs(probs.sum() - Scalar(1)) > tol)
      throw ConfigError("StateDist: does not sum to 1");
  }
};

namespace detail {

inline std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = val;
  }
  return kv;
}

template <typename Scalar>
std::vector<Scalar> parse_numbers(const std::string& text, const std::string& field) {
  std::istringstream ss(text);
  std::vector<Scalar> out;
  Scalar x;
  while (ss >> x) out.push_back(x);
  if (!ss.eof()) throw ConfigError(field + ": malformed numeric list");
  return out;
}

}  // namespace detail

/// Loads an MDP fixture from a flat key/value text file. Recognized keys:
/// n_states, n_actions, gamma, r_max, transition (row-major over
/// (s, a, s')), reward (row-major over (s, a)), initial_dist. Probabilities
/// are validated on load.
template <typename Scalar = double>
TabularMdp<Scalar> load_mdp(const std::string& path) {
  const auto kv = detail::parse_kv_file(path);
  auto require = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(key + ": missing from " + path);
    return it->second;
  };
  const Index n = static_cast<Index>(std::stoll(require("n_states")));
  const Index m = static_cast<Index>(std::stoll(require("n_actions")));
  const Scalar gamma = static_cast<Scalar>(std::stod(require("gamma")));
  const Scalar r_max = static_cast<Scalar>(std::stod(require("r_max")));
  if (n < 1 || m < 1) throw ConfigError("n_states/n_actions: must be positive");

  const auto p = detail::parse_numbers<Scalar>(require("transition"), "transition");
  if (static_cast<Index>(p.size()) != n * m * n)
    throw ConfigError("transition: expected n_states*n_actions*n_states entries");
  std::vector<Matrix<Scalar>> transition(static_cast<std::size_t>(m),
                                         Matrix<Scalar>::Zero(n, n));
  for (Index s = 0; s < n; ++s)
    for (Index a = 0; a < m; ++a)
      for (Index t = 0; t < n; ++t)
        transition[static_cast<std::size_t>(a)](s, t) = p[static_cast<std::size_t>((s * m + a) * n + t)];

  const auto r = detail::parse_numbers<Scalar>(require("reward"), "reward");
  if (static_cast<Index>(r.size()) != n * m)
    throw ConfigError("reward: expected n_states*n_actions entries");
  Matrix<Scalar> reward(n, m);
  for (Index s = 0; s < n; ++s)
    for (Index a = 0; a < m; ++a) reward(s, a) = r[static_cast<std::size_t>(s * m + a)];

  const auto z = detail::parse_numbers<Scalar>(require("initial_dist"), "initial_dist");
  if (static_cast<Index>(z.size()) != n)
    throw ConfigError("initial_dist: expected n_states entries");
  Vector<Scalar> zeta = Eigen::Map<const Vector<Scalar>>(z.data(), n);

  return TabularMdp<Scalar>(std::move(transition), std::move(reward), gamma,
                            std::move(zeta), r_max);
}

/// Uniform policy table (every action equally likely in every state).
template <typename Scalar>
Matrix<Scalar> uniform_policy(const TabularMdp<Scalar>& mdp) {
  return Matrix<Scalar>::Constant(mdp.n_states(), mdp.n_actions(),
                                  Scalar(1) / static_cast<Scalar>(mdp.n_actions()));
}

}  // namespace adamrl

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "adamrl/errors.hpp"
#include "adamrl/types.hpp"

namespace adamrl {

/// Linear value-function features: one row phi(s)^T per state, every row with
/// norm at most 1 and linearly independent columns. Column independence is
/// checked where the covariance is available (feature_covariance); the row
/// bound is checked here.
template <typename Scalar>
class LinearFeatures {
 public:
  explicit LinearFeatures(Matrix<Scalar> phi) : phi_(std::move(phi)) {
    for (Index s = 0; s < phi_.rows(); ++s)
      if (phi_.row(s).norm() > Scalar(1) + Scalar(1e-12))
        throw ConfigError("features: row " + std::to_string(s) + " has norm > 1");
  }

  Index n_states() const { return phi_.rows(); }
  Index dim() const { return phi_.cols(); }
  const Matrix<Scalar>& matrix() const { return phi_; }
  auto row(Index s) const { return phi_.row(s); }

  /// Indicator features phi(s) = e_s (d = n_states).
  static LinearFeatures identity(Index n_states) {
    return LinearFeatures(Matrix<Scalar>::Identity(n_states, n_states));
  }

 private:
  Matrix<Scalar> phi_;
};

/// Loads a feature matrix from a whitespace text file: first line
/// "n_states d", then one row per state.
template <typename Scalar = double>
LinearFeatures<Scalar> load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open features file: " + path);
  Index n = 0, d = 0;
  in >> n >> d;
  if (!in || n < 1 || d < 1)
    throw ConfigError("features: malformed header in " + path);
  Matrix<Scalar> phi(n, d);
  for (Index s = 0; s < n; ++s)
    for (Index j = 0; j < d; ++j)
      if (!(in >> phi(s, j)))
        throw ConfigError("features: expected " + std::to_string(n * d) +
                          " entries in " + path);
  return LinearFeatures<Scalar>(std::move(phi));
}

}  // namespace adamrl

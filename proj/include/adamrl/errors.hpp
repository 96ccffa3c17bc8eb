#pragma once

#include <stdexcept>
#include <string>

namespace adamrl {

/// Power iteration failed to converge, or converged to start-dependent
/// limits (reducible or periodic policy-induced chain).
struct NonErgodicChain : std::runtime_error {
  explicit NonErgodicChain(const std::string& what) : std::runtime_error(what) {}
};

/// A linear solve produced an unusable result.
struct SingularSystem : std::runtime_error {
  explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

/// Feature columns are numerically dependent (minimum covariance eigenvalue
/// at or below 1e-10).
struct RankDeficientFeatures : std::runtime_error {
  explicit RankDeficientFeatures(const std::string& what) : std::runtime_error(what) {}
};

/// A second-moment entry was zero where a division or weighted projection
/// required it to be positive.
struct ZeroSecondMoment : std::runtime_error {
  explicit ZeroSecondMoment(const std::string& what) : std::runtime_error(what) {}
};

/// A rate fit was requested on a series with non-positive errors.
struct DegenerateSeries : std::runtime_error {
  explicit DegenerateSeries(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration value; message names the offending field.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace adamrl

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adamrl/verify.hpp"

using namespace adamrl;

TEST_CASE("fast verification passes on a pristine build") {
  verify::Options options;
  options.level = verify::Level::Fast;
  options.fixture_dir = ADAMRL_FIXTURE_DIR;
  const auto results = verify::run_checks(options);
  REQUIRE(results.size() >= 10);
  for (const auto& result : results) {
    INFO(result.name, ": ", result.details);
    CHECK(result.passed);
  }
}

TEST_CASE("an injected moment-state corruption is caught by name") {
  verify::Options options;
  options.level = verify::Level::Fast;
  options.fixture_dir = ADAMRL_FIXTURE_DIR;
  options.inject = {"amsgrad.vhat_monotone"};
  const auto results = verify::run_checks(options);
  bool found = false;
  for (const auto& result : results) {
    if (result.name == "amsgrad.vhat_monotone") {
      found = true;
      CHECK_FALSE(result.passed);
      CHECK(result.details.find("vhat decreased") != std::string::npos);
    } else {
      CHECK(result.passed);
    }
  }
  CHECK(found);
}

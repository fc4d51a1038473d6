#include <gtest/gtest.h>

#include "support/gradient_cases.hpp"

namespace spibb::testing {
namespace {

TEST(Gradients, EveryBackpropPathMatchesFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& check : all_gradient_checks(seed)) {
      EXPECT_LE(check.result.relative_error, 1e-4) << check.path << " seed " << seed;
      EXPECT_GT(check.result.n_parameters, 0u);
    }
  }
}

}  // namespace
}  // namespace spibb::testing

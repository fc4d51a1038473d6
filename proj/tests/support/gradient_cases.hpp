#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "support/finite_diff.hpp"

namespace spibb::testing {

struct NamedGradientCheck {
  std::string path;
  GradientCheck result;
};

/// Every trained network path, each on a small random double-precision net:
/// behavior softmax cross-entropy, Q regression with plain, pessimistic and
/// CQL losses, and an ensemble member's squared-error loss.
std::vector<NamedGradientCheck> all_gradient_checks(std::uint64_t seed);

}  // namespace spibb::testing

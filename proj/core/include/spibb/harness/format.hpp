#pragma once

#include <string>

namespace spibb::harness {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);
/// Fixed six-decimal text used in report tables.
std::string format_fixed(double value, int digits = 6);

}  // namespace spibb::harness

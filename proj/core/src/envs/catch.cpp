#include "spibb/envs/catch.hpp"

#include <algorithm>

namespace spibb::envs {

Catch::Catch() : spec_(builtin_spec(EnvName::kCatch)) {}

std::unique_ptr<Environment> Catch::clone() const { return std::make_unique<Catch>(*this); }

Observation Catch::do_reset() {
  std::uniform_int_distribution<int> column(0, kColumns - 1);
  ball_row_ = 0;
  ball_col_ = column(rng_);
  paddle_col_ = kColumns / 2;
  return observe();
}

std::pair<double, bool> Catch::do_step(int action) {
  paddle_col_ = std::clamp(paddle_col_ + (action - 1), 0, kColumns - 1);
  if (ball_row_ == kRows - 1) {
    return {ball_col_ == paddle_col_ ? 1.0 : -1.0, true};
  }
  ++ball_row_;
  return {0.0, false};
}

Observation Catch::observe() const {
  Observation obs(kRows * kColumns, 0.0f);
  obs[ball_row_ * kColumns + ball_col_] = 1.0f;
  obs[(kRows - 1) * kColumns + paddle_col_] = 1.0f;
  return obs;
}

}  // namespace spibb::envs

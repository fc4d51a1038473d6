#include "spibb/envs/cartpole.hpp"

#include <cmath>

namespace spibb::envs {

Cartpole::Cartpole() : spec_(builtin_spec(EnvName::kCartpole)) {}

std::unique_ptr<Environment> Cartpole::clone() const {
  return std::make_unique<Cartpole>(*this);
}

Observation Cartpole::do_reset() {
  std::uniform_real_distribution<double> noise(-kInitNoise, kInitNoise);
  state_.x = noise(rng_);
  state_.x_dot = noise(rng_);
  state_.theta = noise(rng_);
  state_.theta_dot = noise(rng_);
  return observe();
}

std::pair<double, bool> Cartpole::do_step(int action) {
  const double force = (action - 1) * kForce;
  const double total_mass = kCartMass + kPoleMass;
  const double pole_moment = kPoleMass * kPoleHalfLength;
  const double cos_t = std::cos(state_.theta);
  const double sin_t = std::sin(state_.theta);

  const double temp =
      (force + pole_moment * state_.theta_dot * state_.theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kPoleHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_moment * theta_acc * cos_t / total_mass;

  state_.x += kDt * state_.x_dot;
  state_.x_dot += kDt * x_acc;
  state_.theta += kDt * state_.theta_dot;
  state_.theta_dot += kDt * theta_acc;

  const bool failed = std::abs(state_.theta) > kThetaLimit ||
                      std::abs(state_.x) > kPositionLimit;
  return {failed ? 0.0 : 1.0, failed};
}

Observation Cartpole::observe() const {
  return {static_cast<float>(state_.x), static_cast<float>(state_.x_dot),
          static_cast<float>(std::sin(state_.theta)),
          static_cast<float>(std::cos(state_.theta)),
          static_cast<float>(state_.theta_dot)};
}

}  // namespace spibb::envs

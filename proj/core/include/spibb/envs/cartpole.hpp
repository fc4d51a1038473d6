#pragma once

#include "spibb/envs/environment.hpp"

namespace spibb::envs {

/// Cart-pole balancing, Euler-integrated at dt = 0.01.
///
/// Observation: (x, x_dot, sin(theta), cos(theta), theta_dot).
/// Actions: 0 push left, 1 no force, 2 push right.
/// Reward 1 for every step after which the pole is still within
/// +-12 degrees and the cart within +-2.4; the failing step pays 0 and ends
/// the episode. Horizon 1000, so returns lie in [0, 1000].
class Cartpole final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kPoleHalfLength = 0.5;
  static constexpr double kForce = 10.0;
  static constexpr double kDt = 0.01;
  static constexpr double kThetaLimit = 12.0 * 3.14159265358979323846 / 180.0;
  static constexpr double kPositionLimit = 2.4;
  static constexpr double kInitNoise = 0.05;

  Cartpole();

  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Environment> clone() const override;

  struct State {
    double x = 0, x_dot = 0, theta = 0, theta_dot = 0;
  };
  const State& state() const { return state_; }

 protected:
  Observation do_reset() override;
  std::pair<double, bool> do_step(int action) override;
  Observation observe() const override;

 private:
  EnvSpec spec_;
  State state_;
};

}  // namespace spibb::envs

#pragma once

#include <cstdint>
#include <memory>

#include "spibb/common/rng.hpp"
#include "spibb/common/types.hpp"
#include "spibb/envs/env_spec.hpp"

namespace spibb::envs {

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

/// A single-threaded episodic environment. Identical seed and action
/// sequence produce bitwise-identical observations and rewards.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;

  Observation reset(std::uint64_t seed);
  /// Throws std::logic_error after the episode ended and std::out_of_range
  /// for invalid actions.
  StepResult step(int action);

  int time_step() const { return time_step_; }
  bool done() const { return done_; }

  virtual std::unique_ptr<Environment> clone() const = 0;

 protected:
  virtual Observation do_reset() = 0;
  /// Advances the dynamics; returns (reward, terminal). The horizon cutoff is
  /// applied by the caller.
  virtual std::pair<double, bool> do_step(int action) = 0;
  virtual Observation observe() const = 0;

  Rng rng_;

 private:
  int time_step_ = 0;
  bool done_ = true;
};

/// Builds cartpole or catch. Tabular environments are constructed from a
/// TabularMDP directly (see tabular.hpp).
std::unique_ptr<Environment> make_environment(EnvName name);

}  // namespace spibb::envs

#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "spibb/common/types.hpp"
#include "spibb/envs/environment.hpp"

namespace spibb::envs {

/// Finite discounted MDP with tensors stored flat:
/// transition[(s * n_actions + a) * n_states + s'] and reward[s * n_actions + a].
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;
  std::vector<double> reward;
  double discount = 0.0;
  std::vector<double> initial_distribution;

  double p(int s, int a, int s_next) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s_next];
  }
  double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }

  /// Throws std::invalid_argument unless every P(.|s,a) and the initial
  /// distribution are probability vectors (within 1e-12) and discount is in [0,1).
  void validate() const;
};

/// Row-stochastic policy table, shape n_states x n_actions.
using PolicyTable = Eigen::MatrixXd;

struct PolicyValue {
  double expected_return = 0.0;  ///< J(pi) under the initial distribution.
  Eigen::MatrixXd q;             ///< n_states x n_actions.
};

/// Solves Q = r + gamma * P_pi Q exactly (dense LU on the |S||A| system).
PolicyValue exact_policy_value(const TabularMDP& mdp, const PolicyTable& policy);

/// Five-state deterministic chain. Action 0 moves left, 1 moves right
/// (clamped at the ends). Moving right at the right end pays 1, moving left
/// at the left end pays 0.2; everything else pays 0. Discount 0.9.
TabularMDP chain_mdp();

/// 4 x 4 deterministic gridworld, actions {up, right, down, left}, walls
/// clamp. Entering or staying on the bottom-right cell pays 1. Discount 0.9;
/// starts in the top-left cell. State index = row * 4 + column.
TabularMDP gridworld_mdp();

/// Episodic wrapper around a TabularMDP. Observations are one-hot vectors of
/// length n_states; episodes run for exactly `horizon` steps.
class TabularEnvironment final : public Environment {
 public:
  TabularEnvironment(TabularMDP mdp, int horizon);

  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Environment> clone() const override;

  const TabularMDP& mdp() const { return mdp_; }
  int state() const { return state_; }

 protected:
  Observation do_reset() override;
  std::pair<double, bool> do_step(int action) override;
  Observation observe() const override;

 private:
  TabularMDP mdp_;
  EnvSpec spec_;
  int state_ = 0;
};

Observation one_hot(int index, int size);
/// Index of the largest entry (first on ties); the inverse of one_hot.
int state_index(std::span<const float> observation);

}  // namespace spibb::envs

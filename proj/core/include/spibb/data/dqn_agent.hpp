#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "spibb/envs/environment.hpp"
#include "spibb/envs/policy.hpp"
#include "spibb/nets/mlp.hpp"

namespace spibb::data {

/// Online DQN used only to produce data-collecting behavior policies.
struct DqnConfig {
  int width = 64;
  int depth = 2;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int replay_capacity = 100000;
  int warmup_steps = 500;
  int target_update_period = 500;
  double discount = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  /// Fraction of the training episodes over which epsilon is annealed linearly.
  double anneal_fraction = 0.5;
};

inline constexpr int kMediumEpisodes = 200;
int expert_episodes(envs::EnvName env);

struct AgentCheckpoint {
  envs::EnvSpec env;
  int training_episodes = 0;
  std::uint64_t seed = 0;
  std::string schedule;  ///< Exploration schedule used during training.
  nets::Mlp<float> q;
};

/// Trains an epsilon-greedy DQN for `n_episodes` episodes. n_episodes = 0
/// returns the randomly initialized network.
AgentCheckpoint train_behavior_agent(const envs::Environment& env, int n_episodes,
                                     std::uint64_t seed, const DqnConfig& config = {});

void save_agent(const AgentCheckpoint& agent, const std::filesystem::path& path);
AgentCheckpoint load_agent(const std::filesystem::path& path);

/// Acts greedily w.r.t. a Q network, mixing in `epsilon` uniform exploration.
/// Ties go to the lowest action index.
class QNetworkPolicy final : public envs::DiscretePolicy {
 public:
  QNetworkPolicy(nets::Mlp<float> q, double epsilon);
  int n_actions() const override { return q_.output_dim(); }
  RowMatrixD probabilities(const RowMatrixF& observations) const override;

 private:
  nets::Mlp<float> q_;
  double epsilon_;
};

}  // namespace spibb::data

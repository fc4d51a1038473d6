#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "spibb/data/dataset.hpp"
#include "spibb/data/dqn_agent.hpp"
#include "spibb/envs/environment.hpp"
#include "spibb/envs/policy.hpp"
#include "spibb/envs/tabular.hpp"

namespace spibb::data {

/// Exploration rate of DQN agents when they collect data (their final
/// training epsilon).
inline constexpr double kCollectionEpsilon = 0.05;

int default_dataset_size(envs::EnvName env);

struct AgentSchedule {
  int medium_episodes = kMediumEpisodes;
  int expert_episodes = 0;  ///< 0 selects the per-environment default.
  DqnConfig dqn;
};

/// Builds the recipe for one of the five standard dataset types. Agent seeds
/// are derived from `seed`; med_seed uses five distinct agent seeds.
DatasetRecipe standard_recipe(DatasetType type, envs::EnvName env, std::uint64_t seed,
                              const AgentSchedule& schedule = {});

std::string dqn_reference(int episodes, std::uint64_t seed);

/// Resolves policy reference strings into runnable policies.
class PolicyResolver {
 public:
  virtual ~PolicyResolver() = default;
  virtual std::shared_ptr<const envs::DiscretePolicy> resolve(const std::string& reference) = 0;
};

/// Handles "uniform" and "dqn:<episodes>:<seed>", training agents on demand.
/// Trained agents are memoized and, if a cache directory is given, persisted
/// there and reused across processes.
class AgentPolicyResolver final : public PolicyResolver {
 public:
  AgentPolicyResolver(const envs::Environment& env, AgentSchedule schedule,
                      std::optional<std::filesystem::path> cache_dir = std::nullopt);

  std::shared_ptr<const envs::DiscretePolicy> resolve(const std::string& reference) override;
  AgentCheckpoint agent(int episodes, std::uint64_t seed);

 private:
  std::unique_ptr<envs::Environment> env_;
  AgentSchedule schedule_;
  std::optional<std::filesystem::path> cache_dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const envs::DiscretePolicy>> memo_;
};

/// Collects exactly n_transitions from whole episodes; each episode's
/// behavior component is drawn with probability equal to its weight and the
/// final episode is truncated. A pure function of (recipe, env, n, seed).
TransitionDataset generate_dataset(const DatasetRecipe& recipe, const envs::Environment& env,
                                   int n_transitions, std::uint64_t seed,
                                   PolicyResolver& resolver);

/// Tabular datasets for oracle tests: s from `state_distribution` (uniform if
/// empty), a ~ behavior(s, .), s' ~ P(.|s,a). One-hot observations, never done.
TransitionDataset sample_tabular_dataset(const envs::TabularMDP& mdp,
                                         const envs::PolicyTable& behavior, int n_transitions,
                                         std::uint64_t seed,
                                         std::span<const double> state_distribution = {});

}  // namespace spibb::data

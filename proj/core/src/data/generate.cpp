#include "spibb/data/generate.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <stdexcept>

#include "spibb/common/rng.hpp"
#include "spibb/envs/rollout.hpp"

namespace spibb::data {

int default_dataset_size(envs::EnvName env) {
  switch (env) {
    case envs::EnvName::kCartpole: return 20000;
    case envs::EnvName::kCatch: return 2000;
    case envs::EnvName::kTabular: return 10000;
  }
  return 0;
}

std::string dqn_reference(int episodes, std::uint64_t seed) {
  return "dqn:" + std::to_string(episodes) + ":" + std::to_string(seed);
}

DatasetRecipe standard_recipe(DatasetType type, envs::EnvName env, std::uint64_t seed,
                              const AgentSchedule& schedule) {
  const int medium = schedule.medium_episodes;
  const int expert = schedule.expert_episodes > 0 ? schedule.expert_episodes : expert_episodes(env);
  // Agent seeds are kept to 32 bits so references stay short.
  auto agent_seed = [&](std::uint64_t k) {
    return derive_seed(seed, Stream::kAgentTraining, k) & 0xffffffffULL;
  };
  DatasetRecipe r;
  r.type = type;
  r.seed = seed;
  switch (type) {
    case DatasetType::kMed:
      r.components = {{dqn_reference(medium, agent_seed(0)), 1.0}};
      break;
    case DatasetType::kMedSeed:
      for (std::uint64_t k = 0; k < 5; ++k) r.components.push_back({dqn_reference(medium, agent_seed(k)), 0.2});
      break;
    case DatasetType::kUni:
      r.components = {{"uniform", 1.0}};
      break;
    case DatasetType::kUniMed:
      r.components = {{"uniform", 0.5}, {dqn_reference(medium, agent_seed(0)), 0.5}};
      break;
    case DatasetType::kUniExp:
      r.components = {{"uniform", 0.5}, {dqn_reference(expert, agent_seed(0)), 0.5}};
      break;
    case DatasetType::kCustom:
      throw std::invalid_argument("custom recipes have no standard definition");
  }
  DqnConfig probe = schedule.dqn;
  r.notes = "data-collecting agents act epsilon-greedily with epsilon " +
            std::to_string(kCollectionEpsilon) + "; trained with " +
            "epsilon annealed " + std::to_string(probe.epsilon_start) + "->" +
            std::to_string(probe.epsilon_end) + " over the first " +
            std::to_string(probe.anneal_fraction) + " of training episodes";
  return r;
}

AgentPolicyResolver::AgentPolicyResolver(const envs::Environment& env, AgentSchedule schedule,
                                         std::optional<std::filesystem::path> cache_dir)
    : env_(env.clone()), schedule_(std::move(schedule)), cache_dir_(std::move(cache_dir)) {}

AgentCheckpoint AgentPolicyResolver::agent(int episodes, std::uint64_t seed) {
  std::optional<std::filesystem::path> file;
  if (cache_dir_) {
    file = *cache_dir_ / (std::string(envs::to_string(env_->spec().name)) + "_dqn_" +
                          std::to_string(episodes) + "_" + std::to_string(seed) + ".agent");
    if (std::filesystem::exists(*file)) {
      auto loaded = load_agent(*file);
      if (loaded.env == env_->spec()) return loaded;
    }
  }
  auto trained = train_behavior_agent(*env_, episodes, seed, schedule_.dqn);
  if (file) save_agent(trained, *file);
  return trained;
}

std::shared_ptr<const envs::DiscretePolicy> AgentPolicyResolver::resolve(const std::string& ref) {
  std::lock_guard lock(mutex_);
  if (auto it = memo_.find(ref); it != memo_.end()) return it->second;
  std::shared_ptr<const envs::DiscretePolicy> policy;
  if (ref == "uniform") {
    policy = std::make_shared<envs::UniformPolicy>(env_->spec().n_actions);
  } else if (ref.rfind("dqn:", 0) == 0) {
    const auto colon = ref.find(':', 4);
    if (colon == std::string::npos) throw std::invalid_argument("bad policy reference '" + ref + "'");
    int episodes = 0;
    std::uint64_t seed = 0;
    const char* b = ref.data();
    auto r1 = std::from_chars(b + 4, b + colon, episodes);
    auto r2 = std::from_chars(b + colon + 1, b + ref.size(), seed);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r2.ptr != b + ref.size() || episodes < 0) {
      throw std::invalid_argument("bad policy reference '" + ref + "'");
    }
    policy = std::make_shared<QNetworkPolicy>(agent(episodes, seed).q, kCollectionEpsilon);
  } else {
    throw std::invalid_argument("unknown policy reference '" + ref + "'");
  }
  memo_.emplace(ref, policy);
  return policy;
}

TransitionDataset generate_dataset(const DatasetRecipe& recipe, const envs::Environment& env,
                                   int n_transitions, std::uint64_t seed,
                                   PolicyResolver& resolver) {
  recipe.validate();
  if (n_transitions <= 0) throw std::invalid_argument("n_transitions must be positive");
  std::vector<std::shared_ptr<const envs::DiscretePolicy>> policies;
  std::vector<double> weights;
  for (const auto& c : recipe.components) {
    auto p = resolver.resolve(c.policy);
    if (p->n_actions() != env.spec().n_actions) {
      throw std::invalid_argument("policy '" + c.policy + "' does not match the environment's actions");
    }
    policies.push_back(std::move(p));
    weights.push_back(c.weight);
  }

  DatasetRecipe provenance = recipe;
  provenance.seed = seed;
  TransitionDataset out(env.spec(), std::move(provenance));
  out.reserve(n_transitions);
  Rng mixture_rng(derive_seed(seed, Stream::kDataset));
  for (std::uint64_t episode = 0; static_cast<int>(out.size()) < n_transitions; ++episode) {
    const int component = sample_categorical(weights, mixture_rng);
    auto result = envs::rollout(env, *policies[component],
                                derive_seed(seed, Stream::kDataset, episode + 1), 1, true);
    for (const auto& t : result.episodes.front().transitions) {
      if (static_cast<int>(out.size()) == n_transitions) break;
      out.push_back(t);
    }
  }
  return out;
}

TransitionDataset sample_tabular_dataset(const envs::TabularMDP& mdp,
                                         const envs::PolicyTable& behavior, int n_transitions,
                                         std::uint64_t seed,
                                         std::span<const double> state_distribution) {
  mdp.validate();
  if (n_transitions <= 0) throw std::invalid_argument("n_transitions must be positive");
  if (behavior.rows() != mdp.n_states || behavior.cols() != mdp.n_actions) {
    throw std::invalid_argument("behavior table shape does not match MDP");
  }
  std::vector<double> states(state_distribution.begin(), state_distribution.end());
  if (states.empty()) states.assign(mdp.n_states, 1.0 / mdp.n_states);
  if (static_cast<int>(states.size()) != mdp.n_states) {
    throw std::invalid_argument("state distribution has wrong length");
  }
  double mass = 0.0;
  for (double p : states) {
    if (!(p >= 0.0)) throw std::invalid_argument("state distribution has a negative entry");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("state distribution does not sum to one");
  const auto [lo, hi] = std::minmax_element(mdp.reward.begin(), mdp.reward.end());
  envs::EnvSpec spec{envs::EnvName::kTabular, mdp.n_states, mdp.n_actions, 1, *lo, *hi};
  DatasetRecipe recipe;
  recipe.type = DatasetType::kCustom;
  recipe.seed = seed;
  recipe.components = {{"tabular-behavior", 1.0}};
  recipe.notes = "i.i.d. (s, a, s') samples from a tabular MDP";
  TransitionDataset out(spec, recipe);
  out.reserve(n_transitions);
  Rng rng(derive_seed(seed, Stream::kDataset));
  std::vector<double> row(mdp.n_actions), next(mdp.n_states);
  for (int i = 0; i < n_transitions; ++i) {
    const int s = sample_categorical(states, rng);
    for (int a = 0; a < mdp.n_actions; ++a) row[a] = behavior(s, a);
    const int a = sample_categorical(row, rng);
    for (int s2 = 0; s2 < mdp.n_states; ++s2) next[s2] = mdp.p(s, a, s2);
    const int s2 = sample_categorical(next, rng);
    out.push_back({envs::one_hot(s, mdp.n_states), a, static_cast<float>(mdp.r(s, a)),
                   envs::one_hot(s2, mdp.n_states), false});
  }
  return out;
}

}  // namespace spibb::data

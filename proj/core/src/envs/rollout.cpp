#include "spibb/envs/rollout.hpp"

#include <numeric>
#include <stdexcept>

namespace spibb::envs {

std::vector<double> RolloutResult::returns() const {
  std::vector<double> out;
  out.reserve(episodes.size());
  for (const auto& e : episodes) out.push_back(e.episode_return);
  return out;
}

double RolloutResult::mean_return() const {
  if (episodes.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : episodes) sum += e.episode_return;
  return sum / static_cast<double>(episodes.size());
}

RolloutResult rollout(const Environment& prototype, const DiscretePolicy& policy,
                      std::uint64_t seed, int n_episodes, bool record_transitions) {
  if (n_episodes < 0) throw std::invalid_argument("n_episodes must be nonnegative");
  const EnvSpec& spec = prototype.spec();
  if (policy.n_actions() != spec.n_actions) {
    throw std::invalid_argument("policy action count does not match environment");
  }

  struct Slot {
    std::unique_ptr<Environment> env;
    Rng action_rng;
    Observation obs;
  };
  std::vector<Slot> slots;
  slots.reserve(n_episodes);
  RolloutResult result;
  result.episodes.resize(n_episodes);
  for (int k = 0; k < n_episodes; ++k) {
    Slot slot{prototype.clone(), Rng(derive_seed(seed, Stream::kPolicy, k)), {}};
    slot.obs = slot.env->reset(derive_seed(seed, Stream::kEnvironment, k));
    if (static_cast<int>(slot.obs.size()) != spec.obs_dim) {
      throw std::logic_error("environment observation has wrong dimension");
    }
    slots.push_back(std::move(slot));
  }

  std::vector<int> active(n_episodes);
  std::iota(active.begin(), active.end(), 0);
  RowMatrixF batch;
  while (!active.empty()) {
    batch.resize(static_cast<Eigen::Index>(active.size()), spec.obs_dim);
    for (std::size_t i = 0; i < active.size(); ++i) {
      const auto& obs = slots[active[i]].obs;
      for (int d = 0; d < spec.obs_dim; ++d) batch(static_cast<Eigen::Index>(i), d) = obs[d];
    }
    const RowMatrixD probs = policy.probabilities(batch);
    if (probs.rows() != batch.rows() || probs.cols() != spec.n_actions) {
      throw std::invalid_argument("policy returned a matrix of the wrong shape");
    }
    check_distribution_rows(probs);

    std::vector<int> still_active;
    still_active.reserve(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      const int k = active[i];
      Slot& slot = slots[k];
      const auto row = probs.row(static_cast<Eigen::Index>(i));
      const int action = sample_categorical(std::span<const double>(row.data(), row.size()),
                                            slot.action_rng);
      StepResult step = slot.env->step(action);
      Episode& ep = result.episodes[k];
      ep.episode_return += step.reward;
      ++ep.length;
      if (record_transitions) {
        ep.transitions.push_back({slot.obs, action, static_cast<float>(step.reward),
                                  step.observation, step.done});
      }
      slot.obs = std::move(step.observation);
      if (!step.done) still_active.push_back(k);
    }
    active = std::move(still_active);
  }
  return result;
}

}  // namespace spibb::envs

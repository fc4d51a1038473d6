#pragma once

#include <cstdint>
#include <vector>

#include "spibb/common/types.hpp"
#include "spibb/envs/environment.hpp"
#include "spibb/envs/policy.hpp"

namespace spibb::envs {

inline constexpr int kDefaultEvaluationEpisodes = 50;

struct Episode {
  std::vector<Transition> transitions;  ///< Empty unless recording was requested.
  double episode_return = 0.0;          ///< Undiscounted.
  int length = 0;
};

struct RolloutResult {
  std::vector<Episode> episodes;

  std::vector<double> returns() const;
  double mean_return() const;
};

/// Runs `n_episodes` episodes of `policy` on copies of `prototype`.
/// Episode k is reset with a seed derived from (seed, k) and samples actions
/// from its own stream, so the result is independent of how episodes are
/// batched. Episodes advance in lockstep to batch policy evaluation.
RolloutResult rollout(const Environment& prototype, const DiscretePolicy& policy,
                      std::uint64_t seed, int n_episodes,
                      bool record_transitions = false);

}  // namespace spibb::envs

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

namespace spibb::testing {

/// Neural evaluation with epsilon_train = 0 on the five-state chain; returns
/// the sup-norm distance between the learned Q and the exact Q of beta-hat.
double chain_one_step_recovery_error(std::uint64_t seed);

struct TabularIdentity {
  double max_relative_error = 0.0;  ///< factored u(s,a) vs c / sqrt(n(s,a))
  int counted_pairs = 0;
};

/// Samples a gridworld dataset with a random behavior and compares the
/// factored count composition with the direct pair count formula.
TabularIdentity tabular_identity(std::uint64_t seed, double c);

struct EstimatorFidelity {
  double max_relative_error = 0.0;
  int evaluations = 0;
};

/// Random untrained ensembles of varying size and output width, compared with
/// the brute-force transcription on random inputs.
EstimatorFidelity ensemble_estimator_fidelity(std::uint64_t seed, int n_ensembles);

struct TwoCluster {
  double trained_mean = 0.0;
  double held_out_mean = 0.0;
};

/// Trains an ensemble on one Gaussian cluster and measures u on fresh points
/// from it and from a second, distant cluster.
TwoCluster two_cluster_uncertainty(std::uint64_t seed);

struct MinimalUncertainty {
  Eigen::VectorXi learned;   ///< greedy action of the trained pessimistic Q
  Eigen::VectorXi oracle;    ///< greedy action of value iteration on -u
  double penalty = 0.0;      ///< alpha * scale
  double min_oracle_gap = 0.0;
  /// penalty * min_oracle_gap must exceed 2 r_max / (1 - gamma) for the
  /// two greedy policies to be forced equal.
  bool gap_condition = false;
  int mismatches() const { return static_cast<int>((learned.array() != oracle.array()).count()); }
};

/// 4x4 gridworld with a crafted count-based u (skewed behavior, large count
/// constant), tabular pessimism with alpha = 100 times the calibration scale.
MinimalUncertainty minimal_uncertainty_gridworld(std::uint64_t seed);

}  // namespace spibb::testing

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>

#include "spibb/behavior/behavior.hpp"
#include "spibb/data/dataset.hpp"
#include "spibb/uncertainty/ensemble.hpp"

namespace spibb::uncertainty {

enum class Variant {
  kFactored,       ///< u(s) / sqrt(beta(a|s))
  kBehaviorOnly,   ///< 1 / sqrt(beta(a|s))
  kJointSa,        ///< ensemble over (s, one-hot a)
  kTabularCounts,  ///< c / sqrt(n(s,a))
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

/// Floor applied to beta(a|s) before dividing by its square root.
inline constexpr double kBehaviorFloor = 1e-6;
/// Uncertainty reported for never-visited (s,a) by count-based estimates.
inline constexpr double kUnvisitedUncertainty = 1e6;

/// Count-based state uncertainty c / sqrt(n(s)), and c / sqrt(n(s,a)) for
/// pairs; unvisited states or pairs get kUnvisitedUncertainty.
class CountUncertainty {
 public:
  CountUncertainty(std::shared_ptr<const behavior::BehaviorModel> counts, double c);

  double state(std::span<const float> observation) const;
  double state_action(std::span<const float> observation, int action) const;
  double constant() const { return c_; }
  const behavior::BehaviorModel& counts() const { return *counts_; }

 private:
  std::shared_ptr<const behavior::BehaviorModel> counts_;
  double c_;
};

/// u(s,a) under one of the composition variants, plus the calibration scale.
///
/// The factored variant combines a state estimate (ensemble or counts) with
/// beta-hat. Values are nonnegative and, for a fixed state, nonincreasing in
/// beta-hat(a|s).
class UncertaintyModel {
 public:
  static UncertaintyModel factored(EnsembleUncertainty state,
                                   std::shared_ptr<const behavior::BehaviorModel> behavior);
  static UncertaintyModel factored(CountUncertainty state,
                                   std::shared_ptr<const behavior::BehaviorModel> behavior);
  static UncertaintyModel behavior_only(std::shared_ptr<const behavior::BehaviorModel> behavior);
  static UncertaintyModel joint(EnsembleUncertainty state_action, int n_actions);
  static UncertaintyModel tabular_counts(CountUncertainty counts);

  Variant variant() const { return variant_; }
  int n_actions() const { return n_actions_; }

  /// rows x n_actions matrix of u(s,a), unscaled.
  RowMatrixD evaluate(const RowMatrixF& observations) const;
  std::vector<double> evaluate(std::span<const float> observation) const;
  double evaluate(std::span<const float> observation, int action) const;

  /// u(s) where the variant has one (factored); std::nullopt otherwise.
  std::optional<double> state_uncertainty(std::span<const float> observation) const;

  double scale() const { return scale_; }
  void set_scale(double scale);

  const std::optional<EnsembleUncertainty>& ensemble() const { return ensemble_; }
  const std::shared_ptr<const behavior::BehaviorModel>& behavior() const { return behavior_; }

  /// The checkpoint stores everything except the behavior model, which is
  /// referenced by the CRC32 of its serialized form and must be supplied on load.
  std::string serialize() const;
  static UncertaintyModel deserialize(std::string bytes,
                                      std::shared_ptr<const behavior::BehaviorModel> behavior);
  void save(const std::filesystem::path& path) const;
  static UncertaintyModel load(const std::filesystem::path& path,
                               std::shared_ptr<const behavior::BehaviorModel> behavior);

 private:
  UncertaintyModel() = default;
  Eigen::VectorXd state_values(const RowMatrixF& observations) const;

  Variant variant_ = Variant::kFactored;
  int n_actions_ = 0;
  std::optional<EnsembleUncertainty> ensemble_;
  std::optional<CountUncertainty> counts_;
  std::shared_ptr<const behavior::BehaviorModel> behavior_;
  double scale_ = 1.0;
};

std::uint32_t behavior_fingerprint(const behavior::BehaviorModel& model);
std::uint32_t uncertainty_fingerprint(const UncertaintyModel& model);

/// Fits the state ensemble on the dataset's states.
EnsembleUncertainty fit_state_uncertainty(const data::TransitionDataset& dataset,
                                          const EnsembleConfig& config);
/// Fits an ensemble on (s_j, one-hot a_j) inputs.
EnsembleUncertainty fit_joint_uncertainty(const data::TransitionDataset& dataset,
                                          const EnsembleConfig& config);

RowMatrixF append_one_hot(const RowMatrixF& observations, std::span<const int> actions, int n_actions);

/// Mean of u(s_j, a_j) over one batch drawn uniformly (with replacement) with
/// the given seed. Throws std::invalid_argument for batch_size < 1 or an
/// empty dataset.
double calibrate_scale(const UncertaintyModel& model, const data::TransitionDataset& dataset,
                       int batch_size, std::uint64_t seed);

}  // namespace spibb::uncertainty

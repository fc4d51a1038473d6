#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spibb/common/binary_io.hpp"
#include "spibb/common/types.hpp"
#include "spibb/data/dataset.hpp"
#include "spibb/envs/policy.hpp"
#include "spibb/nets/mlp.hpp"

namespace spibb::behavior {

enum class Backend { kNeural, kTabular };

std::string_view to_string(Backend b);
Backend parse_backend(std::string_view name);

struct BehaviorConfig {
  Backend backend = Backend::kNeural;
  int steps = 10000;
  double learning_rate = 1e-3;
  int batch_size = 256;
  int width = 64;
  int depth = 2;
  std::uint64_t seed = 0;
};

/// Maximum-likelihood estimate of the data-collecting policy.
///
/// The neural backend is an MLP with a softmax head. The tabular backend
/// keys states by their exact observation bytes and returns n(s,a)/n(s);
/// unseen states get the uniform distribution and are reported by unseen().
class BehaviorModel {
 public:
  BehaviorModel() = default;
  static BehaviorModel neural(nets::Mlp<float> logits_net);

  int n_actions() const { return n_actions_; }
  Backend backend() const { return backend_; }

  RowMatrixD probabilities(const RowMatrixF& observations) const;
  std::vector<double> probabilities(std::span<const float> observation) const;

  /// True only for the tabular backend at a state absent from the data.
  bool unseen(std::span<const float> observation) const;

  /// Tabular counts; zero for unseen states. Throws std::logic_error on the
  /// neural backend.
  double state_count(std::span<const float> observation) const;
  double count(std::span<const float> observation, int action) const;

  const nets::Mlp<float>& network() const { return net_; }

  void write(io::BinaryWriter& out) const;
  static BehaviorModel read(io::BinaryReader& in);
  void save(const std::filesystem::path& path) const;
  static BehaviorModel load(const std::filesystem::path& path);

  /// Builds tabular counts from a dataset.
  static BehaviorModel count_table(const data::TransitionDataset& dataset);

 private:
  static std::string key(std::span<const float> observation);
  const std::vector<double>* lookup(std::span<const float> observation) const;

  Backend backend_ = Backend::kNeural;
  int n_actions_ = 0;
  nets::Mlp<float> net_;
  std::unordered_map<std::string, std::vector<double>> counts_;
};

/// Fits the configured backend. Throws std::invalid_argument on an empty
/// dataset.
BehaviorModel fit_behavior(const data::TransitionDataset& dataset, const BehaviorConfig& config);

/// Mean cross-entropy -log beta(a_j|s_j) over the dataset.
double cross_entropy(const BehaviorModel& model, const data::TransitionDataset& dataset);

/// Softmax cross-entropy on logits: returns the mean loss and writes
/// d loss / d logits into `grad`.
template <typename Scalar>
double softmax_cross_entropy(const RowMatrix<Scalar>& logits, std::span<const int> actions,
                             RowMatrix<Scalar>& grad);

/// Behavior cloning: act by sampling beta-hat, or deterministically on its
/// mode ("argmax BC", ties to the lowest index).
class BehaviorCloningPolicy final : public envs::DiscretePolicy {
 public:
  enum class Mode { kSample, kArgmax };
  BehaviorCloningPolicy(BehaviorModel model, Mode mode) : model_(std::move(model)), mode_(mode) {}
  int n_actions() const override { return model_.n_actions(); }
  RowMatrixD probabilities(const RowMatrixF& observations) const override;

 private:
  BehaviorModel model_;
  Mode mode_;
};

}  // namespace spibb::behavior

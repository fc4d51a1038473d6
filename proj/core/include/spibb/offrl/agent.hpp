#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "spibb/behavior/behavior.hpp"
#include "spibb/data/dataset.hpp"
#include "spibb/envs/policy.hpp"
#include "spibb/nets/mlp.hpp"
#include "spibb/uncertainty/model.hpp"

namespace spibb::offrl {

enum class ImprovementKind { kGreedy, kBcq, kSpibb, kBc };
enum class EvalStepKind { kPlain, kPessimism, kCql };
enum class QBackend { kNeural, kTabular };

std::string_view to_string(ImprovementKind k);
std::string_view to_string(EvalStepKind k);
std::string_view to_string(QBackend b);
ImprovementKind parse_improvement(std::string_view name);
EvalStepKind parse_eval_step(std::string_view name);
QBackend parse_q_backend(std::string_view name);

/// Hyperparameters of one offline agent. epsilon_train, epsilon_eval and the
/// pessimism alpha are in units of the uncertainty calibration scale; the CQL
/// alpha is used as is.
struct AgentConfig {
  ImprovementKind improvement = ImprovementKind::kGreedy;
  double tau = 0.0;
  double epsilon_train = 0.0;
  double epsilon_eval = 0.0;
  /// Standard SPIBB evaluates with epsilon_train; only the generalized
  /// variant may choose a different epsilon_eval.
  bool generalized = false;
  EvalStepKind eval_step = EvalStepKind::kPlain;
  double alpha = 0.0;

  double gamma = 0.99;
  int steps = 100000;
  int target_period = 1000;
  int batch_size = 256;
  double learning_rate = 3e-5;
  int width = 256;
  int depth = 2;
  QBackend backend = QBackend::kNeural;
  double u_ceiling = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  bool needs_behavior() const;
  bool needs_uncertainty() const;
  /// Throws ConfigError on out-of-range values or an epsilon_eval that
  /// differs from epsilon_train in the standard variant.
  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

/// Action values, either an MLP (one output per action) or a table indexed
/// by the one-hot state of a tabular environment.
class QFunction {
 public:
  QFunction() = default;
  static QFunction neural(nets::Mlp<float> net);
  static QFunction tabular(Eigen::MatrixXd table);

  QBackend backend() const { return backend_; }
  int n_actions() const;
  RowMatrixD values(const RowMatrixF& observations) const;

  const nets::Mlp<float>& network() const { return net_; }
  const Eigen::MatrixXd& table() const { return table_; }
  Eigen::MatrixXd& table() { return table_; }

  void write(io::BinaryWriter& out) const;
  static QFunction read(io::BinaryReader& in);

 private:
  QBackend backend_ = QBackend::kNeural;
  nets::Mlp<float> net_;
  Eigen::MatrixXd table_;
};

struct TrainedAgent {
  AgentConfig config;
  envs::EnvSpec env;
  QFunction q;
  /// Calibration scale applied to epsilon / pessimism alpha (1 if unused).
  double scale = 1.0;
  std::optional<std::uint32_t> behavior_fingerprint;
  std::optional<std::uint32_t> uncertainty_fingerprint;
  int iterations = 0;
  /// Mean training loss over each target-network period.
  std::vector<double> loss_trace;

  void save(const std::filesystem::path& path) const;
  static TrainedAgent load(const std::filesystem::path& path);
};

/// Improvement rule applied row by row. `beta` and `u` may be empty when the
/// rule does not use them; epsilon is already scaled.
RowMatrixD improve_rows(ImprovementKind kind, const RowMatrixD& q, const RowMatrixD& beta,
                        const RowMatrixD& u, double tau, double epsilon, double u_ceiling);

/// Approximate policy iteration: every target_period steps the target network
/// is refreshed and the improvement policy is rebuilt from it; in between the
/// online Q regresses onto the configured evaluation-step targets.
///
/// The tabular backend replaces the inner regression by its exact solution
/// (per (s,a) mean of the targets) and supports plain and pessimism steps.
TrainedAgent train(const data::TransitionDataset& dataset, const AgentConfig& config,
                   std::shared_ptr<const behavior::BehaviorModel> behavior,
                   std::shared_ptr<const uncertainty::UncertaintyModel> uncertainty);

/// Policy executed at evaluation time. SPIBB agents use epsilon_eval (scaled);
/// greedy, pessimism and CQL agents act greedily on Q; BCQ filters by tau;
/// BC samples beta-hat. Throws std::invalid_argument if a required model is
/// missing or its fingerprint differs from the one recorded at training.
std::unique_ptr<envs::DiscretePolicy> make_eval_policy(
    const TrainedAgent& agent, std::shared_ptr<const behavior::BehaviorModel> behavior,
    std::shared_ptr<const uncertainty::UncertaintyModel> uncertainty);

}  // namespace spibb::offrl

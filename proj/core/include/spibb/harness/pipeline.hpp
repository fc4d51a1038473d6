#pragma once

#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "spibb/behavior/behavior.hpp"
#include "spibb/data/dataset.hpp"
#include "spibb/harness/config.hpp"
#include "spibb/harness/results.hpp"
#include "spibb/offrl/agent.hpp"
#include "spibb/uncertainty/model.hpp"

namespace spibb::harness {

/// One (dataset type, dataset seed) pair of a sweep.
struct DatasetKey {
  data::DatasetType type;
  std::uint64_t seed;
  std::string label() const;
  bool operator==(const DatasetKey&) const = default;
};

/// A trained agent shared by every evaluation cell that differs only in
/// evaluation-time hyperparameters.
struct TrainingTask {
  DatasetKey dataset;
  Algorithm algorithm;
  Cell train_cell;
  std::vector<Cell> eval_cells;
};

/// Runs the gen-data -> fit -> train -> eval stages for one config. Every
/// artifact lives under the output directory and is reused when present, so
/// each stage (and a killed sweep) can be resumed. Thread-safe; artifacts
/// are built at most once per process.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const std::filesystem::path& output_dir() const { return out_; }
  std::filesystem::path results_path() const { return out_ / "results.jsonl"; }

  std::vector<DatasetKey> dataset_keys() const;
  std::vector<TrainingTask> training_tasks() const;

  std::shared_ptr<const data::TransitionDataset> dataset(const DatasetKey& key);
  std::shared_ptr<const behavior::BehaviorModel> behavior(const DatasetKey& key);
  std::shared_ptr<const uncertainty::UncertaintyModel> uncertainty(const DatasetKey& key);
  /// Trains (or loads) the agent of a task; untrained baselines return null.
  std::shared_ptr<const offrl::TrainedAgent> agent(const TrainingTask& task);
  /// Evaluates one cell of a task for config().evaluation.episodes episodes.
  RunResult evaluate(const TrainingTask& task, const Cell& eval_cell);

  void generate_all();
  void fit_behavior_all();
  void fit_uncertainty_all();
  void train_all();
  /// Evaluates every cell without an "ok" result yet, appending to the
  /// result store. Failing cells are recorded with status "error".
  std::vector<RunResult> evaluate_all();
  /// All stages; returns the full result set of the store afterwards.
  std::vector<RunResult> run_sweep();

  using Progress = std::function<void(const std::string&)>;
  void set_progress(Progress p) { progress_ = std::move(p); }

 private:
  template <typename T>
  std::shared_ptr<const T> memo(const std::string& key, const std::function<std::shared_ptr<const T>()>& make);
  void for_each_parallel(std::size_t n, const std::function<void(std::size_t)>& fn);
  void log(const std::string& msg);
  std::filesystem::path artifact(const std::string& kind, const std::string& name) const;
  bool any_algorithm_needs_uncertainty() const;
  bool any_algorithm_needs_behavior() const;

  ExperimentConfig config_;
  std::filesystem::path out_;
  std::string hash_;
  ResultStore store_;
  std::mutex memo_mutex_;
  std::map<std::string, std::shared_future<std::shared_ptr<const void>>> memo_;
  std::mutex log_mutex_;
  Progress progress_;
};

std::string task_label(const TrainingTask& task);

/// Evaluates a saved agent on a built-in environment: the mean over
/// `episodes` returns of its evaluation policy. Throws std::invalid_argument
/// if the checkpoint was trained on a different environment.
RunResult evaluate_checkpoint(const offrl::TrainedAgent& agent, envs::EnvName env,
                              std::shared_ptr<const behavior::BehaviorModel> behavior,
                              std::shared_ptr<const uncertainty::UncertaintyModel> uncertainty, int episodes,
                              std::uint64_t seed);

}  // namespace spibb::harness

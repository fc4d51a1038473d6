#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spibb/behavior/behavior.hpp"
#include "spibb/data/dataset.hpp"
#include "spibb/envs/env_spec.hpp"
#include "spibb/harness/algorithms.hpp"
#include "spibb/uncertainty/ensemble.hpp"
#include "spibb/uncertainty/model.hpp"

namespace spibb::harness {

enum class Preset { kFull, kQuick };

struct DatasetSettings {
  std::vector<data::DatasetType> types{data::DatasetType::kUniExp, data::DatasetType::kMed};
  int size = 0;  ///< 0 selects the per-environment default
  /// A fixed dataset file; replaces generation (types and seeds then only
  /// label the results).
  std::optional<std::filesystem::path> path;
  int medium_episodes = 200;
  int expert_episodes = 0;
};

struct UncertaintySettings {
  uncertainty::Variant variant = uncertainty::Variant::kFactored;
  /// State estimate of the factored variant: "ensemble" or "counts".
  std::string state_source = "ensemble";
  uncertainty::EnsembleConfig ensemble;
  double count_constant = 1.0;
  int calibration_batch = 256;
};

struct AlgorithmSpec {
  Algorithm algorithm = Algorithm::kBc;
  Grid grid;
};

struct EvaluationSettings {
  int episodes = 50;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  envs::EnvName env = envs::EnvName::kCartpole;
  Preset preset = Preset::kFull;
  std::vector<std::uint64_t> seeds;
  DatasetSettings dataset;
  behavior::BehaviorConfig behavior;
  UncertaintySettings uncertainty;
  TrainingSchedule training;
  std::vector<AlgorithmSpec> algorithms;
  EvaluationSettings evaluation;
  std::filesystem::path output_dir = "runs/default";
  int workers = 1;

  /// Fully resolved config as YAML; parse_config(canonical()) round-trips.
  std::string canonical() const;
  /// CRC32 of canonical() without the output directory and worker count,
  /// as 8 hex digits.
  std::string hash() const;
  int dataset_size() const;
};

/// Parses a config document. `overrides` are "dotted.path=value" strings
/// applied to the document before validation. Errors are ConfigError with a
/// "<source>:<line>:<column>: <field>: message" diagnostic.
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                              const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Resolves a relative output directory against $SPIBB_OUTPUT_ROOT when set.
std::filesystem::path resolve_output_dir(const std::filesystem::path& dir);

}  // namespace spibb::harness

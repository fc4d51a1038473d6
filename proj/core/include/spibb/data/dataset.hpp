#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spibb/common/types.hpp"
#include "spibb/envs/env_spec.hpp"

namespace spibb::data {

enum class DatasetType { kMed, kMedSeed, kUni, kUniMed, kUniExp, kCustom };

std::string_view to_string(DatasetType type);
DatasetType parse_dataset_type(std::string_view name);

/// One behavior policy in a mixture. `policy` is a reference string:
/// "uniform" or "dqn:<training episodes>:<training seed>".
struct PolicyComponent {
  std::string policy;
  double weight = 1.0;

  bool operator==(const PolicyComponent&) const = default;
};

struct DatasetRecipe {
  DatasetType type = DatasetType::kCustom;
  std::vector<PolicyComponent> components;
  std::uint64_t seed = 0;
  /// Free-form provenance (exploration schedule of the data-collecting agents).
  std::string notes;

  /// Throws std::invalid_argument for an empty recipe or weights that are
  /// negative or do not sum to one within 1e-12.
  void validate() const;

  bool operator==(const DatasetRecipe&) const = default;
};

/// Immutable-after-construction transition store, kept as flat arrays so
/// that minibatches can be gathered without per-transition allocation.
class TransitionDataset {
 public:
  TransitionDataset() = default;
  TransitionDataset(envs::EnvSpec env, DatasetRecipe provenance);

  const envs::EnvSpec& env() const { return env_; }
  const DatasetRecipe& provenance() const { return provenance_; }
  std::size_t size() const { return actions_.size(); }
  bool empty() const { return actions_.empty(); }
  int obs_dim() const { return env_.obs_dim; }

  /// Appends a transition; throws std::invalid_argument on a malformed one.
  void push_back(const Transition& t);
  void reserve(std::size_t n);

  Transition transition(std::size_t i) const;
  std::span<const float> state(std::size_t i) const;
  std::span<const float> next_state(std::size_t i) const;
  int action(std::size_t i) const { return actions_[i]; }
  float reward(std::size_t i) const { return rewards_[i]; }
  bool done(std::size_t i) const { return dones_[i] != 0; }

  /// Rows of s (or s') for the given indices.
  RowMatrixF gather_states(std::span<const int> indices) const;
  RowMatrixF gather_next_states(std::span<const int> indices) const;
  /// All states / next states as a matrix.
  RowMatrixF all_states() const;
  RowMatrixF all_next_states() const;

  bool operator==(const TransitionDataset&) const = default;

 private:
  envs::EnvSpec env_;
  DatasetRecipe provenance_;
  std::vector<float> states_;
  std::vector<float> next_states_;
  std::vector<std::uint16_t> actions_;
  std::vector<float> rewards_;
  std::vector<std::uint8_t> dones_;
};

inline constexpr std::string_view kDatasetMagic = "SPBDATA1";
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

/// Binary container: magic, version, env header, provenance, record count,
/// fixed-width little-endian records (float32 s, uint16 a, float32 r,
/// float32 s', uint8 done) and a trailing CRC32.
void save_dataset(const TransitionDataset& dataset, const std::filesystem::path& path);
/// Throws FormatError on version mismatch, truncation or checksum failure.
TransitionDataset load_dataset(const std::filesystem::path& path);

std::string serialize_dataset(const TransitionDataset& dataset);
TransitionDataset deserialize_dataset(std::string bytes);

/// Human-readable export; not loadable.
void export_csv(const TransitionDataset& dataset, const std::filesystem::path& path);

}  // namespace spibb::data

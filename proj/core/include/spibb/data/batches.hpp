#pragma once

#include <cstdint>
#include <vector>

#include "spibb/common/rng.hpp"

namespace spibb::data {

inline constexpr int kDefaultBatchSize = 256;

/// Uniform minibatch sampling with replacement, one batch per training step.
/// batch_size may exceed the dataset size.
class BatchSampler {
 public:
  BatchSampler(std::size_t dataset_size, int batch_size, std::uint64_t seed);

  std::vector<int> next();
  void next(std::vector<int>& out);

  int batch_size() const { return batch_size_; }

 private:
  std::size_t n_;
  int batch_size_;
  Rng rng_;
};

}  // namespace spibb::data

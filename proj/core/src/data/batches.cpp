#include "spibb/data/batches.hpp"

#include <stdexcept>

namespace spibb::data {

BatchSampler::BatchSampler(std::size_t dataset_size, int batch_size, std::uint64_t seed)
    : n_(dataset_size), batch_size_(batch_size), rng_(seed) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (dataset_size == 0) throw std::invalid_argument("cannot sample batches from an empty dataset");
}

std::vector<int> BatchSampler::next() {
  std::vector<int> out;
  next(out);
  return out;
}

void BatchSampler::next(std::vector<int>& out) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(n_ - 1));
  out.resize(batch_size_);
  for (auto& i : out) i = pick(rng_);
}

}  // namespace spibb::data

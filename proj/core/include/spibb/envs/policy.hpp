#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "spibb/common/types.hpp"

namespace spibb::envs {

/// A stochastic policy over a finite action set, evaluated on a batch of
/// observations (one per row). Implementations must be safe for concurrent
/// const calls.
class DiscretePolicy {
 public:
  virtual ~DiscretePolicy() = default;
  virtual int n_actions() const = 0;
  /// Returns an observations.rows() x n_actions() matrix of probabilities.
  virtual RowMatrixD probabilities(const RowMatrixF& observations) const = 0;
};

class UniformPolicy final : public DiscretePolicy {
 public:
  explicit UniformPolicy(int n_actions) : n_actions_(n_actions) {}
  int n_actions() const override { return n_actions_; }
  RowMatrixD probabilities(const RowMatrixF& observations) const override;

 private:
  int n_actions_;
};

/// Wraps a per-row function; handy for hand-written policies in tests and
/// tools.
class FunctionPolicy final : public DiscretePolicy {
 public:
  using RowFn = std::function<std::vector<double>(std::span<const float>)>;
  FunctionPolicy(int n_actions, RowFn fn) : n_actions_(n_actions), fn_(std::move(fn)) {}
  int n_actions() const override { return n_actions_; }
  RowMatrixD probabilities(const RowMatrixF& observations) const override;

 private:
  int n_actions_;
  RowFn fn_;
};

/// Throws std::invalid_argument if any row has a negative entry or a sum
/// farther than 1e-6 from one.
void check_distribution_rows(const RowMatrixD& probs);

}  // namespace spibb::envs

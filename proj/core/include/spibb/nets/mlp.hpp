#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spibb/common/types.hpp"

namespace spibb::nets {

/// Weights and biases of one dense layer. `weight` is in_dim x out_dim so
/// that a batch (rows) maps as x * weight + bias.
template <typename Scalar>
struct DenseLayer {
  RowMatrix<Scalar> weight;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> bias;
};

/// A full parameter set; also used for gradients and optimizer moments.
template <typename Scalar>
struct ParameterSet {
  std::vector<DenseLayer<Scalar>> layers;

  std::size_t size() const;
  ParameterSet zeros_like() const;
  bool all_finite() const;
  /// Flattened view order: layer by layer, weight (row-major) then bias.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> values);
};

/// Fully connected ReLU network with a linear output layer.
///
/// Hidden layers use ReLU with derivative 0 at 0. Initialization is
/// He-uniform (U(-sqrt(6/fan_in), sqrt(6/fan_in))) with zero biases, drawn in
/// layer order from a mt19937_64 seeded with `seed`.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = RowMatrix<Scalar>;

  Mlp() = default;
  Mlp(std::vector<int> widths, std::uint64_t seed);

  /// Network with every parameter set to zero.
  static Mlp zeros(std::vector<int> widths);

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int n_layers() const { return static_cast<int>(params_.layers.size()); }

  ParameterSet<Scalar>& parameters() { return params_; }
  const ParameterSet<Scalar>& parameters() const { return params_; }

  /// Stateless batched evaluation; safe for concurrent calls.
  Matrix predict(const Matrix& inputs) const;

  /// Evaluates and caches activations for a subsequent backward().
  const Matrix& forward(const Matrix& inputs);

  /// Gradients of sum(grad_outputs .* outputs) w.r.t. the parameters, for the
  /// batch cached by the last forward(). Throws std::logic_error without one.
  ParameterSet<Scalar> backward(const Matrix& grad_outputs) const;

  template <typename Other>
  Mlp<Other> cast() const;

 private:
  template <typename>
  friend class Mlp;

  void check_input(const Matrix& inputs) const;

  std::vector<int> widths_;
  ParameterSet<Scalar> params_;
  // forward() cache: inputs_[l] feeds layer l, outputs_ is the final output.
  std::vector<Matrix> inputs_;
  Matrix outputs_;
};

extern template struct ParameterSet<float>;
extern template struct ParameterSet<double>;
extern template class Mlp<float>;
extern template class Mlp<double>;

/// Standard layer-width list: input, `depth` hidden layers of `width`, output.
std::vector<int> mlp_widths(int input_dim, int width, int depth, int output_dim);

}  // namespace spibb::nets

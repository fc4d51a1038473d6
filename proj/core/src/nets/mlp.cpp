#include "spibb/nets/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace spibb::nets {

template <typename Scalar>
std::size_t ParameterSet<Scalar>::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

template <typename Scalar>
ParameterSet<Scalar> ParameterSet<Scalar>::zeros_like() const {
  ParameterSet out;
  out.layers.reserve(layers.size());
  for (const auto& l : layers) {
    out.layers.push_back({RowMatrix<Scalar>::Zero(l.weight.rows(), l.weight.cols()),
                          Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(l.bias.size())});
  }
  return out;
}

template <typename Scalar>
bool ParameterSet<Scalar>::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

template <typename Scalar>
std::vector<double> ParameterSet<Scalar>::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  for (const auto& l : layers) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) out.push_back(l.weight.data()[i]);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) out.push_back(l.bias(i));
  }
  return out;
}

template <typename Scalar>
void ParameterSet<Scalar>::unflatten(std::span<const double> values) {
  if (values.size() != size()) throw std::invalid_argument("parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = static_cast<Scalar>(values[k++]);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = static_cast<Scalar>(values[k++]);
  }
}

namespace {

void check_widths(const std::vector<int>& widths) {
  if (widths.size() < 2) throw std::invalid_argument("an MLP needs at least two widths");
  for (int w : widths) {
    if (w <= 0) throw std::invalid_argument("MLP widths must be positive");
  }
}

}  // namespace

template <typename Scalar>
Mlp<Scalar>::Mlp(std::vector<int> widths, std::uint64_t seed) : widths_(std::move(widths)) {
  check_widths(widths_);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    const double limit = std::sqrt(6.0 / in);
    std::uniform_real_distribution<double> init(-limit, limit);
    DenseLayer<Scalar> layer{Matrix(in, out), Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(out)};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = static_cast<Scalar>(init(rng));
    }
    params_.layers.push_back(std::move(layer));
  }
}

template <typename Scalar>
Mlp<Scalar> Mlp<Scalar>::zeros(std::vector<int> widths) {
  Mlp net;
  check_widths(widths);
  net.widths_ = std::move(widths);
  for (std::size_t l = 0; l + 1 < net.widths_.size(); ++l) {
    net.params_.layers.push_back({Matrix::Zero(net.widths_[l], net.widths_[l + 1]),
                                  Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(net.widths_[l + 1])});
  }
  return net;
}

template <typename Scalar>
void Mlp<Scalar>::check_input(const Matrix& inputs) const {
  if (widths_.empty()) throw std::logic_error("MLP is not initialized");
  if (inputs.cols() != widths_.front()) {
    throw std::invalid_argument("MLP input width " + std::to_string(inputs.cols()) +
                                " does not match first layer width " +
                                std::to_string(widths_.front()));
  }
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::predict(const Matrix& inputs) const {
  check_input(inputs);
  Matrix h = inputs;
  Matrix next;
  const int last = n_layers() - 1;
  for (int l = 0; l <= last; ++l) {
    const auto& layer = params_.layers[l];
    next.noalias() = h * layer.weight;
    next.rowwise() += layer.bias;
    if (l < last) next = next.cwiseMax(Scalar(0));
    h.swap(next);
  }
  return h;
}

template <typename Scalar>
const typename Mlp<Scalar>::Matrix& Mlp<Scalar>::forward(const Matrix& inputs) {
  check_input(inputs);
  const int n = n_layers();
  inputs_.resize(n);
  inputs_[0] = inputs;
  for (int l = 0; l < n; ++l) {
    const auto& layer = params_.layers[l];
    Matrix& dst = (l + 1 < n) ? inputs_[l + 1] : outputs_;
    dst.noalias() = inputs_[l] * layer.weight;
    dst.rowwise() += layer.bias;
    if (l + 1 < n) dst = dst.cwiseMax(Scalar(0));
  }
  return outputs_;
}

template <typename Scalar>
ParameterSet<Scalar> Mlp<Scalar>::backward(const Matrix& grad_outputs) const {
  if (inputs_.empty()) throw std::logic_error("backward() called before forward()");
  if (grad_outputs.rows() != outputs_.rows() || grad_outputs.cols() != outputs_.cols()) {
    throw std::invalid_argument("output gradient shape does not match cached forward pass");
  }
  ParameterSet<Scalar> grads;
  grads.layers.resize(params_.layers.size());
  Matrix g = grad_outputs;
  Matrix prev;
  for (int l = n_layers() - 1; l >= 0; --l) {
    auto& out = grads.layers[l];
    out.weight.noalias() = inputs_[l].transpose() * g;
    out.bias = g.colwise().sum();
    if (l > 0) {
      prev.noalias() = g * params_.layers[l].weight.transpose();
      // inputs_[l] is the ReLU output of layer l-1; zero exactly where the
      // pre-activation was <= 0, which gives the derivative-0-at-0 convention.
      g = (inputs_[l].array() > Scalar(0)).select(prev, Scalar(0));
    }
  }
  return grads;
}

template <typename Scalar>
template <typename Other>
Mlp<Other> Mlp<Scalar>::cast() const {
  Mlp<Other> out;
  out.widths_ = widths_;
  for (const auto& l : params_.layers) {
    out.params_.layers.push_back({l.weight.template cast<Other>(), l.bias.template cast<Other>()});
  }
  return out;
}

template struct ParameterSet<float>;
template struct ParameterSet<double>;
template class Mlp<float>;
template class Mlp<double>;
template Mlp<double> Mlp<float>::cast<double>() const;
template Mlp<float> Mlp<double>::cast<float>() const;
template Mlp<float> Mlp<float>::cast<float>() const;
template Mlp<double> Mlp<double>::cast<double>() const;

std::vector<int> mlp_widths(int input_dim, int width, int depth, int output_dim) {
  std::vector<int> w{input_dim};
  for (int i = 0; i < depth; ++i) w.push_back(width);
  w.push_back(output_dim);
  return w;
}

}  // namespace spibb::nets

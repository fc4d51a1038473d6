#include "spibb/nets/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "spibb/common/error.hpp"

namespace spibb::nets {
namespace {

template <typename Derived>
void check_finite(const Eigen::DenseBase<Derived>& g, std::size_t layer, const char* what) {
  if (g.allFinite()) return;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!std::isfinite(static_cast<double>(g.derived().data()[i]))) {
      throw NumericError("non-finite gradient in layer " + std::to_string(layer) + " " + what +
                         " at flat index " + std::to_string(i));
    }
  }
}

}  // namespace

template <typename Scalar>
void adam_step(ParameterSet<Scalar>& params, const ParameterSet<Scalar>& grads,
               AdamState<Scalar>& state) {
  if (grads.layers.size() != params.layers.size() ||
      state.first_moment.layers.size() != params.layers.size()) {
    throw std::invalid_argument("Adam: parameter/gradient/moment shapes differ");
  }
  for (std::size_t l = 0; l < grads.layers.size(); ++l) {
    check_finite(grads.layers[l].weight, l, "weight");
    check_finite(grads.layers[l].bias, l, "bias");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const auto b1 = static_cast<Scalar>(state.beta1);
  const auto b2 = static_cast<Scalar>(state.beta2);
  // lr * m_hat / (sqrt(v_hat) + eps) written with the corrections folded in.
  const auto step_size = static_cast<Scalar>(state.learning_rate / bc1);
  const auto inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
  const auto eps = static_cast<Scalar>(state.epsilon);

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    if (p.rows() != g.rows() || p.cols() != g.cols() || m.rows() != p.rows() || m.cols() != p.cols()) {
      throw std::invalid_argument("Adam: shape mismatch");
    }
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    p.array() -= step_size * m.array() / ((v.array().sqrt() * inv_sqrt_bc2) + eps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight, grads.layers[l].weight, state.first_moment.layers[l].weight,
           state.second_moment.layers[l].weight);
    update(params.layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias);
  }
}

template void adam_step<float>(ParameterSet<float>&, const ParameterSet<float>&, AdamState<float>&);
template void adam_step<double>(ParameterSet<double>&, const ParameterSet<double>&,
                                AdamState<double>&);

}  // namespace spibb::nets

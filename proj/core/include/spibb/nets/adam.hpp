#pragma once

#include <cstdint>

#include "spibb/nets/mlp.hpp"

namespace spibb::nets {

template <typename Scalar>
struct AdamState {
  ParameterSet<Scalar> first_moment;
  ParameterSet<Scalar> second_moment;
  std::int64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(const ParameterSet<Scalar>& like, double lr)
      : first_moment(like.zeros_like()), second_moment(like.zeros_like()), learning_rate(lr) {}
};

/// One bias-corrected Adam update of `params` in place. Throws NumericError
/// naming the offending layer and index if a gradient is NaN or infinite.
template <typename Scalar>
void adam_step(ParameterSet<Scalar>& params, const ParameterSet<Scalar>& grads,
               AdamState<Scalar>& state);

extern template void adam_step<float>(ParameterSet<float>&, const ParameterSet<float>&,
                                      AdamState<float>&);
extern template void adam_step<double>(ParameterSet<double>&, const ParameterSet<double>&,
                                       AdamState<double>&);

}  // namespace spibb::nets

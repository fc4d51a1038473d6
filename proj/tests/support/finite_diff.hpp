#pragma once

#include <functional>

#include "spibb/nets/mlp.hpp"

namespace spibb::testing {

struct GradientCheck {
  double relative_error = 0.0;  ///< ||g - g_fd|| / max(||g||, ||g_fd||)
  double max_abs_error = 0.0;
  std::size_t n_parameters = 0;
};

using LossOfNetwork = std::function<double(const nets::Mlp<double>&)>;

/// Compares `analytic` with central differences of `loss` taken parameter by
/// parameter with step h.
GradientCheck check_gradient(const nets::Mlp<double>& net, const LossOfNetwork& loss,
                             const nets::ParameterSet<double>& analytic, double h = 1e-6);

}  // namespace spibb::testing

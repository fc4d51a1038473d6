#pragma once

#include <span>
#include <vector>

#include "spibb/common/types.hpp"

namespace spibb::nets {

/// Huber loss with threshold kappa: 0.5 u^2 for |u| <= kappa, else
/// kappa (|u| - 0.5 kappa).
double huber(double u, double kappa = 1.0);

/// Mean over all entries of (output - target)^2; writes d loss / d output.
template <typename Scalar>
double mean_squared_error(const RowMatrix<Scalar>& output, const RowMatrix<Scalar>& target,
                          RowMatrix<Scalar>& grad);

extern template double mean_squared_error<float>(const RowMatrixF&, const RowMatrixF&, RowMatrixF&);
extern template double mean_squared_error<double>(const RowMatrixD&, const RowMatrixD&, RowMatrixD&);

/// Opt-in quantile regression head. Disabled by default; the critic is an
/// expected-value head unless a config enables this.
struct QuantileConfig {
  bool enabled = false;
  int n_quantiles = 201;
  double kappa = 1.0;
};

struct QuantileLoss {
  double loss = 0.0;
  std::vector<double> grad;  ///< d loss / d quantile output.
};

/// Quantile-Huber loss of QR-DQN. Quantile i sits at level (2i+1)/(2N); the
/// loss is sum_i mean_j |tau_i - 1{u_ij < 0}| huber(u_ij)/kappa with
/// u_ij = target_j - quantile_i. With a single quantile (level 0.5) this is
/// half the Huber loss of the residual. Throws std::logic_error when the
/// config is disabled.
QuantileLoss quantile_huber_loss(std::span<const double> quantiles,
                                 std::span<const double> targets,
                                 const QuantileConfig& config);

}  // namespace spibb::nets

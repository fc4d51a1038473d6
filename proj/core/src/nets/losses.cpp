#include "spibb/nets/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spibb::nets {

double huber(double u, double kappa) {
  const double a = std::abs(u);
  return a <= kappa ? 0.5 * u * u : kappa * (a - 0.5 * kappa);
}

template <typename Scalar>
double mean_squared_error(const RowMatrix<Scalar>& output, const RowMatrix<Scalar>& target,
                          RowMatrix<Scalar>& grad) {
  if (output.rows() != target.rows() || output.cols() != target.cols())
    throw std::invalid_argument("mean_squared_error: shape mismatch");
  const auto count = static_cast<Scalar>(output.size());
  grad = (output - target) * (Scalar(2) / count);
  return (output - target).template cast<double>().squaredNorm() / static_cast<double>(output.size());
}

template double mean_squared_error<float>(const RowMatrixF&, const RowMatrixF&, RowMatrixF&);
template double mean_squared_error<double>(const RowMatrixD&, const RowMatrixD&, RowMatrixD&);

QuantileLoss quantile_huber_loss(std::span<const double> quantiles,
                                 std::span<const double> targets,
                                 const QuantileConfig& config) {
  if (!config.enabled) throw std::logic_error("quantile head is disabled in this configuration");
  if (quantiles.empty() || targets.empty()) throw std::invalid_argument("empty quantile input");
  const auto n = static_cast<double>(quantiles.size());
  const auto m = static_cast<double>(targets.size());
  QuantileLoss out;
  out.grad.assign(quantiles.size(), 0.0);
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    const double tau = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n);
    for (double target : targets) {
      const double u = target - quantiles[i];
      const double weight = std::abs(tau - (u < 0.0 ? 1.0 : 0.0));
      out.loss += weight * huber(u, config.kappa) / config.kappa / m;
      // d huber(u)/du = clamp(u, -kappa, kappa); du/dq = -1.
      const double dh = std::max(-config.kappa, std::min(config.kappa, u));
      out.grad[i] -= weight * dh / config.kappa / m;
    }
  }
  return out;
}

}  // namespace spibb::nets

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "spibb/common/binary_io.hpp"
#include "spibb/common/types.hpp"
#include "spibb/nets/mlp.hpp"

namespace spibb::uncertainty {

struct EnsembleConfig {
  int ensemble_size = 5;     ///< B
  int output_dim = 64;       ///< M
  double noise_std = 0.1;    ///< sigma_epsilon of the regression noise targets
  double combo_alpha = 1.0;  ///< weight of the spread term inside the root
  int steps = 10000;
  double learning_rate = 1e-4;
  int batch_size = 256;
  int width = 256;
  int depth = 2;
  int prior_width = 256;
  int prior_depth = 1;
  std::uint64_t seed = 0;
};

/// Ensemble of B trained networks f_i, each anchored to a frozen random prior
/// network p_i. With squared residual norms r_i = ||f_i(s) - p_i(s)||^2:
///
///   mean  = sum_i r_i / (M B)
///   var   = (1/B) sum_i (mean - r_i / M)^2
///   u(s)  = sqrt(mean + combo_alpha * sqrt(var))
class EnsembleUncertainty {
 public:
  EnsembleUncertainty() = default;
  EnsembleUncertainty(std::vector<nets::Mlp<float>> members, std::vector<nets::Mlp<float>> priors,
                      double combo_alpha);

  int ensemble_size() const { return static_cast<int>(members_.size()); }
  int output_dim() const { return members_.front().output_dim(); }
  int input_dim() const { return members_.front().input_dim(); }
  double combo_alpha() const { return combo_alpha_; }

  const std::vector<nets::Mlp<float>>& members() const { return members_; }
  const std::vector<nets::Mlp<float>>& priors() const { return priors_; }
  std::vector<nets::Mlp<float>>& mutable_members() { return members_; }

  /// u(s) for each row.
  Eigen::VectorXd evaluate(const RowMatrixF& inputs) const;
  double evaluate(std::span<const float> input) const;

  /// Squared residual norms, inputs.rows() x B.
  Eigen::MatrixXd squared_residuals(const RowMatrixF& inputs) const;

  void write(io::BinaryWriter& out) const;
  static EnsembleUncertainty read(io::BinaryReader& in);

 private:
  std::vector<nets::Mlp<float>> members_;
  std::vector<nets::Mlp<float>> priors_;
  double combo_alpha_ = 1.0;
};

/// The estimator from per-member squared residual norms (length B) and the
/// output dimension M.
double uncertainty_from_residuals(std::span<const double> squared_norms, int output_dim,
                                  double combo_alpha);

/// Trains each member by squared error towards p_i(x_j) + eps_ij, where the
/// eps_ij ~ N(0, noise_std^2 I_M) are drawn once per (datapoint, member) and
/// kept fixed. Throws std::invalid_argument if B < 2 or no inputs.
EnsembleUncertainty fit_ensemble(const RowMatrixF& inputs, const EnsembleConfig& config);

}  // namespace spibb::uncertainty

#include "spibb/envs/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spibb::envs {

RowMatrixD UniformPolicy::probabilities(const RowMatrixF& observations) const {
  return RowMatrixD::Constant(observations.rows(), n_actions_, 1.0 / n_actions_);
}

RowMatrixD FunctionPolicy::probabilities(const RowMatrixF& observations) const {
  RowMatrixD out(observations.rows(), n_actions_);
  for (Eigen::Index i = 0; i < observations.rows(); ++i) {
    const auto row = fn_(std::span<const float>(observations.row(i).data(),
                                                static_cast<std::size_t>(observations.cols())));
    if (static_cast<int>(row.size()) != n_actions_) {
      throw std::invalid_argument("policy row has wrong length");
    }
    for (int a = 0; a < n_actions_; ++a) out(i, a) = row[a];
  }
  return out;
}

void check_distribution_rows(const RowMatrixD& probs) {
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index a = 0; a < probs.cols(); ++a) {
      const double p = probs(i, a);
      if (!(p >= 0.0)) {
        throw std::invalid_argument("policy produced invalid probability " +
                                    std::to_string(p) + " for action " + std::to_string(a));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::invalid_argument("policy probabilities sum to " + std::to_string(sum));
    }
  }
}

}  // namespace spibb::envs

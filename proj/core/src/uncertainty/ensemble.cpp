#include "spibb/uncertainty/ensemble.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "spibb/common/error.hpp"
#include "spibb/common/rng.hpp"
#include "spibb/data/batches.hpp"
#include "spibb/nets/adam.hpp"
#include "spibb/nets/checkpoint.hpp"
#include "spibb/nets/losses.hpp"

namespace spibb::uncertainty {

double uncertainty_from_residuals(std::span<const double> squared_norms, int output_dim,
                                  double combo_alpha) {
  const auto b = static_cast<double>(squared_norms.size());
  const auto m = static_cast<double>(output_dim);
  double mean = 0.0;
  for (double r : squared_norms) mean += r;
  mean /= m * b;
  double var = 0.0;
  for (double r : squared_norms) {
    const double d = mean - r / m;
    var += d * d;
  }
  var /= b;
  return std::sqrt(mean + combo_alpha * std::sqrt(var));
}

EnsembleUncertainty::EnsembleUncertainty(std::vector<nets::Mlp<float>> members,
                                         std::vector<nets::Mlp<float>> priors, double combo_alpha)
    : members_(std::move(members)), priors_(std::move(priors)), combo_alpha_(combo_alpha) {
  if (members_.size() < 2) throw std::invalid_argument("ensemble needs at least two members");
  if (members_.size() != priors_.size()) throw std::invalid_argument("one prior per member required");
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (members_[i].input_dim() != members_[0].input_dim() ||
        priors_[i].input_dim() != members_[0].input_dim() ||
        members_[i].output_dim() != members_[0].output_dim() ||
        priors_[i].output_dim() != members_[0].output_dim()) {
      throw std::invalid_argument("ensemble member shapes differ");
    }
  }
}

Eigen::MatrixXd EnsembleUncertainty::squared_residuals(const RowMatrixF& inputs) const {
  Eigen::MatrixXd out(inputs.rows(), ensemble_size());
  for (int i = 0; i < ensemble_size(); ++i) {
    const RowMatrixF diff = members_[i].predict(inputs) - priors_[i].predict(inputs);
    out.col(i) = diff.cast<double>().rowwise().squaredNorm();
  }
  return out;
}

Eigen::VectorXd EnsembleUncertainty::evaluate(const RowMatrixF& inputs) const {
  const Eigen::MatrixXd sq = squared_residuals(inputs);
  Eigen::VectorXd out(inputs.rows());
  std::vector<double> row(ensemble_size());
  for (Eigen::Index r = 0; r < sq.rows(); ++r) {
    for (int i = 0; i < ensemble_size(); ++i) row[i] = sq(r, i);
    out(r) = uncertainty_from_residuals(row, output_dim(), combo_alpha_);
  }
  return out;
}

double EnsembleUncertainty::evaluate(std::span<const float> input) const {
  const RowMatrixF m = Eigen::Map<const RowMatrixF>(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  return evaluate(m)(0);
}

void EnsembleUncertainty::write(io::BinaryWriter& out) const {
  out.put<double>(combo_alpha_);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(members_.size()));
  for (std::size_t i = 0; i < members_.size(); ++i) {
    nets::write_mlp(out, members_[i]);
    nets::write_mlp(out, priors_[i]);
  }
}

EnsembleUncertainty EnsembleUncertainty::read(io::BinaryReader& in) {
  const double alpha = in.get<double>();
  const auto b = in.get<std::uint32_t>();
  if (b < 2 || b > 1024) throw FormatError("implausible ensemble size");
  std::vector<nets::Mlp<float>> members, priors;
  for (std::uint32_t i = 0; i < b; ++i) {
    members.push_back(nets::read_mlp(in));
    priors.push_back(nets::read_mlp(in));
  }
  return {std::move(members), std::move(priors), alpha};
}

EnsembleUncertainty fit_ensemble(const RowMatrixF& inputs, const EnsembleConfig& config) {
  if (config.ensemble_size < 2) throw std::invalid_argument("ensemble size B must be at least 2");
  if (config.output_dim < 1) throw std::invalid_argument("output dimension M must be positive");
  if (inputs.rows() == 0) throw std::invalid_argument("cannot fit uncertainty on an empty dataset");
  const auto n = static_cast<std::size_t>(inputs.rows());
  const int dim = static_cast<int>(inputs.cols());
  const int m = config.output_dim;

  std::vector<nets::Mlp<float>> members, priors;
  for (int i = 0; i < config.ensemble_size; ++i) {
    priors.emplace_back(nets::mlp_widths(dim, config.prior_width, config.prior_depth, m),
                        derive_seed(config.seed, Stream::kPrior, i));
    members.emplace_back(nets::mlp_widths(dim, config.width, config.depth, m),
                         derive_seed(config.seed, Stream::kInit, i));
  }

  std::vector<int> idx;
  RowMatrixF target, grad;
  for (int i = 0; i < config.ensemble_size; ++i) {
    // Fixed regression targets p_i(x_j) + eps_ij for every datapoint.
    RowMatrixF targets = priors[i].predict(inputs);
    Rng noise_rng(derive_seed(config.seed, Stream::kNoise, i));
    std::normal_distribution<double> noise(0.0, config.noise_std);
    for (Eigen::Index k = 0; k < targets.size(); ++k) targets.data()[k] += static_cast<float>(noise(noise_rng));

    nets::Mlp<float>& f = members[i];
    nets::AdamState<float> adam(f.parameters(), config.learning_rate);
    data::BatchSampler sampler(n, config.batch_size, derive_seed(config.seed, Stream::kBatches, i));
    RowMatrixF batch(config.batch_size, dim);
    target.resize(config.batch_size, m);
    for (int step = 0; step < config.steps; ++step) {
      sampler.next(idx);
      for (int k = 0; k < config.batch_size; ++k) {
        batch.row(k) = inputs.row(idx[k]);
        target.row(k) = targets.row(idx[k]);
      }
      nets::mean_squared_error(f.forward(batch), target, grad);
      nets::adam_step(f.parameters(), f.backward(grad), adam);
    }
    if (!f.parameters().all_finite()) throw NumericError("ensemble member diverged");
  }
  return {std::move(members), std::move(priors), config.combo_alpha};
}

}  // namespace spibb::uncertainty

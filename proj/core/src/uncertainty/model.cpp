#include "spibb/uncertainty/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spibb/common/error.hpp"
#include "spibb/common/rng.hpp"
#include "spibb/data/batches.hpp"

namespace spibb::uncertainty {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kFactored: return "factored";
    case Variant::kBehaviorOnly: return "behavior_only";
    case Variant::kJointSa: return "joint_sa";
    case Variant::kTabularCounts: return "tabular_counts";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::kFactored, Variant::kBehaviorOnly, Variant::kJointSa, Variant::kTabularCounts}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown uncertainty variant '" + std::string(name) + "'");
}

CountUncertainty::CountUncertainty(std::shared_ptr<const behavior::BehaviorModel> counts, double c)
    : counts_(std::move(counts)), c_(c) {
  if (!counts_ || counts_->backend() != behavior::Backend::kTabular) {
    throw std::invalid_argument("count uncertainty needs a tabular behavior model");
  }
  if (!(c > 0.0)) throw std::invalid_argument("count constant must be positive");
}

double CountUncertainty::state(std::span<const float> observation) const {
  const double n = counts_->state_count(observation);
  return n > 0.0 ? c_ / std::sqrt(n) : kUnvisitedUncertainty;
}

double CountUncertainty::state_action(std::span<const float> observation, int action) const {
  const double n = counts_->count(observation, action);
  return n > 0.0 ? c_ / std::sqrt(n) : kUnvisitedUncertainty;
}

namespace {

void require_behavior(const std::shared_ptr<const behavior::BehaviorModel>& b) {
  if (!b) throw std::invalid_argument("uncertainty variant requires a behavior model");
}

std::span<const float> row_span(const RowMatrixF& m, Eigen::Index i) {
  return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

UncertaintyModel UncertaintyModel::factored(EnsembleUncertainty state,
                                            std::shared_ptr<const behavior::BehaviorModel> behavior) {
  require_behavior(behavior);
  UncertaintyModel m;
  m.variant_ = Variant::kFactored;
  m.n_actions_ = behavior->n_actions();
  m.ensemble_ = std::move(state);
  m.behavior_ = std::move(behavior);
  return m;
}

UncertaintyModel UncertaintyModel::factored(CountUncertainty state,
                                            std::shared_ptr<const behavior::BehaviorModel> behavior) {
  require_behavior(behavior);
  UncertaintyModel m;
  m.variant_ = Variant::kFactored;
  m.n_actions_ = behavior->n_actions();
  m.counts_ = std::move(state);
  m.behavior_ = std::move(behavior);
  return m;
}

UncertaintyModel UncertaintyModel::behavior_only(std::shared_ptr<const behavior::BehaviorModel> behavior) {
  require_behavior(behavior);
  UncertaintyModel m;
  m.variant_ = Variant::kBehaviorOnly;
  m.n_actions_ = behavior->n_actions();
  m.behavior_ = std::move(behavior);
  return m;
}

UncertaintyModel UncertaintyModel::joint(EnsembleUncertainty state_action, int n_actions) {
  UncertaintyModel m;
  m.variant_ = Variant::kJointSa;
  m.n_actions_ = n_actions;
  m.ensemble_ = std::move(state_action);
  return m;
}

UncertaintyModel UncertaintyModel::tabular_counts(CountUncertainty counts) {
  UncertaintyModel m;
  m.variant_ = Variant::kTabularCounts;
  m.n_actions_ = counts.counts().n_actions();
  m.counts_ = std::move(counts);
  return m;
}

void UncertaintyModel::set_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("scale must be positive and finite");
  scale_ = scale;
}

Eigen::VectorXd UncertaintyModel::state_values(const RowMatrixF& observations) const {
  if (ensemble_) return ensemble_->evaluate(observations);
  Eigen::VectorXd out(observations.rows());
  for (Eigen::Index i = 0; i < observations.rows(); ++i) out(i) = counts_->state(row_span(observations, i));
  return out;
}

RowMatrixD UncertaintyModel::evaluate(const RowMatrixF& observations) const {
  const Eigen::Index n = observations.rows();
  RowMatrixD out(n, n_actions_);
  switch (variant_) {
    case Variant::kFactored: {
      const Eigen::VectorXd us = state_values(observations);
      const RowMatrixD beta = behavior_->probabilities(observations);
      for (Eigen::Index i = 0; i < n; ++i)
        for (int a = 0; a < n_actions_; ++a)
          out(i, a) = us(i) / std::sqrt(std::max(beta(i, a), kBehaviorFloor));
      break;
    }
    case Variant::kBehaviorOnly: {
      const RowMatrixD beta = behavior_->probabilities(observations);
      for (Eigen::Index i = 0; i < n; ++i)
        for (int a = 0; a < n_actions_; ++a)
          out(i, a) = 1.0 / std::sqrt(std::max(beta(i, a), kBehaviorFloor));
      break;
    }
    case Variant::kJointSa: {
      std::vector<int> actions(static_cast<std::size_t>(n));
      for (int a = 0; a < n_actions_; ++a) {
        std::fill(actions.begin(), actions.end(), a);
        out.col(a) = ensemble_->evaluate(append_one_hot(observations, actions, n_actions_));
      }
      break;
    }
    case Variant::kTabularCounts:
      for (Eigen::Index i = 0; i < n; ++i)
        for (int a = 0; a < n_actions_; ++a) out(i, a) = counts_->state_action(row_span(observations, i), a);
      break;
  }
  return out;
}

std::vector<double> UncertaintyModel::evaluate(std::span<const float> observation) const {
  const RowMatrixF m = Eigen::Map<const RowMatrixF>(observation.data(), 1,
                                                    static_cast<Eigen::Index>(observation.size()));
  const RowMatrixD u = evaluate(m);
  return {u.data(), u.data() + u.size()};
}

double UncertaintyModel::evaluate(std::span<const float> observation, int action) const {
  return evaluate(observation).at(action);
}

std::optional<double> UncertaintyModel::state_uncertainty(std::span<const float> observation) const {
  if (variant_ != Variant::kFactored) return std::nullopt;
  if (ensemble_) return ensemble_->evaluate(observation);
  return counts_->state(observation);
}

std::uint32_t behavior_fingerprint(const behavior::BehaviorModel& model) {
  io::BinaryWriter w("");
  model.write(w);
  return io::stored_checksum(std::move(w).finish());
}

namespace {
constexpr std::string_view kUncertaintyMagic = "SPBUNC01";
}

std::string UncertaintyModel::serialize() const {
  io::BinaryWriter out(kUncertaintyMagic);
  out.put<std::uint8_t>(static_cast<std::uint8_t>(variant_));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(n_actions_));
  out.put<double>(scale_);
  out.put<std::uint8_t>(behavior_ ? 1 : 0);
  if (behavior_) out.put<std::uint32_t>(behavior_fingerprint(*behavior_));
  out.put<std::uint8_t>(ensemble_ ? 1 : 0);
  if (ensemble_) ensemble_->write(out);
  out.put<std::uint8_t>(counts_ ? 1 : 0);
  if (counts_) {
    out.put<double>(counts_->constant());
    counts_->counts().write(out);
  }
  return std::move(out).finish();
}

void UncertaintyModel::save(const std::filesystem::path& path) const {
  io::write_file_atomic(path, serialize());
}

UncertaintyModel UncertaintyModel::load(const std::filesystem::path& path,
                                        std::shared_ptr<const behavior::BehaviorModel> behavior) {
  return deserialize(io::read_file(path), std::move(behavior));
}

std::uint32_t uncertainty_fingerprint(const UncertaintyModel& model) {
  return io::stored_checksum(model.serialize());
}

UncertaintyModel UncertaintyModel::deserialize(std::string bytes,
                                               std::shared_ptr<const behavior::BehaviorModel> behavior) {
  io::BinaryReader in(std::move(bytes), kUncertaintyMagic);
  UncertaintyModel m;
  const auto variant = in.get<std::uint8_t>();
  if (variant > static_cast<std::uint8_t>(Variant::kTabularCounts)) throw FormatError("bad uncertainty variant");
  m.variant_ = static_cast<Variant>(variant);
  m.n_actions_ = static_cast<int>(in.get<std::uint32_t>());
  m.scale_ = in.get<double>();
  if (in.get<std::uint8_t>() != 0) {
    const auto fingerprint = in.get<std::uint32_t>();
    if (!behavior) throw std::invalid_argument("this uncertainty checkpoint needs its behavior model");
    if (behavior_fingerprint(*behavior) != fingerprint) {
      throw FormatError("behavior model does not match the one the uncertainty was built with");
    }
    m.behavior_ = std::move(behavior);
  }
  if (in.get<std::uint8_t>() != 0) m.ensemble_ = EnsembleUncertainty::read(in);
  if (in.get<std::uint8_t>() != 0) {
    const double c = in.get<double>();
    auto counts = std::make_shared<const behavior::BehaviorModel>(behavior::BehaviorModel::read(in));
    m.counts_.emplace(std::move(counts), c);
  }
  in.expect_end();
  return m;
}

RowMatrixF append_one_hot(const RowMatrixF& observations, std::span<const int> actions, int n_actions) {
  RowMatrixF out = RowMatrixF::Zero(observations.rows(), observations.cols() + n_actions);
  out.leftCols(observations.cols()) = observations;
  for (Eigen::Index i = 0; i < observations.rows(); ++i) out(i, observations.cols() + actions[i]) = 1.0f;
  return out;
}

EnsembleUncertainty fit_state_uncertainty(const data::TransitionDataset& dataset,
                                          const EnsembleConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("cannot fit uncertainty on an empty dataset");
  return fit_ensemble(dataset.all_states(), config);
}

EnsembleUncertainty fit_joint_uncertainty(const data::TransitionDataset& dataset,
                                          const EnsembleConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("cannot fit uncertainty on an empty dataset");
  std::vector<int> actions(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) actions[i] = dataset.action(i);
  return fit_ensemble(append_one_hot(dataset.all_states(), actions, dataset.env().n_actions), config);
}

double calibrate_scale(const UncertaintyModel& model, const data::TransitionDataset& dataset,
                       int batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("calibration batch must be non-empty");
  if (dataset.empty()) throw std::invalid_argument("cannot calibrate on an empty dataset");
  data::BatchSampler sampler(dataset.size(), batch_size, derive_seed(seed, Stream::kCalibration));
  const auto idx = sampler.next();
  const RowMatrixD u = model.evaluate(dataset.gather_states(idx));
  double sum = 0.0;
  for (int k = 0; k < batch_size; ++k) sum += u(k, dataset.action(idx[k]));
  return sum / batch_size;
}

}  // namespace spibb::uncertainty

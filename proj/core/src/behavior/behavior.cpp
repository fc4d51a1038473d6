#include "spibb/behavior/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spibb/common/error.hpp"
#include "spibb/common/rng.hpp"
#include "spibb/data/batches.hpp"
#include "spibb/nets/adam.hpp"
#include "spibb/nets/checkpoint.hpp"

namespace spibb::behavior {

std::string_view to_string(Backend b) { return b == Backend::kNeural ? "neural" : "tabular"; }

Backend parse_backend(std::string_view name) {
  if (name == "neural") return Backend::kNeural;
  if (name == "tabular") return Backend::kTabular;
  throw std::invalid_argument("unknown behavior backend '" + std::string(name) + "'");
}

namespace {

template <typename Row>
void softmax_row(const Row& logits, double* out, int n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a) mx = std::max(mx, static_cast<double>(logits(a)));
  double z = 0.0;
  for (int a = 0; a < n; ++a) {
    out[a] = std::exp(static_cast<double>(logits(a)) - mx);
    z += out[a];
  }
  for (int a = 0; a < n; ++a) out[a] /= z;
}

}  // namespace

template <typename Scalar>
double softmax_cross_entropy(const RowMatrix<Scalar>& logits, std::span<const int> actions,
                             RowMatrix<Scalar>& grad) {
  const auto n = logits.rows();
  const int k = static_cast<int>(logits.cols());
  if (static_cast<std::size_t>(n) != actions.size()) throw std::invalid_argument("batch size mismatch");
  grad.resize(n, k);
  std::vector<double> p(k);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    softmax_row(logits.row(i), p.data(), k);
    loss -= std::log(std::max(p[actions[i]], 1e-300));
    for (int a = 0; a < k; ++a) {
      grad(i, a) = static_cast<Scalar>((p[a] - (a == actions[i] ? 1.0 : 0.0)) / static_cast<double>(n));
    }
  }
  return loss / static_cast<double>(n);
}

template double softmax_cross_entropy<float>(const RowMatrixF&, std::span<const int>, RowMatrixF&);
template double softmax_cross_entropy<double>(const RowMatrixD&, std::span<const int>, RowMatrixD&);

BehaviorModel BehaviorModel::neural(nets::Mlp<float> logits_net) {
  BehaviorModel m;
  m.backend_ = Backend::kNeural;
  m.n_actions_ = logits_net.output_dim();
  m.net_ = std::move(logits_net);
  return m;
}

std::string BehaviorModel::key(std::span<const float> observation) {
  return {reinterpret_cast<const char*>(observation.data()), observation.size_bytes()};
}

const std::vector<double>* BehaviorModel::lookup(std::span<const float> observation) const {
  const auto it = counts_.find(key(observation));
  return it == counts_.end() ? nullptr : &it->second;
}

BehaviorModel BehaviorModel::count_table(const data::TransitionDataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("cannot fit behavior on an empty dataset");
  BehaviorModel m;
  m.backend_ = Backend::kTabular;
  m.n_actions_ = dataset.env().n_actions;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto& row = m.counts_[key(dataset.state(i))];
    if (row.empty()) row.assign(m.n_actions_, 0.0);
    row[dataset.action(i)] += 1.0;
  }
  return m;
}

RowMatrixD BehaviorModel::probabilities(const RowMatrixF& observations) const {
  RowMatrixD out(observations.rows(), n_actions_);
  if (backend_ == Backend::kNeural) {
    const RowMatrixF logits = net_.predict(observations);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) softmax_row(logits.row(i), &out(i, 0), n_actions_);
    return out;
  }
  for (Eigen::Index i = 0; i < observations.rows(); ++i) {
    const std::span<const float> obs(observations.row(i).data(), static_cast<std::size_t>(observations.cols()));
    const auto* row = lookup(obs);
    if (row == nullptr) {
      out.row(i).setConstant(1.0 / n_actions_);
      continue;
    }
    double n = 0.0;
    for (double c : *row) n += c;
    for (int a = 0; a < n_actions_; ++a) out(i, a) = (*row)[a] / n;
  }
  return out;
}

std::vector<double> BehaviorModel::probabilities(std::span<const float> observation) const {
  RowMatrixF m = Eigen::Map<const RowMatrixF>(observation.data(), 1,
                                              static_cast<Eigen::Index>(observation.size()));
  const RowMatrixD p = probabilities(m);
  return {p.data(), p.data() + p.size()};
}

bool BehaviorModel::unseen(std::span<const float> observation) const {
  return backend_ == Backend::kTabular && lookup(observation) == nullptr;
}

double BehaviorModel::state_count(std::span<const float> observation) const {
  if (backend_ != Backend::kTabular) throw std::logic_error("counts exist only for the tabular backend");
  const auto* row = lookup(observation);
  if (row == nullptr) return 0.0;
  double n = 0.0;
  for (double c : *row) n += c;
  return n;
}

double BehaviorModel::count(std::span<const float> observation, int action) const {
  if (backend_ != Backend::kTabular) throw std::logic_error("counts exist only for the tabular backend");
  const auto* row = lookup(observation);
  return row == nullptr ? 0.0 : (*row).at(action);
}

void BehaviorModel::write(io::BinaryWriter& out) const {
  out.put<std::uint8_t>(static_cast<std::uint8_t>(backend_));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(n_actions_));
  if (backend_ == Backend::kNeural) {
    nets::write_mlp(out, net_);
    return;
  }
  // Sorted keys keep the file byte-identical across runs.
  std::vector<const std::pair<const std::string, std::vector<double>>*> entries;
  for (const auto& e : counts_) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });
  out.put<std::uint64_t>(entries.size());
  for (const auto* e : entries) {
    out.put_string(e->first);
    out.put_span<double>(e->second);
  }
}

BehaviorModel BehaviorModel::read(io::BinaryReader& in) {
  BehaviorModel m;
  const auto backend = in.get<std::uint8_t>();
  if (backend > 1) throw FormatError("bad behavior backend tag");
  m.backend_ = static_cast<Backend>(backend);
  m.n_actions_ = static_cast<int>(in.get<std::uint32_t>());
  if (m.n_actions_ < 1 || m.n_actions_ > 65535) throw FormatError("bad action count");
  if (m.backend_ == Backend::kNeural) {
    m.net_ = nets::read_mlp(in);
    if (m.net_.output_dim() != m.n_actions_) throw FormatError("behavior head width mismatch");
    return m;
  }
  const auto n = in.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string k = in.get_string();
    std::vector<double> row(m.n_actions_);
    in.get_span<double>(row);
    m.counts_.emplace(std::move(k), std::move(row));
  }
  return m;
}

namespace {
constexpr std::string_view kBehaviorMagic = "SPBBHV01";
}

void BehaviorModel::save(const std::filesystem::path& path) const {
  io::BinaryWriter out(kBehaviorMagic);
  write(out);
  io::write_file_atomic(path, std::move(out).finish());
}

BehaviorModel BehaviorModel::load(const std::filesystem::path& path) {
  io::BinaryReader in(io::read_file(path), kBehaviorMagic);
  auto m = read(in);
  in.expect_end();
  return m;
}

BehaviorModel fit_behavior(const data::TransitionDataset& dataset, const BehaviorConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("cannot fit behavior on an empty dataset");
  if (config.backend == Backend::kTabular) return BehaviorModel::count_table(dataset);

  const auto& env = dataset.env();
  nets::Mlp<float> net(nets::mlp_widths(env.obs_dim, config.width, config.depth, env.n_actions),
                       derive_seed(config.seed, Stream::kInit));
  nets::AdamState<float> adam(net.parameters(), config.learning_rate);
  data::BatchSampler sampler(dataset.size(), config.batch_size,
                             derive_seed(config.seed, Stream::kBatches));
  std::vector<int> idx, actions(config.batch_size);
  RowMatrixF grad;
  for (int step = 0; step < config.steps; ++step) {
    sampler.next(idx);
    for (int k = 0; k < config.batch_size; ++k) actions[k] = dataset.action(idx[k]);
    const RowMatrixF& logits = net.forward(dataset.gather_states(idx));
    softmax_cross_entropy(logits, actions, grad);
    nets::adam_step(net.parameters(), net.backward(grad), adam);
  }
  if (!net.parameters().all_finite()) throw NumericError("behavior network diverged");
  return BehaviorModel::neural(std::move(net));
}

double cross_entropy(const BehaviorModel& model, const data::TransitionDataset& dataset) {
  const RowMatrixD p = model.probabilities(dataset.all_states());
  double loss = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    loss -= std::log(std::max(p(static_cast<Eigen::Index>(i), dataset.action(i)), 1e-300));
  }
  return loss / static_cast<double>(dataset.size());
}

RowMatrixD BehaviorCloningPolicy::probabilities(const RowMatrixF& observations) const {
  RowMatrixD p = model_.probabilities(observations);
  if (mode_ == Mode::kSample) return p;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < p.cols(); ++a) {
      if (p(i, a) > p(i, best)) best = a;
    }
    p.row(i).setZero();
    p(i, best) = 1.0;
  }
  return p;
}

}  // namespace spibb::behavior

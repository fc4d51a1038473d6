#include "spibb/offrl/agent.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "spibb/common/error.hpp"
#include "spibb/common/rng.hpp"
#include "spibb/data/batches.hpp"
#include "spibb/envs/tabular.hpp"
#include "spibb/nets/adam.hpp"
#include "spibb/nets/checkpoint.hpp"
#include "spibb/offrl/operators.hpp"

namespace spibb::offrl {

std::string_view to_string(ImprovementKind k) {
  switch (k) {
    case ImprovementKind::kGreedy: return "greedy";
    case ImprovementKind::kBcq: return "bcq";
    case ImprovementKind::kSpibb: return "spibb";
    case ImprovementKind::kBc: return "bc";
  }
  return "unknown";
}

std::string_view to_string(EvalStepKind k) {
  switch (k) {
    case EvalStepKind::kPlain: return "plain";
    case EvalStepKind::kPessimism: return "pessimism";
    case EvalStepKind::kCql: return "cql";
  }
  return "unknown";
}

std::string_view to_string(QBackend b) { return b == QBackend::kNeural ? "neural" : "tabular"; }

ImprovementKind parse_improvement(std::string_view name) {
  for (auto k : {ImprovementKind::kGreedy, ImprovementKind::kBcq, ImprovementKind::kSpibb, ImprovementKind::kBc})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown improvement operator '" + std::string(name) + "'");
}

EvalStepKind parse_eval_step(std::string_view name) {
  for (auto k : {EvalStepKind::kPlain, EvalStepKind::kPessimism, EvalStepKind::kCql})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown evaluation step '" + std::string(name) + "'");
}

QBackend parse_q_backend(std::string_view name) {
  if (name == "neural") return QBackend::kNeural;
  if (name == "tabular") return QBackend::kTabular;
  throw std::invalid_argument("unknown Q backend '" + std::string(name) + "'");
}

bool AgentConfig::needs_behavior() const { return improvement != ImprovementKind::kGreedy; }

bool AgentConfig::needs_uncertainty() const {
  return improvement == ImprovementKind::kSpibb || eval_step == EvalStepKind::kPessimism;
}

void AgentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("agent config: " + msg); };
  if (!(tau >= 0.0 && tau <= 1.0)) fail("tau must lie in [0, 1]");
  if (!(epsilon_train >= 0.0) || !(epsilon_eval >= 0.0)) fail("epsilon must be nonnegative");
  if (!(alpha >= 0.0)) fail("alpha must be nonnegative");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (steps < 0) fail("steps must be nonnegative");
  if (target_period < 1) fail("target_period must be positive");
  if (batch_size < 1) fail("batch_size must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (width < 1 || depth < 0) fail("bad network shape");
  if (!(u_ceiling > 0.0)) fail("u_ceiling must be positive");
  if (improvement == ImprovementKind::kSpibb && !generalized && epsilon_eval != epsilon_train) {
    fail("standard SPIBB requires epsilon_eval == epsilon_train (set generalized for separate values)");
  }
  if (backend == QBackend::kTabular && eval_step == EvalStepKind::kCql) {
    fail("the tabular backend supports plain and pessimism evaluation steps only");
  }
}

QFunction QFunction::neural(nets::Mlp<float> net) {
  QFunction q;
  q.backend_ = QBackend::kNeural;
  q.net_ = std::move(net);
  return q;
}

QFunction QFunction::tabular(Eigen::MatrixXd table) {
  QFunction q;
  q.backend_ = QBackend::kTabular;
  q.table_ = std::move(table);
  return q;
}

int QFunction::n_actions() const {
  return backend_ == QBackend::kNeural ? net_.output_dim() : static_cast<int>(table_.cols());
}

RowMatrixD QFunction::values(const RowMatrixF& observations) const {
  if (backend_ == QBackend::kNeural) return net_.predict(observations).cast<double>();
  if (observations.cols() != table_.rows()) throw std::invalid_argument("observation is not a one-hot state of this table");
  RowMatrixD out(observations.rows(), table_.cols());
  for (Eigen::Index i = 0; i < observations.rows(); ++i) {
    const int s = envs::state_index({observations.row(i).data(), static_cast<std::size_t>(observations.cols())});
    out.row(i) = table_.row(s);
  }
  return out;
}

void QFunction::write(io::BinaryWriter& out) const {
  out.put<std::uint8_t>(static_cast<std::uint8_t>(backend_));
  if (backend_ == QBackend::kNeural) {
    nets::write_mlp(out, net_);
    return;
  }
  out.put<std::uint32_t>(static_cast<std::uint32_t>(table_.rows()));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(table_.cols()));
  for (Eigen::Index s = 0; s < table_.rows(); ++s)
    for (Eigen::Index a = 0; a < table_.cols(); ++a) out.put<double>(table_(s, a));
}

QFunction QFunction::read(io::BinaryReader& in) {
  const auto backend = in.get<std::uint8_t>();
  if (backend == static_cast<std::uint8_t>(QBackend::kNeural)) return neural(nets::read_mlp(in));
  if (backend != static_cast<std::uint8_t>(QBackend::kTabular)) throw FormatError("bad Q backend");
  const auto rows = in.get<std::uint32_t>();
  const auto cols = in.get<std::uint32_t>();
  if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > 4096) throw FormatError("bad Q table shape");
  Eigen::MatrixXd table(rows, cols);
  for (std::uint32_t s = 0; s < rows; ++s)
    for (std::uint32_t a = 0; a < cols; ++a) table(s, a) = in.get<double>();
  return tabular(std::move(table));
}

RowMatrixD improve_rows(ImprovementKind kind, const RowMatrixD& q, const RowMatrixD& beta, const RowMatrixD& u,
                        double tau, double epsilon, double u_ceiling) {
  if (kind == ImprovementKind::kBc) return beta;
  const auto cols = static_cast<std::size_t>(q.cols());
  auto row = [cols](const RowMatrixD& m, Eigen::Index i) { return std::span<const double>(m.row(i).data(), cols); };
  RowMatrixD out(q.rows(), q.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    std::vector<double> pi;
    switch (kind) {
      case ImprovementKind::kGreedy: pi = greedy_improve(row(q, i)); break;
      case ImprovementKind::kBcq: pi = bcq_improve(row(q, i), row(beta, i), tau); break;
      case ImprovementKind::kSpibb:
        pi = spibb_improve(row(q, i), row(beta, i), row(u, i), epsilon, u_ceiling);
        break;
      case ImprovementKind::kBc: break;
    }
    out.row(i) = Eigen::Map<const Eigen::RowVectorXd>(pi.data(), q.cols());
  }
  return out;
}

namespace {

// Inputs that do not change across iterations, computed once per run.
struct FixedInputs {
  RowMatrixF states;
  RowMatrixF next_states;
  RowMatrixD beta_next;
  RowMatrixD u_next;
  std::vector<double> u_taken;  // u(s_j, a_j), pessimism only
};

class TargetBuilder {
 public:
  TargetBuilder(const data::TransitionDataset& d, const AgentConfig& c, const FixedInputs& in, double scale)
      : d_(d), c_(c), in_(in), epsilon_(c.epsilon_train * scale),
        pessimism_(c.eval_step == EvalStepKind::kPessimism ? c.alpha * scale : 0.0) {}

  std::vector<double> operator()(const RowMatrixD& q_next) const {
    const RowMatrixD pi = improve_rows(c_.improvement, q_next, in_.beta_next, in_.u_next, c_.tau, epsilon_,
                                       c_.u_ceiling);
    const auto cols = static_cast<std::size_t>(q_next.cols());
    std::vector<double> y(d_.size());
    for (std::size_t j = 0; j < d_.size(); ++j) {
      const auto i = static_cast<Eigen::Index>(j);
      const std::span<const double> p(pi.row(i).data(), cols), qn(q_next.row(i).data(), cols);
      y[j] = c_.eval_step == EvalStepKind::kPessimism
                 ? pessimism_target(d_.reward(j), d_.done(j), c_.gamma, p, qn, pessimism_, in_.u_taken[j])
                 : plain_target(d_.reward(j), d_.done(j), c_.gamma, p, qn);
    }
    return y;
  }

 private:
  const data::TransitionDataset& d_;
  const AgentConfig& c_;
  const FixedInputs& in_;
  double epsilon_;
  double pessimism_;
};

int iteration_count(const AgentConfig& c) { return (c.steps + c.target_period - 1) / c.target_period; }

void train_neural(const data::TransitionDataset& d, const AgentConfig& c, const FixedInputs& in,
                  const TargetBuilder& targets, TrainedAgent& agent) {
  const int n_actions = d.env().n_actions;
  nets::Mlp<float> online(nets::mlp_widths(d.obs_dim(), c.width, c.depth, n_actions), derive_seed(c.seed, Stream::kInit));
  nets::AdamState<float> adam(online.parameters(), c.learning_rate);
  data::BatchSampler sampler(d.size(), c.batch_size, derive_seed(c.seed, Stream::kBatches));
  const double cql_alpha = c.eval_step == EvalStepKind::kCql ? c.alpha : 0.0;

  RowMatrixF xb(c.batch_size, d.obs_dim());
  RowMatrixF grad;
  std::vector<int> idx, ab(c.batch_size);
  std::vector<double> yb(c.batch_size), y;
  double loss_sum = 0.0;
  int loss_count = 0;
  for (int step = 0; step < c.steps; ++step) {
    if (step % c.target_period == 0) {
      if (loss_count > 0) agent.loss_trace.push_back(loss_sum / loss_count);
      loss_sum = 0.0;
      loss_count = 0;
      // The online weights at this step are the target network Q^(i).
      y = targets(online.predict(in.next_states).cast<double>());
      ++agent.iterations;
    }
    sampler.next(idx);
    for (int k = 0; k < c.batch_size; ++k) {
      xb.row(k) = in.states.row(idx[k]);
      ab[k] = d.action(idx[k]);
      yb[k] = y[idx[k]];
    }
    const RowMatrixF& q = online.forward(xb);
    loss_sum += q_loss(q, ab, yb, cql_alpha, grad);
    ++loss_count;
    nets::adam_step(online.parameters(), online.backward(grad), adam);
  }
  if (loss_count > 0) agent.loss_trace.push_back(loss_sum / loss_count);
  agent.q = QFunction::neural(std::move(online));
}

void train_tabular(const data::TransitionDataset& d, const AgentConfig& c, const TargetBuilder& targets, TrainedAgent& agent) {
  const int n_states = d.obs_dim();
  const int n_actions = d.env().n_actions;
  std::vector<int> s(d.size()), s_next(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) {
    s[j] = envs::state_index(d.state(j));
    s_next[j] = envs::state_index(d.next_state(j));
  }
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(n_states, n_actions);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_states, n_actions);
  for (std::size_t j = 0; j < d.size(); ++j) counts(s[j], d.action(j)) += 1.0;

  RowMatrixD q_next(d.size(), n_actions);
  for (int it = 0; it < iteration_count(c); ++it) {
    for (std::size_t j = 0; j < d.size(); ++j) q_next.row(static_cast<Eigen::Index>(j)) = table.row(s_next[j]);
    const std::vector<double> y = targets(q_next);
    // Exact minimizer of the squared regression: the mean target per (s,a).
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_states, n_actions);
    for (std::size_t j = 0; j < d.size(); ++j) sums(s[j], d.action(j)) += y[j];
    for (int x = 0; x < n_states; ++x)
      for (int a = 0; a < n_actions; ++a)
        if (counts(x, a) > 0.0) table(x, a) = sums(x, a) / counts(x, a);
    double residual = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double r = table(s[j], d.action(j)) - y[j];
      residual += r * r;
    }
    agent.loss_trace.push_back(residual / static_cast<double>(d.size()));
    ++agent.iterations;
  }
  agent.q = QFunction::tabular(std::move(table));
}

}  // namespace

TrainedAgent train(const data::TransitionDataset& dataset, const AgentConfig& config,
                   std::shared_ptr<const behavior::BehaviorModel> behavior,
                   std::shared_ptr<const uncertainty::UncertaintyModel> uncertainty) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  if (config.needs_behavior() && !behavior) {
    throw ConfigError(std::string(to_string(config.improvement)) + " improvement requires a behavior model");
  }
  if (config.needs_uncertainty() && !uncertainty) {
    throw ConfigError(config.improvement == ImprovementKind::kSpibb ? "spibb improvement requires an uncertainty model"
                                                                    : "pessimism requires an uncertainty model");
  }

  TrainedAgent agent;
  agent.config = config;
  agent.env = dataset.env();
  if (config.needs_behavior()) agent.behavior_fingerprint = uncertainty::behavior_fingerprint(*behavior);
  if (config.needs_uncertainty()) {
    agent.uncertainty_fingerprint = uncertainty::uncertainty_fingerprint(*uncertainty);
    agent.scale = uncertainty->scale();
  }

  FixedInputs in;
  in.states = dataset.all_states();
  in.next_states = dataset.all_next_states();
  if (config.needs_behavior()) in.beta_next = behavior->probabilities(in.next_states);
  if (config.improvement == ImprovementKind::kSpibb) in.u_next = uncertainty->evaluate(in.next_states);
  if (config.eval_step == EvalStepKind::kPessimism) {
    const RowMatrixD u = uncertainty->evaluate(in.states);
    in.u_taken.resize(dataset.size());
    for (std::size_t j = 0; j < dataset.size(); ++j) in.u_taken[j] = u(static_cast<Eigen::Index>(j), dataset.action(j));
  }
  const TargetBuilder targets(dataset, config, in, agent.scale);

  if (config.backend == QBackend::kTabular) {
    train_tabular(dataset, config, targets, agent);
  } else {
    train_neural(dataset, config, in, targets, agent);
  }
  return agent;
}

namespace {

class AgentPolicy final : public envs::DiscretePolicy {
 public:
  AgentPolicy(QFunction q, ImprovementKind kind, double tau, double epsilon, double u_ceiling,
              std::shared_ptr<const behavior::BehaviorModel> behavior,
              std::shared_ptr<const uncertainty::UncertaintyModel> uncertainty)
      : q_(std::move(q)), kind_(kind), tau_(tau), epsilon_(epsilon), u_ceiling_(u_ceiling),
        behavior_(std::move(behavior)), uncertainty_(std::move(uncertainty)) {}

  int n_actions() const override { return q_.n_actions(); }

  RowMatrixD probabilities(const RowMatrixF& observations) const override {
    if (kind_ == ImprovementKind::kBc) return behavior_->probabilities(observations);
    const RowMatrixD q = q_.values(observations);
    const RowMatrixD beta = behavior_ && kind_ != ImprovementKind::kGreedy ? behavior_->probabilities(observations)
                                                                          : RowMatrixD();
    const RowMatrixD u = kind_ == ImprovementKind::kSpibb ? uncertainty_->evaluate(observations) : RowMatrixD();
    return improve_rows(kind_, q, beta, u, tau_, epsilon_, u_ceiling_);
  }

 private:
  QFunction q_;
  ImprovementKind kind_;
  double tau_;
  double epsilon_;
  double u_ceiling_;
  std::shared_ptr<const behavior::BehaviorModel> behavior_;
  std::shared_ptr<const uncertainty::UncertaintyModel> uncertainty_;
};

}  // namespace

std::unique_ptr<envs::DiscretePolicy> make_eval_policy(
    const TrainedAgent& agent, std::shared_ptr<const behavior::BehaviorModel> behavior,
    std::shared_ptr<const uncertainty::UncertaintyModel> uncertainty) {
  const AgentConfig& c = agent.config;
  const bool wants_behavior = c.improvement != ImprovementKind::kGreedy;
  const bool wants_uncertainty = c.improvement == ImprovementKind::kSpibb;
  if (wants_behavior) {
    if (!behavior) throw std::invalid_argument("evaluation policy needs the behavior model");
    if (agent.behavior_fingerprint && *agent.behavior_fingerprint != uncertainty::behavior_fingerprint(*behavior)) {
      throw std::invalid_argument("behavior model differs from the one used in training");
    }
  }
  if (wants_uncertainty) {
    if (!uncertainty) throw std::invalid_argument("evaluation policy needs the uncertainty model");
    if (agent.uncertainty_fingerprint &&
        *agent.uncertainty_fingerprint != uncertainty::uncertainty_fingerprint(*uncertainty)) {
      throw std::invalid_argument("uncertainty model differs from the one used in training");
    }
  }
  const double epsilon = (c.generalized ? c.epsilon_eval : c.epsilon_train) * agent.scale;
  return std::make_unique<AgentPolicy>(agent.q, c.improvement, c.tau, epsilon, c.u_ceiling,
                                       wants_behavior ? std::move(behavior) : nullptr,
                                       wants_uncertainty ? std::move(uncertainty) : nullptr);
}

namespace {
constexpr std::string_view kAgentMagic = "SPBQAG01";
constexpr std::uint32_t kAgentVersion = 1;

void put_optional(io::BinaryWriter& out, const std::optional<std::uint32_t>& v) {
  out.put<std::uint8_t>(v ? 1 : 0);
  out.put<std::uint32_t>(v.value_or(0));
}

std::optional<std::uint32_t> get_optional(io::BinaryReader& in) {
  const bool present = in.get<std::uint8_t>() != 0;
  const auto v = in.get<std::uint32_t>();
  return present ? std::optional<std::uint32_t>(v) : std::nullopt;
}
}  // namespace

void TrainedAgent::save(const std::filesystem::path& path) const {
  io::BinaryWriter out(kAgentMagic);
  out.put<std::uint32_t>(kAgentVersion);
  const AgentConfig& c = config;
  out.put<std::uint8_t>(static_cast<std::uint8_t>(c.improvement));
  out.put<double>(c.tau);
  out.put<double>(c.epsilon_train);
  out.put<double>(c.epsilon_eval);
  out.put<std::uint8_t>(c.generalized ? 1 : 0);
  out.put<std::uint8_t>(static_cast<std::uint8_t>(c.eval_step));
  out.put<double>(c.alpha);
  out.put<double>(c.gamma);
  out.put<std::int32_t>(c.steps);
  out.put<std::int32_t>(c.target_period);
  out.put<std::int32_t>(c.batch_size);
  out.put<double>(c.learning_rate);
  out.put<std::int32_t>(c.width);
  out.put<std::int32_t>(c.depth);
  out.put<std::uint8_t>(static_cast<std::uint8_t>(c.backend));
  out.put<double>(c.u_ceiling);
  out.put<std::uint64_t>(c.seed);
  envs::write_env_spec(out, env);
  out.put<double>(scale);
  put_optional(out, behavior_fingerprint);
  put_optional(out, uncertainty_fingerprint);
  out.put<std::int32_t>(iterations);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(loss_trace.size()));
  out.put_span<double>(loss_trace);
  q.write(out);
  io::write_file_atomic(path, std::move(out).finish());
}

TrainedAgent TrainedAgent::load(const std::filesystem::path& path) {
  io::BinaryReader in(io::read_file(path), kAgentMagic);
  if (in.get<std::uint32_t>() != kAgentVersion) throw FormatError("unsupported trained-agent version");
  TrainedAgent a;
  AgentConfig& c = a.config;
  const auto improvement = in.get<std::uint8_t>();
  if (improvement > static_cast<std::uint8_t>(ImprovementKind::kBc)) throw FormatError("bad improvement kind");
  c.improvement = static_cast<ImprovementKind>(improvement);
  c.tau = in.get<double>();
  c.epsilon_train = in.get<double>();
  c.epsilon_eval = in.get<double>();
  c.generalized = in.get<std::uint8_t>() != 0;
  const auto eval_step = in.get<std::uint8_t>();
  if (eval_step > static_cast<std::uint8_t>(EvalStepKind::kCql)) throw FormatError("bad evaluation step");
  c.eval_step = static_cast<EvalStepKind>(eval_step);
  c.alpha = in.get<double>();
  c.gamma = in.get<double>();
  c.steps = in.get<std::int32_t>();
  c.target_period = in.get<std::int32_t>();
  c.batch_size = in.get<std::int32_t>();
  c.learning_rate = in.get<double>();
  c.width = in.get<std::int32_t>();
  c.depth = in.get<std::int32_t>();
  const auto backend = in.get<std::uint8_t>();
  if (backend > static_cast<std::uint8_t>(QBackend::kTabular)) throw FormatError("bad Q backend");
  c.backend = static_cast<QBackend>(backend);
  c.u_ceiling = in.get<double>();
  c.seed = in.get<std::uint64_t>();
  a.env = envs::read_env_spec(in);
  a.scale = in.get<double>();
  a.behavior_fingerprint = get_optional(in);
  a.uncertainty_fingerprint = get_optional(in);
  a.iterations = in.get<std::int32_t>();
  const auto trace = in.get<std::uint32_t>();
  if (trace > (1u << 24)) throw FormatError("implausible loss trace length");
  a.loss_trace.resize(trace);
  in.get_span<double>(a.loss_trace);
  a.q = QFunction::read(in);
  in.expect_end();
  return a;
}

}  // namespace spibb::offrl

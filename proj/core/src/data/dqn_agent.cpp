#include "spibb/data/dqn_agent.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "spibb/common/binary_io.hpp"
#include "spibb/common/error.hpp"
#include "spibb/common/rng.hpp"
#include "spibb/nets/adam.hpp"
#include "spibb/nets/checkpoint.hpp"

namespace spibb::data {

int expert_episodes(envs::EnvName env) {
  return env == envs::EnvName::kCatch ? 1000 : 500;
}

namespace {

int greedy_action(const float* q, int n) {
  return static_cast<int>(std::max_element(q, q + n) - q);
}

/// Fixed-capacity FIFO of transitions stored flat.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int obs_dim)
      : capacity_(capacity), dim_(obs_dim),
        s_(static_cast<std::size_t>(capacity) * obs_dim),
        s2_(static_cast<std::size_t>(capacity) * obs_dim),
        a_(capacity), r_(capacity), d_(capacity) {}

  void add(const Observation& s, int a, float r, const Observation& s2, bool done) {
    std::copy(s.begin(), s.end(), s_.begin() + static_cast<std::ptrdiff_t>(head_) * dim_);
    std::copy(s2.begin(), s2.end(), s2_.begin() + static_cast<std::ptrdiff_t>(head_) * dim_);
    a_[head_] = a;
    r_[head_] = r;
    d_[head_] = done ? 1.0f : 0.0f;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }

  int size() const { return size_; }

  void gather(const std::vector<int>& idx, RowMatrixF& s, RowMatrixF& s2, std::vector<int>& a,
              std::vector<float>& r, std::vector<float>& d) const {
    const auto n = static_cast<Eigen::Index>(idx.size());
    s.resize(n, dim_);
    s2.resize(n, dim_);
    a.resize(idx.size());
    r.resize(idx.size());
    d.resize(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t off = static_cast<std::size_t>(idx[k]) * dim_;
      std::copy_n(s_.data() + off, dim_, s.data() + k * dim_);
      std::copy_n(s2_.data() + off, dim_, s2.data() + k * dim_);
      a[k] = a_[idx[k]];
      r[k] = r_[idx[k]];
      d[k] = d_[idx[k]];
    }
  }

 private:
  int capacity_;
  int dim_;
  std::vector<float> s_, s2_;
  std::vector<int> a_;
  std::vector<float> r_, d_;
  int head_ = 0;
  int size_ = 0;
};

std::string describe_schedule(const DqnConfig& c, int episodes) {
  std::ostringstream ss;
  ss << "epsilon-greedy " << c.epsilon_start << "->" << c.epsilon_end << " linear over first "
     << static_cast<int>(c.anneal_fraction * episodes) << " of " << episodes
     << " episodes; lr " << c.learning_rate << ", batch " << c.batch_size << ", target period "
     << c.target_update_period << ", width " << c.width << "x" << c.depth;
  return ss.str();
}

}  // namespace

AgentCheckpoint train_behavior_agent(const envs::Environment& env_proto, int n_episodes,
                                     std::uint64_t seed, const DqnConfig& config) {
  if (n_episodes < 0) throw std::invalid_argument("n_episodes must be nonnegative");
  const envs::EnvSpec& spec = env_proto.spec();
  AgentCheckpoint out;
  out.env = spec;
  out.training_episodes = n_episodes;
  out.seed = seed;
  out.schedule = describe_schedule(config, n_episodes);
  out.q = nets::Mlp<float>(nets::mlp_widths(spec.obs_dim, config.width, config.depth, spec.n_actions),
                           derive_seed(seed, Stream::kInit));
  if (n_episodes == 0) return out;

  nets::Mlp<float>& q = out.q;
  nets::Mlp<float> target = q;
  nets::AdamState<float> adam(q.parameters(), config.learning_rate);
  ReplayBuffer replay(config.replay_capacity, spec.obs_dim);
  Rng act_rng(derive_seed(seed, Stream::kPolicy));
  Rng batch_rng(derive_seed(seed, Stream::kBatches));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> random_action(0, spec.n_actions - 1);
  auto env = env_proto.clone();

  RowMatrixF s, s2, obs_row(1, spec.obs_dim);
  std::vector<int> a, idx(config.batch_size);
  std::vector<float> r, d;
  RowMatrixF grad(config.batch_size, spec.n_actions);
  const double anneal_episodes = std::max(1.0, config.anneal_fraction * n_episodes);
  long long total_steps = 0;

  for (int ep = 0; ep < n_episodes; ++ep) {
    const double frac = std::min(1.0, ep / anneal_episodes);
    const double epsilon = config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac;
    Observation obs = env->reset(derive_seed(seed, Stream::kEnvironment, ep));
    bool done = false;
    while (!done) {
      int action;
      if (unif(act_rng) < epsilon) {
        action = random_action(act_rng);
      } else {
        std::copy(obs.begin(), obs.end(), obs_row.data());
        const RowMatrixF qv = q.predict(obs_row);
        action = greedy_action(qv.data(), spec.n_actions);
      }
      auto step = env->step(action);
      replay.add(obs, action, static_cast<float>(step.reward), step.observation, step.done);
      obs = std::move(step.observation);
      done = step.done;
      ++total_steps;

      if (total_steps >= config.warmup_steps && replay.size() >= config.batch_size) {
        std::uniform_int_distribution<int> pick(0, replay.size() - 1);
        for (auto& i : idx) i = pick(batch_rng);
        replay.gather(idx, s, s2, a, r, d);
        const RowMatrixF next_q = target.predict(s2);
        const RowMatrixF& qs = q.forward(s);
        grad.setZero();
        for (int k = 0; k < config.batch_size; ++k) {
          const float best = next_q.row(k).maxCoeff();
          const float y = r[k] + static_cast<float>(config.discount) * (1.0f - d[k]) * best;
          const float u = qs(k, a[k]) - y;
          // Huber(1) derivative, averaged over the batch.
          grad(k, a[k]) = std::clamp(u, -1.0f, 1.0f) / static_cast<float>(config.batch_size);
        }
        nets::adam_step(q.parameters(), q.backward(grad), adam);
      }
      if (total_steps % config.target_update_period == 0) target = q;
    }
  }
  if (!q.parameters().all_finite()) throw NumericError("DQN parameters diverged");
  return out;
}

namespace {
constexpr std::string_view kAgentMagic = "SPBAGNT1";
constexpr std::uint32_t kAgentVersion = 1;
}  // namespace

void save_agent(const AgentCheckpoint& agent, const std::filesystem::path& path) {
  io::BinaryWriter out(kAgentMagic);
  out.put<std::uint32_t>(kAgentVersion);
  envs::write_env_spec(out, agent.env);
  out.put<std::int32_t>(agent.training_episodes);
  out.put<std::uint64_t>(agent.seed);
  out.put_string(agent.schedule);
  nets::write_mlp(out, agent.q);
  io::write_file_atomic(path, std::move(out).finish());
}

AgentCheckpoint load_agent(const std::filesystem::path& path) {
  io::BinaryReader in(io::read_file(path), kAgentMagic);
  if (in.get<std::uint32_t>() != kAgentVersion) throw FormatError("unsupported agent checkpoint version");
  AgentCheckpoint a;
  a.env = envs::read_env_spec(in);
  a.training_episodes = in.get<std::int32_t>();
  a.seed = in.get<std::uint64_t>();
  a.schedule = in.get_string();
  a.q = nets::read_mlp(in);
  in.expect_end();
  return a;
}

QNetworkPolicy::QNetworkPolicy(nets::Mlp<float> q, double epsilon)
    : q_(std::move(q)), epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in [0,1]");
}

RowMatrixD QNetworkPolicy::probabilities(const RowMatrixF& observations) const {
  const RowMatrixF qv = q_.predict(observations);
  const int n = n_actions();
  RowMatrixD out = RowMatrixD::Constant(qv.rows(), n, epsilon_ / n);
  for (Eigen::Index i = 0; i < qv.rows(); ++i) {
    out(i, greedy_action(qv.row(i).data(), n)) += 1.0 - epsilon_;
  }
  return out;
}

}  // namespace spibb::data

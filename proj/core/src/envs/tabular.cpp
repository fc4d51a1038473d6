#include "spibb/envs/tabular.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spibb::envs {
namespace {

void require_distribution(std::span<const double> p, const std::string& what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument(what + " has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument(what + " sums to " + std::to_string(sum));
  }
}

}  // namespace

void TabularMDP::validate() const {
  if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("empty MDP");
  const auto sa = static_cast<std::size_t>(n_states) * n_actions;
  if (transition.size() != sa * n_states || reward.size() != sa ||
      initial_distribution.size() != static_cast<std::size_t>(n_states)) {
    throw std::invalid_argument("MDP tensor shapes are inconsistent");
  }
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw std::invalid_argument("discount must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < sa; ++i) {
    require_distribution(std::span(transition).subspan(i * n_states, n_states),
                         "P(.|s,a) row " + std::to_string(i));
  }
  require_distribution(initial_distribution, "initial distribution");
}

PolicyValue exact_policy_value(const TabularMDP& mdp, const PolicyTable& policy) {
  mdp.validate();
  const int S = mdp.n_states, A = mdp.n_actions, n = S * A;
  if (policy.rows() != S || policy.cols() != A) {
    throw std::invalid_argument("policy table shape does not match MDP");
  }
  // (I - gamma * P_pi) q = r with P_pi[(s,a),(s',a')] = P(s'|s,a) pi(a'|s').
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs(n);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const int row = s * A + a;
      rhs(row) = mdp.r(s, a);
      for (int s2 = 0; s2 < S; ++s2) {
        const double p = mdp.p(s, a, s2);
        if (p == 0.0) continue;
        for (int a2 = 0; a2 < A; ++a2) {
          system(row, s2 * A + a2) -= mdp.discount * p * policy(s2, a2);
        }
      }
    }
  }
  const Eigen::VectorXd q = system.partialPivLu().solve(rhs);

  PolicyValue out;
  out.q.resize(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) out.q(s, a) = q(s * A + a);
  for (int s = 0; s < S; ++s) {
    out.expected_return += mdp.initial_distribution[s] * policy.row(s).dot(out.q.row(s));
  }
  return out;
}

TabularMDP chain_mdp() {
  TabularMDP m;
  m.n_states = 5;
  m.n_actions = 2;
  m.discount = 0.9;
  m.transition.assign(5 * 2 * 5, 0.0);
  m.reward.assign(5 * 2, 0.0);
  for (int s = 0; s < 5; ++s) {
    const int left = std::max(s - 1, 0);
    const int right = std::min(s + 1, 4);
    m.transition[(s * 2 + 0) * 5 + left] = 1.0;
    m.transition[(s * 2 + 1) * 5 + right] = 1.0;
  }
  m.reward[4 * 2 + 1] = 1.0;
  m.reward[0 * 2 + 0] = 0.2;
  m.initial_distribution = {0.4, 0.3, 0.15, 0.1, 0.05};
  return m;
}

TabularMDP gridworld_mdp() {
  constexpr int kSide = 4;
  constexpr int kGoal = kSide * kSide - 1;
  TabularMDP m;
  m.n_states = kSide * kSide;
  m.n_actions = 4;
  m.discount = 0.9;
  m.transition.assign(static_cast<std::size_t>(m.n_states) * 4 * m.n_states, 0.0);
  m.reward.assign(static_cast<std::size_t>(m.n_states) * 4, 0.0);
  constexpr int dr[4] = {-1, 0, 1, 0};
  constexpr int dc[4] = {0, 1, 0, -1};
  for (int s = 0; s < m.n_states; ++s) {
    for (int a = 0; a < 4; ++a) {
      const int r = std::clamp(s / kSide + dr[a], 0, kSide - 1);
      const int c = std::clamp(s % kSide + dc[a], 0, kSide - 1);
      const int next = r * kSide + c;
      m.transition[(static_cast<std::size_t>(s) * 4 + a) * m.n_states + next] = 1.0;
      if (next == kGoal) m.reward[s * 4 + a] = 1.0;
    }
  }
  m.initial_distribution.assign(m.n_states, 0.0);
  m.initial_distribution[0] = 1.0;
  return m;
}

TabularEnvironment::TabularEnvironment(TabularMDP mdp, int horizon) : mdp_(std::move(mdp)) {
  mdp_.validate();
  if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
  const auto [lo, hi] = std::minmax_element(mdp_.reward.begin(), mdp_.reward.end());
  spec_ = {EnvName::kTabular, mdp_.n_states, mdp_.n_actions, horizon, *lo, *hi};
}

std::unique_ptr<Environment> TabularEnvironment::clone() const {
  return std::make_unique<TabularEnvironment>(*this);
}

Observation TabularEnvironment::do_reset() {
  std::discrete_distribution<int> init(mdp_.initial_distribution.begin(),
                                       mdp_.initial_distribution.end());
  state_ = init(rng_);
  return observe();
}

std::pair<double, bool> TabularEnvironment::do_step(int action) {
  const double reward = mdp_.r(state_, action);
  const auto offset = (static_cast<std::size_t>(state_) * mdp_.n_actions + action) * mdp_.n_states;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng_);
  double acc = 0.0;
  int next = mdp_.n_states - 1;
  for (int s2 = 0; s2 < mdp_.n_states; ++s2) {
    acc += mdp_.transition[offset + s2];
    if (u < acc) {
      next = s2;
      break;
    }
  }
  state_ = next;
  return {reward, false};
}

Observation TabularEnvironment::observe() const { return one_hot(state_, mdp_.n_states); }

Observation one_hot(int index, int size) {
  Observation v(size, 0.0f);
  v.at(index) = 1.0f;
  return v;
}

int state_index(std::span<const float> observation) {
  return static_cast<int>(std::max_element(observation.begin(), observation.end()) -
                          observation.begin());
}

}  // namespace spibb::envs

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spibb/envs/cartpole.hpp"
#include "spibb/envs/catch.hpp"
#include "spibb/envs/rollout.hpp"
#include "spibb/envs/tabular.hpp"
#include "support/oracles.hpp"

namespace spibb::envs {
namespace {

PolicyTable random_policy(int n_states, int n_actions, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  PolicyTable p(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) p(s, a) = unit(rng);
    p.row(s) /= p.row(s).sum();
  }
  return p;
}

TEST(Tabular, ExactPolicyValueMatchesIterativeEvaluation) {
  std::mt19937_64 rng(7);
  for (const TabularMDP& mdp : {chain_mdp(), gridworld_mdp()}) {
    for (int trial = 0; trial < 5; ++trial) {
      const PolicyTable pi = random_policy(mdp.n_states, mdp.n_actions, rng);
      const auto exact = exact_policy_value(mdp, pi);
      const Eigen::MatrixXd iterative = testing::iterative_policy_evaluation(mdp, pi);
      EXPECT_LT((exact.q - iterative).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(Tabular, ExpectedReturnWeightsInitialStates) {
  const TabularMDP mdp = chain_mdp();
  PolicyTable right = PolicyTable::Zero(mdp.n_states, mdp.n_actions);
  right.col(1).setOnes();
  const auto v = exact_policy_value(mdp, right);
  double j = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) j += mdp.initial_distribution[s] * v.q(s, 1);
  EXPECT_NEAR(v.expected_return, j, 1e-12);
}

TEST(Tabular, ValidateRejectsNonStochasticRows) {
  TabularMDP mdp = chain_mdp();
  EXPECT_NO_THROW(mdp.validate());
  mdp.transition[0] += 0.1;
  EXPECT_THROW(mdp.validate(), std::invalid_argument);
  mdp = chain_mdp();
  mdp.discount = 1.0;
  EXPECT_THROW(mdp.validate(), std::invalid_argument);
}

TEST(Tabular, GridworldOptimalPolicyReachesGoal) {
  const TabularMDP mdp = gridworld_mdp();
  Eigen::MatrixXd r(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) r(s, a) = mdp.r(s, a);
  const Eigen::MatrixXd q = testing::value_iteration(mdp, r);
  int s = 0;
  for (int t = 0; t < 6; ++t) {
    int a;
    q.row(s).maxCoeff(&a);
    for (int next = 0; next < mdp.n_states; ++next)
      if (mdp.p(s, a, next) == 1.0) s = next;
  }
  EXPECT_EQ(s, 15);
}

TEST(Tabular, EnvironmentEmitsOneHotStates) {
  TabularEnvironment env(chain_mdp(), 7);
  Observation obs = env.reset(3);
  EXPECT_EQ(obs.size(), 5u);
  EXPECT_EQ(state_index(obs), env.state());
  int steps = 0;
  while (!env.done()) {
    const auto r = env.step(1);
    EXPECT_EQ(state_index(r.observation), env.state());
    ++steps;
  }
  EXPECT_EQ(steps, 7);
}

TEST(Cartpole, SameSeedSameTrajectory) {
  Cartpole a, b;
  EXPECT_EQ(a.reset(11), b.reset(11));
  std::mt19937_64 rng(1);
  while (!a.done()) {
    const int action = static_cast<int>(rng() % 3);
    const auto ra = a.step(action);
    const auto rb = b.step(action);
    EXPECT_EQ(ra.observation, rb.observation);
    EXPECT_EQ(ra.reward, rb.reward);
    EXPECT_EQ(ra.done, rb.done);
  }
}

TEST(Cartpole, ObservationEncodesAngleOnTheCircle) {
  Cartpole env;
  Observation obs = env.reset(2);
  ASSERT_EQ(obs.size(), 5u);
  while (!env.done()) {
    obs = env.step(2).observation;
    EXPECT_NEAR(obs[2] * obs[2] + obs[3] * obs[3], 1.0, 1e-5);
  }
}

TEST(Cartpole, FailingStepPaysZeroAndEnds) {
  Cartpole env;
  env.reset(5);
  double total = 0.0;
  StepResult last;
  while (!env.done()) {
    last = env.step(2);
    total += last.reward;
  }
  EXPECT_EQ(last.reward, 0.0);
  EXPECT_LT(env.time_step(), 1000);
  EXPECT_EQ(total, env.time_step() - 1);
}

TEST(Environment, RejectsInvalidUse) {
  Cartpole env;
  EXPECT_THROW(env.step(0), std::logic_error);
  env.reset(0);
  EXPECT_THROW(env.step(3), std::out_of_range);
  EXPECT_THROW(env.step(-1), std::out_of_range);
}

TEST(Catch, TrackingPolicyAlwaysCatches) {
  Catch env;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    env.reset(seed);
    double total = 0.0;
    int length = 0;
    while (!env.done()) {
      const int diff = env.ball_column() - env.paddle_column();
      total += env.step(diff > 0 ? 2 : diff < 0 ? 0 : 1).reward;
      ++length;
    }
    EXPECT_EQ(total, 1.0);
    EXPECT_EQ(length, 10);
  }
}

TEST(Catch, MovingAwayMisses) {
  Catch env;
  env.reset(4);
  const int away = env.ball_column() >= Catch::kColumns / 2 ? 0 : 2;
  double total = 0.0;
  while (!env.done()) total += env.step(away).reward;
  EXPECT_EQ(total, -1.0);
}

TEST(Rollout, EpisodesDoNotDependOnBatchSize) {
  Cartpole env;
  UniformPolicy uniform(3);
  const auto small = rollout(env, uniform, 99, 3);
  const auto large = rollout(env, uniform, 99, 8);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(small.episodes[k].episode_return, large.episodes[k].episode_return);
}

TEST(Rollout, RecordsTransitionsWhenAsked) {
  Catch env;
  UniformPolicy uniform(3);
  const auto r = rollout(env, uniform, 1, 4, true);
  ASSERT_EQ(r.episodes.size(), 4u);
  for (const auto& ep : r.episodes) {
    ASSERT_EQ(static_cast<int>(ep.transitions.size()), ep.length);
    EXPECT_TRUE(ep.transitions.back().done);
    double sum = 0.0;
    for (const auto& t : ep.transitions) sum += t.r;
    EXPECT_EQ(sum, ep.episode_return);
  }
  EXPECT_NEAR(r.mean_return(), (r.returns()[0] + r.returns()[1] + r.returns()[2] + r.returns()[3]) / 4, 1e-12);
}

TEST(Policy, DistributionCheckRejectsBadRows) {
  RowMatrixD p(1, 2);
  p << 0.5, 0.6;
  EXPECT_THROW(check_distribution_rows(p), std::invalid_argument);
  p << 1.1, -0.1;
  EXPECT_THROW(check_distribution_rows(p), std::invalid_argument);
  p << 0.25, 0.75;
  EXPECT_NO_THROW(check_distribution_rows(p));
}

}  // namespace
}  // namespace spibb::envs

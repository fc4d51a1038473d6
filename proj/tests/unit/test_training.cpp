#include <gtest/gtest.h>

#include <memory>

#include "spibb/behavior/behavior.hpp"
#include "spibb/data/generate.hpp"
#include "spibb/envs/tabular.hpp"
#include "spibb/offrl/agent.hpp"
#include "support/oracles.hpp"
#include "support/scenarios.hpp"

namespace spibb::offrl {
namespace {

RowMatrixF one_hot_states(int n) { return RowMatrixF::Identity(n, n); }

Eigen::MatrixXd behavior_table(const behavior::BehaviorModel& model, int n_states) {
  const RowMatrixD p = model.probabilities(one_hot_states(n_states));
  return Eigen::MatrixXd(p);
}

struct ChainFixture {
  envs::TabularMDP mdp = envs::chain_mdp();
  data::TransitionDataset dataset;
  std::shared_ptr<const behavior::BehaviorModel> behavior;

  ChainFixture() {
    Eigen::MatrixXd beta(5, 2);
    beta << 0.6, 0.4, 0.3, 0.7, 0.5, 0.5, 0.2, 0.8, 0.4, 0.6;
    dataset = data::sample_tabular_dataset(mdp, beta, 5000, 3);
    behavior = std::make_shared<const behavior::BehaviorModel>(behavior::BehaviorModel::count_table(dataset));
  }
};

TEST(Training, TabularGreedyReachesOptimalQ) {
  ChainFixture f;
  AgentConfig c;
  c.backend = QBackend::kTabular;
  c.gamma = f.mdp.discount;
  c.steps = 400;
  c.target_period = 1;
  const TrainedAgent agent = train(f.dataset, c, nullptr, nullptr);
  const Eigen::MatrixXd reward = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(
      f.mdp.reward.data(), f.mdp.n_states, f.mdp.n_actions);
  const Eigen::MatrixXd q_star = testing::value_iteration(f.mdp, reward);
  EXPECT_LE((agent.q.table() - q_star).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Training, NeuralOneStepRecoversBehaviorValue) {
  ChainFixture f;
  auto u = std::make_shared<uncertainty::UncertaintyModel>(
      uncertainty::UncertaintyModel::tabular_counts(uncertainty::CountUncertainty(f.behavior, 1.0)));
  AgentConfig c;
  c.improvement = ImprovementKind::kSpibb;
  c.epsilon_train = 0.0;
  c.gamma = f.mdp.discount;
  c.steps = 20000;
  c.target_period = 200;
  c.learning_rate = 1e-3;
  c.width = 64;
  c.batch_size = 64;
  const TrainedAgent agent = train(f.dataset, c, f.behavior, u);
  const Eigen::MatrixXd q_beta = envs::exact_policy_value(f.mdp, behavior_table(*f.behavior, 5)).q;
  const Eigen::MatrixXd q_hat = agent.q.values(one_hot_states(5));
  EXPECT_LE((q_hat - q_beta).cwiseAbs().maxCoeff(), 0.05) << q_hat << "\n\n" << q_beta;
}

TEST(Training, StrongPessimismMinimizesUncertainty) {
  const auto r = testing::minimal_uncertainty_gridworld(5);
  EXPECT_TRUE(r.gap_condition);
  EXPECT_EQ(r.mismatches(), 0);
}

}  // namespace
}  // namespace spibb::offrl

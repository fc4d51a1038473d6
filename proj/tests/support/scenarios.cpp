#include "support/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "spibb/behavior/behavior.hpp"
#include "spibb/data/generate.hpp"
#include "spibb/envs/tabular.hpp"
#include "spibb/offrl/agent.hpp"
#include "spibb/uncertainty/model.hpp"
#include "support/oracles.hpp"

namespace spibb::testing {
namespace {

using behavior::BehaviorModel;
using uncertainty::CountUncertainty;
using uncertainty::UncertaintyModel;

RowMatrixF one_hot_states(int n) { return RowMatrixF::Identity(n, n); }

Eigen::MatrixXd reward_matrix(const envs::TabularMDP& mdp) {
  Eigen::MatrixXd r(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) r(s, a) = mdp.r(s, a);
  return r;
}

Eigen::VectorXi greedy(const Eigen::MatrixXd& q) {
  Eigen::VectorXi out(q.rows());
  for (Eigen::Index s = 0; s < q.rows(); ++s) q.row(s).maxCoeff(&out(s));
  return out;
}

double min_gap(const Eigen::MatrixXd& q) {
  double gap = INFINITY;
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    std::vector<double> row(static_cast<std::size_t>(q.cols()));
    for (Eigen::Index a = 0; a < q.cols(); ++a) row[a] = q(s, a);
    std::sort(row.rbegin(), row.rend());
    gap = std::min(gap, row[0] - row[1]);
  }
  return gap;
}

envs::PolicyTable random_behavior(int n_states, int n_actions, std::mt19937_64& rng, double floor) {
  std::uniform_real_distribution<double> unit(floor, 1.0);
  envs::PolicyTable p(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) p(s, a) = unit(rng);
    p.row(s) /= p.row(s).sum();
  }
  return p;
}

}  // namespace

double chain_one_step_recovery_error(std::uint64_t seed) {
  const envs::TabularMDP mdp = envs::chain_mdp();
  Eigen::MatrixXd beta(5, 2);
  beta << 0.6, 0.4, 0.3, 0.7, 0.5, 0.5, 0.2, 0.8, 0.4, 0.6;
  const auto dataset = data::sample_tabular_dataset(mdp, beta, 5000, seed);
  auto counts = std::make_shared<const BehaviorModel>(BehaviorModel::count_table(dataset));
  auto u = std::make_shared<const UncertaintyModel>(UncertaintyModel::tabular_counts(CountUncertainty(counts, 1.0)));

  offrl::AgentConfig c;
  c.improvement = offrl::ImprovementKind::kSpibb;
  c.epsilon_train = 0.0;
  c.gamma = mdp.discount;
  c.steps = 20000;
  c.target_period = 200;
  c.learning_rate = 1e-3;
  c.width = 64;
  c.batch_size = 64;
  c.seed = seed;
  const auto agent = offrl::train(dataset, c, counts, u);

  const Eigen::MatrixXd beta_hat(counts->probabilities(one_hot_states(5)));
  const Eigen::MatrixXd q_beta = envs::exact_policy_value(mdp, beta_hat).q;
  const Eigen::MatrixXd q_hat(agent.q.values(one_hot_states(5)));
  return (q_hat - q_beta).cwiseAbs().maxCoeff();
}

TabularIdentity tabular_identity(std::uint64_t seed, double c) {
  const envs::TabularMDP mdp = envs::gridworld_mdp();
  std::mt19937_64 rng(seed);
  const auto beta = random_behavior(mdp.n_states, mdp.n_actions, rng, 0.0);
  // A few states are rarely visited so that some pairs stay uncounted.
  std::vector<double> visit(mdp.n_states, 1.0);
  visit[5] = visit[10] = 0.01;
  const double mass = 14.02;
  for (double& v : visit) v /= mass;
  const auto dataset = data::sample_tabular_dataset(mdp, beta, 3000, seed, visit);
  auto counts = std::make_shared<const BehaviorModel>(BehaviorModel::count_table(dataset));
  const auto model = UncertaintyModel::factored(CountUncertainty(counts, c), counts);

  TabularIdentity out;
  const RowMatrixF states = one_hot_states(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    const std::span<const float> obs(states.row(s).data(), static_cast<std::size_t>(mdp.n_states));
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double n = counts->count(obs, a);
      if (n <= 0.0) continue;
      const double expected = c / std::sqrt(n);
      const double got = model.evaluate(obs, a);
      out.max_relative_error = std::max(out.max_relative_error, std::abs(got - expected) / expected);
      ++out.counted_pairs;
    }
  }
  return out;
}

EstimatorFidelity ensemble_estimator_fidelity(std::uint64_t seed, int n_ensembles) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> members_dist(2, 8), output_dist(1, 32);
  std::uniform_real_distribution<double> alpha_dist(0.0, 3.0);
  std::normal_distribution<float> normal(0.f, 2.f);
  EstimatorFidelity out;
  constexpr int kInput = 6;
  for (int e = 0; e < n_ensembles; ++e) {
    const int b = members_dist(rng), m = output_dist(rng);
    const double alpha = alpha_dist(rng);
    std::vector<nets::Mlp<float>> members, priors;
    for (int i = 0; i < b; ++i) {
      members.emplace_back(nets::mlp_widths(kInput, 24, 2, m), rng());
      priors.emplace_back(nets::mlp_widths(kInput, 24, 1, m), rng());
    }
    const uncertainty::EnsembleUncertainty ensemble(members, priors, alpha);
    RowMatrixF x(16, kInput);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = normal(rng);
    const Eigen::VectorXd fast = ensemble.evaluate(x);
    std::vector<RowMatrixF> f, p;
    for (int i = 0; i < b; ++i) {
      f.push_back(members[i].predict(x));
      p.push_back(priors[i].predict(x));
    }
    for (Eigen::Index row = 0; row < x.rows(); ++row) {
      std::vector<std::vector<double>> residuals(b, std::vector<double>(m));
      for (int i = 0; i < b; ++i)
        for (int k = 0; k < m; ++k) residuals[i][k] = static_cast<double>(f[i](row, k) - p[i](row, k));
      const double brute = brute_force_state_uncertainty(residuals, alpha);
      out.max_relative_error = std::max(out.max_relative_error, std::abs(fast(row) - brute) / brute);
      ++out.evaluations;
    }
  }
  return out;
}

TwoCluster two_cluster_uncertainty(std::uint64_t seed) {
  constexpr int kDim = 4;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.f, 0.5f);
  auto cluster = [&](float center, int n) {
    RowMatrixF x(n, kDim);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = center + noise(rng);
    return x;
  };
  const RowMatrixF train = cluster(2.f, 2000);
  uncertainty::EnsembleConfig config;
  config.ensemble_size = 5;
  config.output_dim = 16;
  config.width = 64;
  config.prior_width = 64;
  config.steps = 3000;
  config.learning_rate = 1e-3;
  config.batch_size = 64;
  config.seed = seed;
  const auto ensemble = uncertainty::fit_ensemble(train, config);
  return {ensemble.evaluate(cluster(2.f, 500)).mean(), ensemble.evaluate(cluster(-2.f, 500)).mean()};
}

MinimalUncertainty minimal_uncertainty_gridworld(std::uint64_t seed) {
  const envs::TabularMDP mdp = envs::gridworld_mdp();
  std::mt19937_64 rng(seed);
  // Skewed behavior: per state the actions get probabilities 0.55, 0.3,
  // 0.1, 0.05 in a random order, so pair counts differ by large factors.
  envs::PolicyTable beta(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    std::vector<double> p{0.55, 0.3, 0.1, 0.05};
    std::shuffle(p.begin(), p.end(), rng);
    for (int a = 0; a < mdp.n_actions; ++a) beta(s, a) = p[a];
  }
  const auto dataset = data::sample_tabular_dataset(mdp, beta, 40000, seed);
  auto counts = std::make_shared<const BehaviorModel>(BehaviorModel::count_table(dataset));
  auto model = UncertaintyModel::factored(CountUncertainty(counts, 80.0), counts);
  model.set_scale(uncertainty::calibrate_scale(model, dataset, 256, seed));
  auto u = std::make_shared<const UncertaintyModel>(std::move(model));

  offrl::AgentConfig c;
  c.backend = offrl::QBackend::kTabular;
  c.eval_step = offrl::EvalStepKind::kPessimism;
  c.alpha = 100.0;
  c.gamma = mdp.discount;
  c.steps = 1000;
  c.target_period = 1;
  c.seed = seed;
  const auto agent = offrl::train(dataset, c, counts, u);

  MinimalUncertainty out;
  out.penalty = c.alpha * u->scale();
  const RowMatrixF states = one_hot_states(mdp.n_states);
  const Eigen::MatrixXd u_table(u->evaluate(states));
  const Eigen::MatrixXd q_oracle = value_iteration(mdp, -u_table);
  out.learned = greedy(Eigen::MatrixXd(agent.q.values(states)));
  out.oracle = greedy(q_oracle);
  out.min_oracle_gap = min_gap(q_oracle);
  const Eigen::MatrixXd r = reward_matrix(mdp);
  const double r_span = std::max(std::abs(r.maxCoeff()), std::abs(r.minCoeff()));
  out.gap_condition = out.penalty * out.min_oracle_gap > 2.0 * r_span / (1.0 - mdp.discount);
  return out;
}

}  // namespace spibb::testing

#include <gtest/gtest.h>

#include <filesystem>
#include <memory>

#include "spibb/behavior/behavior.hpp"
#include "spibb/data/batches.hpp"
#include "spibb/data/generate.hpp"
#include "spibb/envs/tabular.hpp"
#include "spibb/uncertainty/model.hpp"
#include "support/scenarios.hpp"

namespace spibb::uncertainty {
namespace {

TEST(Estimator, MatchesBruteForceFormulas) {
  const auto fidelity = testing::ensemble_estimator_fidelity(4, 20);
  EXPECT_EQ(fidelity.evaluations, 20 * 16);
  EXPECT_LE(fidelity.max_relative_error, 1e-10);
}

TEST(Estimator, ReducesToRootMeanWhenMembersAgree) {
  const std::vector<double> same{2.0, 2.0, 2.0};
  EXPECT_DOUBLE_EQ(uncertainty_from_residuals(same, 4, 1.0), std::sqrt(0.5));
  const std::vector<double> spread{0.0, 4.0};
  // mean = 4/(2*2) = 1, var = ((1-0)^2 + (1-2)^2)/2 = 1
  EXPECT_DOUBLE_EQ(uncertainty_from_residuals(spread, 2, 1.0), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(uncertainty_from_residuals(spread, 2, 0.0), 1.0);
}

TEST(Estimator, HeldOutClusterIsMoreUncertain) {
  const auto r = testing::two_cluster_uncertainty(11);
  EXPECT_GE(r.held_out_mean, 1.2 * r.trained_mean) << r.held_out_mean << " vs " << r.trained_mean;
}

TEST(Estimator, FitIsDeterministic) {
  RowMatrixF x = RowMatrixF::Random(50, 3);
  EnsembleConfig c;
  c.ensemble_size = 2;
  c.output_dim = 4;
  c.width = 16;
  c.prior_width = 16;
  c.steps = 50;
  const auto a = fit_ensemble(x, c), b = fit_ensemble(x, c);
  EXPECT_EQ(a.evaluate(x), b.evaluate(x));
  c.ensemble_size = 1;
  EXPECT_THROW(fit_ensemble(x, c), std::invalid_argument);
}

TEST(Composition, TabularCountsIdentity) {
  for (double c : {0.5, 1.0, 3.0}) {
    const auto r = testing::tabular_identity(2, c);
    EXPECT_GT(r.counted_pairs, 40);
    EXPECT_LE(r.max_relative_error, 1e-12);
  }
}

struct CountFixture {
  envs::TabularMDP mdp = envs::gridworld_mdp();
  data::TransitionDataset dataset;
  std::shared_ptr<const behavior::BehaviorModel> counts;
  CountFixture() {
    envs::PolicyTable beta = envs::PolicyTable::Constant(16, 4, 0.25);
    beta.row(3) << 0.7, 0.1, 0.1, 0.1;
    std::vector<double> visit(16, 1.0);
    visit[15] = 0.0;
    for (double& v : visit) v /= 15.0;
    dataset = data::sample_tabular_dataset(mdp, beta, 4000, 1, visit);
    counts = std::make_shared<const behavior::BehaviorModel>(behavior::BehaviorModel::count_table(dataset));
  }
  Observation state(int s) const { return envs::one_hot(s, 16); }
};

TEST(Composition, FactoredIsMonotoneInBehavior) {
  CountFixture f;
  const auto model = UncertaintyModel::factored(CountUncertainty(f.counts, 1.0), f.counts);
  const auto u = model.evaluate(f.state(3));
  const auto beta = f.counts->probabilities(f.state(3));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (beta[a] > beta[b]) EXPECT_LE(u[a], u[b]);
  EXPECT_EQ(model.state_uncertainty(f.state(3)), CountUncertainty(f.counts, 1.0).state(f.state(3)));
}

TEST(Composition, UnvisitedStatesGetTheSentinel) {
  CountFixture f;
  const CountUncertainty cu(f.counts, 1.0);
  EXPECT_EQ(cu.state(f.state(15)), kUnvisitedUncertainty);
  EXPECT_EQ(cu.state_action(f.state(15), 2), kUnvisitedUncertainty);
  const auto model = UncertaintyModel::tabular_counts(cu);
  EXPECT_EQ(model.evaluate(f.state(15), 0), kUnvisitedUncertainty);
  EXPECT_FALSE(model.state_uncertainty(f.state(0)).has_value());
}

TEST(Composition, BehaviorOnlyIsInverseRootBehavior) {
  CountFixture f;
  const auto model = UncertaintyModel::behavior_only(f.counts);
  const auto u = model.evaluate(f.state(3));
  const auto beta = f.counts->probabilities(f.state(3));
  for (int a = 0; a < 4; ++a) EXPECT_NEAR(u[a], 1.0 / std::sqrt(beta[a]), 1e-12);
}

TEST(Calibration, ScaleIsBatchMeanOfTakenActions) {
  CountFixture f;
  const auto model = UncertaintyModel::tabular_counts(CountUncertainty(f.counts, 2.0));
  const double scale = calibrate_scale(model, f.dataset, 64, 5);
  data::BatchSampler sampler(f.dataset.size(), 64, derive_seed(5, Stream::kCalibration));
  double sum = 0.0;
  for (int i : sampler.next()) sum += model.evaluate(f.dataset.state(i), f.dataset.action(i));
  EXPECT_DOUBLE_EQ(scale, sum / 64);
  EXPECT_THROW(calibrate_scale(model, f.dataset, 0, 5), std::invalid_argument);
}

TEST(Checkpoint, RoundTripChecksBehaviorFingerprint) {
  CountFixture f;
  auto model = UncertaintyModel::factored(CountUncertainty(f.counts, 1.5), f.counts);
  model.set_scale(0.25);
  const auto path = std::filesystem::temp_directory_path() / "spibb_unc_test.bin";
  model.save(path);
  const auto back = UncertaintyModel::load(path, f.counts);
  EXPECT_EQ(back.scale(), 0.25);
  EXPECT_EQ(back.evaluate(f.dataset.all_states()), model.evaluate(f.dataset.all_states()));
  envs::PolicyTable other = envs::PolicyTable::Constant(16, 4, 0.25);
  auto other_counts = std::make_shared<const behavior::BehaviorModel>(
      behavior::BehaviorModel::count_table(data::sample_tabular_dataset(f.mdp, other, 100, 9)));
  EXPECT_THROW(UncertaintyModel::load(path, other_counts), FormatError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace spibb::uncertainty

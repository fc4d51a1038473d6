#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "spibb/common/error.hpp"
#include "spibb/harness/algorithms.hpp"
#include "spibb/harness/config.hpp"
#include "spibb/harness/report.hpp"
#include "spibb/harness/results.hpp"

namespace spibb::harness {
namespace {

std::string diagnostic(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(text, overrides, "exp.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, PresetsFillSeedsAndSteps) {
  const auto quick = parse_config("env: cartpole\npreset: quick\n");
  EXPECT_EQ(quick.seeds, (std::vector<std::uint64_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(quick.training.steps, 50000);
  const auto full = parse_config("env: cartpole\n");
  EXPECT_EQ(full.seeds.size(), 10u);
  EXPECT_EQ(full.training.steps, 100000);
  const auto explicit_steps = parse_config("preset: quick\ntraining: {steps: 123}\nseeds: [7]\n");
  EXPECT_EQ(explicit_steps.training.steps, 123);
  EXPECT_EQ(explicit_steps.seeds, (std::vector<std::uint64_t>{7}));
}

TEST(Config, DefaultsFollowTheProtocol) {
  const auto c = parse_config("env: catch\n");
  EXPECT_EQ(c.evaluation.episodes, 50);
  EXPECT_EQ(c.training.batch_size, 256);
  EXPECT_EQ(c.training.target_period, 1000);
  EXPECT_DOUBLE_EQ(c.training.gamma, 0.99);
  ASSERT_FALSE(c.algorithms.empty());
  for (const auto& spec : c.algorithms) EXPECT_EQ(spec.grid, default_grid(spec.algorithm));
}

TEST(Config, CanonicalFormRoundTrips) {
  const auto c = parse_config("env: catch\npreset: quick\nalgorithms: [bc, {name: bcq, grid: {tau: [0.5]}}]\n");
  const auto again = parse_config(c.canonical());
  EXPECT_EQ(again.canonical(), c.canonical());
  EXPECT_EQ(again.hash(), c.hash());
}

TEST(Config, HashIgnoresOutputDirAndWorkers) {
  const auto a = parse_config("env: catch\noutput_dir: a\nworkers: 1\n");
  const auto b = parse_config("env: catch\noutput_dir: b\nworkers: 4\n");
  const auto c = parse_config("env: catch\nevaluation: {episodes: 10}\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash().size(), 8u);
}

TEST(Config, OverridesUseDottedPaths) {
  const auto c = parse_config("env: catch\n", {"training.steps=77", "evaluation.episodes=3", "seeds=[4, 5]"});
  EXPECT_EQ(c.training.steps, 77);
  EXPECT_EQ(c.evaluation.episodes, 3);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_NE(diagnostic("env: catch\n", {"training.stepz=1"}).find("stepz"), std::string::npos);
  EXPECT_NE(diagnostic("env: catch\n", {"no-equals-sign"}), "");
}

TEST(Config, DiagnosticsNameLineColumnAndField) {
  const std::string unknown = diagnostic("env: catch\ntraining:\n  stepps: 5\n");
  EXPECT_NE(unknown.find("exp.yaml:3:3"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("stepps"), std::string::npos);
  const std::string bad_type = diagnostic("env: catch\ntraining:\n  steps: many\n");
  EXPECT_NE(bad_type.find("exp.yaml:3:10"), std::string::npos) << bad_type;
  EXPECT_NE(bad_type.find("training.steps"), std::string::npos) << bad_type;
  EXPECT_NE(diagnostic("env: pong\n").find("env"), std::string::npos);
  EXPECT_NE(diagnostic("algorithms: [{name: bcq, grid: {alpha: [1]}}]\n").find("alpha"), std::string::npos);
  EXPECT_NE(diagnostic("training: {steps: -1}\n"), "");
  EXPECT_NE(diagnostic("env: [unclosed\n"), "");
}

TEST(Algorithms, GridsMatchTheProtocolTables) {
  EXPECT_EQ(default_grid(Algorithm::kBcq).at("tau"), (std::vector<double>{0.01, 0.03, 0.1, 0.3}));
  EXPECT_EQ(default_grid(Algorithm::kCql).at("alpha"), (std::vector<double>{0.3, 1, 3, 10}));
  EXPECT_EQ(default_grid(Algorithm::kPessimism).at("alpha"), (std::vector<double>{0.3, 1, 3, 10}));
  EXPECT_EQ(default_grid(Algorithm::kSpibb).at("epsilon"), (std::vector<double>{0.1, 0.3, 1, 3}));
  EXPECT_EQ(default_grid(Algorithm::kGenSpibb).at("epsilon_train"), (std::vector<double>{0.1, 0.3, 1, 3}));
  EXPECT_EQ(default_grid(Algorithm::kGenSpibb).at("epsilon_eval"), (std::vector<double>{0.001, 0.01, 0.1, 1}));
  EXPECT_EQ(expand(default_grid(Algorithm::kGenSpibb)).size(), 16u);
  EXPECT_EQ(expand(default_grid(Algorithm::kBc)).size(), 1u);
  EXPECT_TRUE(is_evaluation_axis(Algorithm::kGenSpibb, "epsilon_eval"));
  EXPECT_FALSE(is_evaluation_axis(Algorithm::kGenSpibb, "epsilon_train"));
}

TEST(Algorithms, CellLabelsAreCanonical) {
  EXPECT_EQ(cell_label({{"epsilon_train", 1.0}, {"epsilon_eval", 0.1}}), "epsilon_eval=0.1,epsilon_train=1");
  EXPECT_EQ(cell_label({}), "-");
}

TEST(Algorithms, AgentConfigsMapOntoOperators) {
  TrainingSchedule s;
  const auto gen = make_agent_config(Algorithm::kGenSpibb, {{"epsilon_train", 0.3}, {"epsilon_eval", 0.01}}, s, 5);
  EXPECT_EQ(gen.improvement, offrl::ImprovementKind::kSpibb);
  EXPECT_TRUE(gen.generalized);
  EXPECT_DOUBLE_EQ(gen.epsilon_train, 0.3);
  EXPECT_DOUBLE_EQ(gen.epsilon_eval, 0.01);
  const auto pess = make_agent_config(Algorithm::kPessimism, {{"alpha", 3}}, s, 5);
  EXPECT_EQ(pess.improvement, offrl::ImprovementKind::kGreedy);
  EXPECT_EQ(pess.eval_step, offrl::EvalStepKind::kPessimism);
  const auto cql = make_agent_config(Algorithm::kCql, {{"alpha", 3}}, s, 5);
  EXPECT_EQ(cql.eval_step, offrl::EvalStepKind::kCql);
  const auto argmax_bc = make_agent_config(Algorithm::kArgmaxBc, {}, s, 5);
  EXPECT_EQ(argmax_bc.improvement, offrl::ImprovementKind::kBcq);
  EXPECT_DOUBLE_EQ(argmax_bc.tau, 1.0);
  EXPECT_THROW(make_agent_config(Algorithm::kBcq, {{"alpha", 1}}, s, 5), ConfigError);
}

RunResult result(const std::string& alg, Cell cell, std::uint64_t seed, double mean) {
  RunResult r;
  r.config_hash = "abcd0123";
  r.env = "catch";
  r.dataset = "uni_exp";
  r.seed = seed;
  r.algorithm = alg;
  r.cell = std::move(cell);
  r.mean_return = mean;
  r.returns = {mean};
  return r;
}

TEST(Results, JsonLineRoundTrip) {
  RunResult r = result("gen_spibb", {{"epsilon_train", 0.1}, {"epsilon_eval", 1}}, 3, 0.25);
  r.returns = {1.0, -0.5};
  r.checkpoints["agent"] = "agents/x.bin";
  const RunResult back = RunResult::from_json_line(r.to_json_line());
  EXPECT_EQ(back.key(), r.key());
  EXPECT_EQ(back.returns, r.returns);
  EXPECT_EQ(back.mean_return, r.mean_return);
  EXPECT_EQ(back.checkpoints, r.checkpoints);
  const std::string line = r.to_json_line();
  EXPECT_EQ(line.find('\n'), line.size() - 1);
}

TEST(Results, StoreSkipsTornFinalLineAndPrefersOk) {
  const auto dir = std::filesystem::temp_directory_path() / "spibb_store_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  ResultStore store(dir / "results.jsonl");
  RunResult failed = result("bc", {}, 0, 0.0);
  failed.status = "error";
  failed.error = "boom";
  store.append(failed);
  store.append(result("bc", {}, 0, 0.5));
  store.append(result("bc", {}, 1, 0.7));
  { std::ofstream(dir / "results.jsonl", std::ios::app) << "{\"env\": \"cat"; }
  EXPECT_EQ(store.load().size(), 3u);
  EXPECT_EQ(store.completed_keys().size(), 2u);
  const auto merged = load_results(dir);
  ASSERT_EQ(merged.size(), 2u);
  for (const auto& r : merged) EXPECT_EQ(r.status, "ok");
  std::filesystem::remove_all(dir);
}

TEST(Report, StandardErrorUsesSampleDeviation) {
  EXPECT_DOUBLE_EQ(standard_error({1.0, 3.0}), 1.0);
  EXPECT_NEAR(standard_error({1.0, 2.0, 3.0, 4.0}), std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(standard_error({2.0}), 0.0);
}

TEST(Report, AggregatesAcrossSeedsAndNormalizes) {
  std::vector<RunResult> rs;
  for (std::uint64_t seed : {0, 1}) {
    rs.push_back(result("random", {}, seed, -1.0));
    rs.push_back(result("bc", {}, seed, 0.0 + seed));
    rs.push_back(result("pessimism", {{"alpha", 1}}, seed, 0.5));
    rs.push_back(result("pessimism", {{"alpha", 3}}, seed, 0.8 + seed));
  }
  const Report rep = aggregate(rs);
  EXPECT_EQ(rep.cells.size(), 4u);
  const SummaryRow* pess = nullptr;
  for (const auto& row : rep.summary)
    if (row.best.algorithm == "pessimism") pess = &row;
  ASSERT_NE(pess, nullptr);
  EXPECT_EQ(pess->best.cell, (Cell{{"alpha", 3}}));
  EXPECT_DOUBLE_EQ(pess->best.mean, 1.3);
  EXPECT_DOUBLE_EQ(pess->best.standard_error, 0.5);
  ASSERT_TRUE(pess->normalized.has_value());
  EXPECT_DOUBLE_EQ(*pess->normalized, (1.3 + 1.0) / (0.5 + 1.0));
  EXPECT_TRUE(rep.warnings.empty());
}

TEST(Report, SingleSeedWarns) {
  const Report rep = aggregate({result("bc", {}, 0, 1.0)});
  ASSERT_EQ(rep.cells.size(), 1u);
  EXPECT_EQ(rep.cells[0].standard_error, 0.0);
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(Report, WritesCsvFiles) {
  std::vector<RunResult> rs;
  for (std::uint64_t seed : {0, 1})
    for (double et : {0.1, 1.0})
      for (double ee : {0.01, 1.0}) rs.push_back(result("gen_spibb", {{"epsilon_train", et}, {"epsilon_eval", ee}}, seed, et * ee + seed));
  const auto dir = std::filesystem::temp_directory_path() / "spibb_report_test";
  std::filesystem::remove_all(dir);
  const auto files = write_report(aggregate(rs), dir);
  for (const char* name : {"cells.csv", "summary.csv", "heatmap_catch_uni_exp.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  EXPECT_FALSE(files.empty());
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace spibb::harness

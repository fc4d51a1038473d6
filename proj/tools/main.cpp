// spibb: offline RL experiment driver.
//
//   spibb sweep -c configs/cartpole_quick.yaml --set workers=4
//   spibb report runs/cartpole_quick

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spibb/common/error.hpp"
#include "spibb/harness/config.hpp"
#include "spibb/harness/format.hpp"
#include "spibb/harness/pipeline.hpp"
#include "spibb/harness/report.hpp"
#include "spibb/offrl/agent.hpp"

namespace {

using namespace spibb;

struct ConfigFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::string preset;
  std::string output;
  int workers = 0;
  bool quiet = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "override a config field, e.g. training.steps=1000")->take_all();
    cmd->add_option("--preset", preset, "full or quick")->check(CLI::IsMember({"full", "quick"}));
    cmd->add_option("-o,--output", output, "output directory (relative paths resolve against $SPIBB_OUTPUT_ROOT)");
    cmd->add_option("-j,--workers", workers, "parallel workers")->check(CLI::PositiveNumber);
    cmd->add_flag("-q,--quiet", quiet, "no progress output");
  }

  std::unique_ptr<harness::Pipeline> pipeline() const {
    std::vector<std::string> o;
    // The preset goes first so explicit overrides of its fields still win.
    if (!preset.empty()) o.push_back("preset=" + preset);
    o.insert(o.end(), overrides.begin(), overrides.end());
    if (!output.empty()) o.push_back("output_dir=" + output);
    if (workers > 0) o.push_back("workers=" + std::to_string(workers));
    auto p = std::make_unique<harness::Pipeline>(harness::load_config(config, o));
    if (!quiet) p->set_progress([](const std::string& msg) { std::fprintf(stderr, "[spibb] %s\n", msg.c_str()); });
    return p;
  }
};

int run_report(const std::string& results_dir, const std::string& out_dir) {
  const auto dir = harness::resolve_output_dir(results_dir);
  const auto report = harness::aggregate(harness::load_results(dir));
  for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const auto written = harness::write_report(report, out_dir.empty() ? dir / "report" : std::filesystem::path(out_dir));
  std::printf("%-10s %-10s %-10s %-36s %10s %8s\n", "env", "dataset", "algorithm", "best", "mean", "se");
  for (const auto& row : report.summary) {
    const auto& b = row.best;
    std::printf("%-10s %-10s %-10s %-36s %10s %8s\n", b.env.c_str(), b.dataset.c_str(), b.algorithm.c_str(),
                harness::cell_label(b.cell).c_str(), harness::format_fixed(b.mean, 2).c_str(),
                harness::format_fixed(b.standard_error, 2).c_str());
  }
  for (const auto& p : written) std::fprintf(stderr, "wrote %s\n", p.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline RL laboratory: dataset generation, uncertainty, SPIBB-style training, sweeps"};
  app.require_subcommand(1);
  app.fallthrough(false);
  app.failure_message(CLI::FailureMessage::help);

  ConfigFlags gen, fitb, fitu, train, eval, sweep;
  gen.attach(app.add_subcommand("gen-data", "generate the configured datasets"));
  fitb.attach(app.add_subcommand("fit-behavior", "fit behavior models on every dataset"));
  fitu.attach(app.add_subcommand("fit-uncertainty", "fit and calibrate uncertainty models"));
  train.attach(app.add_subcommand("train", "train every agent of the sweep grid"));

  auto* eval_cmd = app.add_subcommand("eval", "evaluate trained agents (all sweep cells, or one checkpoint)");
  std::string agent_path, behavior_path, uncertainty_path, env_name = "cartpole";
  int episodes = 50;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("-c,--config", eval.config, "experiment config (YAML)")->check(CLI::ExistingFile);
  eval_cmd->add_option("--set", eval.overrides, "override a config field")->take_all();
  eval_cmd->add_option("--preset", eval.preset, "full or quick")->check(CLI::IsMember({"full", "quick"}));
  eval_cmd->add_option("-o,--output", eval.output, "output directory");
  eval_cmd->add_option("-j,--workers", eval.workers, "parallel workers");
  eval_cmd->add_flag("-q,--quiet", eval.quiet, "no progress output");
  eval_cmd->add_option("--agent", agent_path, "single trained-agent checkpoint")->check(CLI::ExistingFile);
  eval_cmd->add_option("--behavior", behavior_path, "behavior checkpoint for --agent")->check(CLI::ExistingFile);
  eval_cmd->add_option("--uncertainty", uncertainty_path, "uncertainty checkpoint for --agent")->check(CLI::ExistingFile);
  eval_cmd->add_option("--env", env_name, "environment for --agent");
  eval_cmd->add_option("--episodes", episodes, "evaluation episodes for --agent");
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed for --agent");

  auto* sweep_cmd = app.add_subcommand("sweep", "run every stage and append results");
  sweep.attach(sweep_cmd);
  bool sweep_report = false;
  sweep_cmd->add_flag("--report", sweep_report, "write the report after the sweep");

  auto* report_cmd = app.add_subcommand("report", "aggregate results into CSV tables and SVG charts");
  std::string results_dir, report_out;
  report_cmd->add_option("results", results_dir, "directory holding results .jsonl files")->required();
  report_cmd->add_option("-o,--output", report_out, "report directory (default <results>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand("gen-data")) {
      gen.pipeline()->generate_all();
    } else if (app.got_subcommand("fit-behavior")) {
      fitb.pipeline()->fit_behavior_all();
    } else if (app.got_subcommand("fit-uncertainty")) {
      fitu.pipeline()->fit_uncertainty_all();
    } else if (app.got_subcommand("train")) {
      train.pipeline()->train_all();
    } else if (app.got_subcommand("eval")) {
      if (!agent_path.empty()) {
        const auto agent = offrl::TrainedAgent::load(agent_path);
        std::shared_ptr<const behavior::BehaviorModel> beh;
        std::shared_ptr<const uncertainty::UncertaintyModel> unc;
        if (!behavior_path.empty()) beh = std::make_shared<const behavior::BehaviorModel>(behavior::BehaviorModel::load(behavior_path));
        if (!uncertainty_path.empty()) {
          unc = std::make_shared<const uncertainty::UncertaintyModel>(uncertainty::UncertaintyModel::load(uncertainty_path, beh));
        }
        const auto r = harness::evaluate_checkpoint(agent, envs::parse_env_name(env_name), beh, unc, episodes, eval_seed);
        std::cout << r.to_json_line();
      } else {
        if (eval.config.empty()) throw std::invalid_argument("eval needs --config or --agent");
        const auto produced = eval.pipeline()->evaluate_all();
        std::fprintf(stderr, "%zu new results\n", produced.size());
      }
    } else if (app.got_subcommand("sweep")) {
      auto p = sweep.pipeline();
      const auto results = p->run_sweep();
      std::size_t failed = 0;
      for (const auto& r : results) failed += r.status != "ok";
      std::fprintf(stderr, "%zu results (%zu failed) in %s\n", results.size(), failed, p->results_path().c_str());
      if (sweep_report) run_report(p->output_dir().string(), "");
      return failed == 0 ? 0 : 3;
    } else if (app.got_subcommand("report")) {
      return run_report(results_dir, report_out);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

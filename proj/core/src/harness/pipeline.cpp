#include "spibb/harness/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

#include "spibb/common/binary_io.hpp"
#include "spibb/common/rng.hpp"
#include "spibb/common/error.hpp"
#include "spibb/data/generate.hpp"
#include "spibb/envs/environment.hpp"
#include "spibb/envs/rollout.hpp"
#include "spibb/harness/format.hpp"

namespace spibb::harness {

namespace {

// Sub-streams of a dataset seed for the models fitted on that dataset.
enum Component : std::uint64_t { kBehaviorFit = 1, kUncertaintyFit = 2, kAgentFit = 3 };

std::string file_safe(std::string s) {
  for (char& c : s)
    if (c == '=' || c == ',' || c == '|') c = '_';
  return s;
}

}  // namespace

std::string DatasetKey::label() const { return std::string(data::to_string(type)) + "_s" + std::to_string(seed); }

std::string task_label(const TrainingTask& task) {
  return task.dataset.label() + "_" + std::string(to_string(task.algorithm)) + "_" + cell_label(task.train_cell);
}

Pipeline::Pipeline(ExperimentConfig config)
    : config_(std::move(config)),
      out_(resolve_output_dir(config_.output_dir)),
      hash_(config_.hash()),
      store_(out_ / "results.jsonl") {
  std::filesystem::create_directories(out_);
  // Artifacts and results are reused by name, so a directory must not mix
  // two experiments.
  const auto stamp = out_ / "config.hash";
  if (std::filesystem::exists(stamp)) {
    const std::string previous = io::read_file(stamp);
    if (previous != hash_)
      throw ConfigError(out_.string() + " holds results of a different configuration (hash " + previous +
                        "); choose another output directory");
  }
  io::write_file_atomic(out_ / "config.resolved.yaml", config_.canonical());
  io::write_file_atomic(stamp, hash_);
}

void Pipeline::log(const std::string& msg) {
  std::lock_guard lock(log_mutex_);
  if (progress_) progress_(msg);
}

std::filesystem::path Pipeline::artifact(const std::string& kind, const std::string& name) const {
  const auto dir = out_ / kind;
  std::filesystem::create_directories(dir);
  return dir / (file_safe(name) + ".bin");
}

template <typename T>
std::shared_ptr<const T> Pipeline::memo(const std::string& key, const std::function<std::shared_ptr<const T>()>& make) {
  std::promise<std::shared_ptr<const void>> promise;
  std::shared_future<std::shared_ptr<const void>> future;
  bool owner = false;
  {
    std::lock_guard lock(memo_mutex_);
    auto it = memo_.find(key);
    if (it == memo_.end()) {
      future = promise.get_future().share();
      memo_.emplace(key, future);
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (owner) {
    try {
      promise.set_value(make());
    } catch (...) {
      // Failures stay memoized so dependent cells report the same error
      // instead of retrying the work.
      promise.set_exception(std::current_exception());
    }
  }
  return std::static_pointer_cast<const T>(future.get());
}

void Pipeline::for_each_parallel(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, config_.workers));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

bool Pipeline::any_algorithm_needs_uncertainty() const {
  for (const auto& a : config_.algorithms)
    if (needs_uncertainty(a.algorithm)) return true;
  return false;
}

bool Pipeline::any_algorithm_needs_behavior() const {
  for (const auto& a : config_.algorithms)
    if (needs_behavior(a.algorithm)) return true;
  return any_algorithm_needs_uncertainty();
}

std::vector<DatasetKey> Pipeline::dataset_keys() const {
  std::vector<DatasetKey> keys;
  std::vector<data::DatasetType> types = config_.dataset.types;
  if (config_.dataset.path) types = {data::load_dataset(*config_.dataset.path).provenance().type};
  for (auto type : types)
    for (auto seed : config_.seeds) keys.push_back({type, seed});
  return keys;
}

std::vector<TrainingTask> Pipeline::training_tasks() const {
  std::vector<TrainingTask> tasks;
  for (const auto& key : dataset_keys()) {
    for (const auto& spec : config_.algorithms) {
      Grid train_grid, eval_grid;
      for (const auto& [axis, values] : spec.grid) {
        (is_evaluation_axis(spec.algorithm, axis) ? eval_grid : train_grid)[axis] = values;
      }
      for (const Cell& train_cell : expand(train_grid)) {
        TrainingTask task{key, spec.algorithm, train_cell, {}};
        for (const Cell& e : expand(eval_grid)) {
          Cell full = train_cell;
          full.insert(e.begin(), e.end());
          task.eval_cells.push_back(std::move(full));
        }
        tasks.push_back(std::move(task));
      }
    }
  }
  return tasks;
}

std::shared_ptr<const data::TransitionDataset> Pipeline::dataset(const DatasetKey& key) {
  return memo<data::TransitionDataset>("dataset/" + key.label(), [&]() -> std::shared_ptr<const data::TransitionDataset> {
    if (config_.dataset.path) {
      return std::make_shared<const data::TransitionDataset>(data::load_dataset(*config_.dataset.path));
    }
    const auto path = artifact("datasets", std::string(envs::to_string(config_.env)) + "_" + key.label());
    if (std::filesystem::exists(path)) return std::make_shared<const data::TransitionDataset>(data::load_dataset(path));
    log("generating dataset " + key.label());
    auto env = envs::make_environment(config_.env);
    data::AgentSchedule schedule;
    schedule.medium_episodes = config_.dataset.medium_episodes;
    schedule.expert_episodes = config_.dataset.expert_episodes;
    const auto recipe = data::standard_recipe(key.type, config_.env, key.seed, schedule);
    data::AgentPolicyResolver resolver(*env, schedule, out_ / "collectors");
    auto d = data::generate_dataset(recipe, *env, config_.dataset_size(), key.seed, resolver);
    data::save_dataset(d, path);
    return std::make_shared<const data::TransitionDataset>(std::move(d));
  });
}

std::shared_ptr<const behavior::BehaviorModel> Pipeline::behavior(const DatasetKey& key) {
  return memo<behavior::BehaviorModel>("behavior/" + key.label(), [&]() -> std::shared_ptr<const behavior::BehaviorModel> {
    const auto path = artifact("behavior", key.label());
    if (std::filesystem::exists(path)) return std::make_shared<const behavior::BehaviorModel>(behavior::BehaviorModel::load(path));
    const auto d = dataset(key);
    log("fitting behavior " + key.label());
    behavior::BehaviorConfig c = config_.behavior;
    c.seed = derive_seed(key.seed, Stream::kAgentTraining, kBehaviorFit);
    auto model = behavior::fit_behavior(*d, c);
    model.save(path);
    return std::make_shared<const behavior::BehaviorModel>(std::move(model));
  });
}

std::shared_ptr<const uncertainty::UncertaintyModel> Pipeline::uncertainty(const DatasetKey& key) {
  return memo<uncertainty::UncertaintyModel>(
      "uncertainty/" + key.label(), [&]() -> std::shared_ptr<const uncertainty::UncertaintyModel> {
        namespace u = uncertainty;
        const auto path = artifact("uncertainty", key.label());
        const auto beh = behavior(key);
        if (std::filesystem::exists(path)) return std::make_shared<const u::UncertaintyModel>(u::UncertaintyModel::load(path, beh));
        const auto d = dataset(key);
        log("fitting uncertainty " + key.label());
        const auto& s = config_.uncertainty;
        u::EnsembleConfig ec = s.ensemble;
        ec.seed = derive_seed(key.seed, Stream::kAgentTraining, kUncertaintyFit);
        auto counts = [&] {
          return u::CountUncertainty(std::make_shared<const behavior::BehaviorModel>(behavior::BehaviorModel::count_table(*d)),
                                     s.count_constant);
        };
        std::optional<u::UncertaintyModel> model;
        switch (s.variant) {
          case u::Variant::kFactored:
            model = s.state_source == "counts" ? u::UncertaintyModel::factored(counts(), beh)
                                               : u::UncertaintyModel::factored(u::fit_state_uncertainty(*d, ec), beh);
            break;
          case u::Variant::kBehaviorOnly: model = u::UncertaintyModel::behavior_only(beh); break;
          case u::Variant::kJointSa:
            model = u::UncertaintyModel::joint(u::fit_joint_uncertainty(*d, ec), d->env().n_actions);
            break;
          case u::Variant::kTabularCounts: model = u::UncertaintyModel::tabular_counts(counts()); break;
        }
        model->set_scale(u::calibrate_scale(*model, *d, s.calibration_batch, key.seed));
        model->save(path);
        return std::make_shared<const u::UncertaintyModel>(std::move(*model));
      });
}

std::shared_ptr<const offrl::TrainedAgent> Pipeline::agent(const TrainingTask& task) {
  if (!needs_training(task.algorithm)) return nullptr;
  return memo<offrl::TrainedAgent>("agent/" + task_label(task), [&]() -> std::shared_ptr<const offrl::TrainedAgent> {
    const auto path = artifact("agents", task_label(task));
    if (std::filesystem::exists(path)) return std::make_shared<const offrl::TrainedAgent>(offrl::TrainedAgent::load(path));
    // The configured evaluation epsilon does not affect training; the first
    // evaluation cell fills the field so the config validates.
    Cell cell = task.train_cell;
    if (!task.eval_cells.empty()) cell = task.eval_cells.front();
    const auto c = make_agent_config(task.algorithm, cell, config_.training,
                                     derive_seed(task.dataset.seed, Stream::kAgentTraining, kAgentFit));
    const auto d = dataset(task.dataset);
    const auto beh = c.needs_behavior() ? behavior(task.dataset) : nullptr;
    const auto unc = c.needs_uncertainty() ? uncertainty(task.dataset) : nullptr;
    log("training " + task_label(task));
    auto trained = offrl::train(*d, c, beh, unc);
    trained.save(path);
    return std::make_shared<const offrl::TrainedAgent>(std::move(trained));
  });
}

RunResult Pipeline::evaluate(const TrainingTask& task, const Cell& eval_cell) {
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  r.config_hash = hash_;
  r.env = std::string(envs::to_string(config_.env));
  r.dataset = std::string(data::to_string(task.dataset.type));
  r.seed = task.dataset.seed;
  r.algorithm = std::string(to_string(task.algorithm));
  r.cell = eval_cell;

  const auto env = envs::make_environment(config_.env);
  std::unique_ptr<envs::DiscretePolicy> policy;
  std::shared_ptr<const behavior::BehaviorModel> beh;
  if (needs_behavior(task.algorithm)) {
    beh = behavior(task.dataset);
    r.checkpoints["behavior"] = artifact("behavior", task.dataset.label()).string();
  }
  switch (task.algorithm) {
    case Algorithm::kRandom: policy = std::make_unique<envs::UniformPolicy>(env->spec().n_actions); break;
    case Algorithm::kBc:
      policy = std::make_unique<behavior::BehaviorCloningPolicy>(*beh, behavior::BehaviorCloningPolicy::Mode::kSample);
      break;
    case Algorithm::kArgmaxBc:
      policy = std::make_unique<behavior::BehaviorCloningPolicy>(*beh, behavior::BehaviorCloningPolicy::Mode::kArgmax);
      break;
    default: {
      auto trained = agent(task);
      offrl::TrainedAgent view = *trained;
      const auto c = make_agent_config(task.algorithm, eval_cell, config_.training, view.config.seed);
      view.config.epsilon_eval = c.epsilon_eval;
      std::shared_ptr<const uncertainty::UncertaintyModel> unc;
      if (needs_uncertainty(task.algorithm)) {
        unc = uncertainty(task.dataset);
        r.checkpoints["uncertainty"] = artifact("uncertainty", task.dataset.label()).string();
      }
      r.checkpoints["agent"] = artifact("agents", task_label(task)).string();
      policy = offrl::make_eval_policy(view, beh, unc);
    }
  }
  const auto seed = derive_seed(config_.evaluation.seed, Stream::kEvaluation, task.dataset.seed);
  const auto rollout = envs::rollout(*env, *policy, seed, config_.evaluation.episodes);
  r.returns = rollout.returns();
  r.mean_return = mean_of(r.returns);
  r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

void Pipeline::generate_all() {
  const auto keys = dataset_keys();
  for_each_parallel(keys.size(), [&](std::size_t i) { dataset(keys[i]); });
}

void Pipeline::fit_behavior_all() {
  if (!any_algorithm_needs_behavior()) return;
  const auto keys = dataset_keys();
  for_each_parallel(keys.size(), [&](std::size_t i) { behavior(keys[i]); });
}

void Pipeline::fit_uncertainty_all() {
  if (!any_algorithm_needs_uncertainty()) return;
  const auto keys = dataset_keys();
  for_each_parallel(keys.size(), [&](std::size_t i) { uncertainty(keys[i]); });
}

void Pipeline::train_all() {
  const auto tasks = training_tasks();
  for_each_parallel(tasks.size(), [&](std::size_t i) { agent(tasks[i]); });
}

std::vector<RunResult> Pipeline::evaluate_all() {
  const auto tasks = training_tasks();
  const auto done = store_.completed_keys();
  std::vector<RunResult> produced;
  std::mutex produced_mutex;
  for_each_parallel(tasks.size(), [&](std::size_t i) {
    const TrainingTask& task = tasks[i];
    for (const Cell& cell : task.eval_cells) {
      RunResult probe;
      probe.env = std::string(envs::to_string(config_.env));
      probe.dataset = std::string(data::to_string(task.dataset.type));
      probe.seed = task.dataset.seed;
      probe.algorithm = std::string(to_string(task.algorithm));
      probe.cell = cell;
      if (done.count(probe.key())) continue;
      RunResult r;
      try {
        r = evaluate(task, cell);
        log("evaluated " + probe.key() + " mean " + format_fixed(r.mean_return, 2));
      } catch (const std::exception& e) {
        r = probe;
        r.config_hash = hash_;
        r.status = "error";
        r.error = e.what();
        log("failed " + probe.key() + ": " + e.what());
      }
      store_.append(r);
      std::lock_guard lock(produced_mutex);
      produced.push_back(std::move(r));
    }
  });
  return produced;
}

std::vector<RunResult> Pipeline::run_sweep() {
  generate_all();
  fit_behavior_all();
  fit_uncertainty_all();
  // Training failures surface per cell in evaluate_all(), so a failing cell
  // does not stop the sweep.
  const auto tasks = training_tasks();
  for_each_parallel(tasks.size(), [&](std::size_t i) {
    try {
      agent(tasks[i]);
    } catch (const std::exception& e) {
      log("training failed for " + task_label(tasks[i]) + ": " + e.what());
    }
  });
  evaluate_all();
  return store_.load();
}

RunResult evaluate_checkpoint(const offrl::TrainedAgent& agent, envs::EnvName env_name,
                              std::shared_ptr<const behavior::BehaviorModel> behavior,
                              std::shared_ptr<const uncertainty::UncertaintyModel> uncertainty, int episodes,
                              std::uint64_t seed) {
  const auto env = envs::make_environment(env_name);
  if (!(agent.env == env->spec())) {
    throw std::invalid_argument("checkpoint was trained on " + std::string(envs::to_string(agent.env.name)) +
                                " (obs_dim " + std::to_string(agent.env.obs_dim) + "), not " +
                                std::string(envs::to_string(env_name)));
  }
  if (episodes < 1) throw std::invalid_argument("need at least one evaluation episode");
  const auto start = std::chrono::steady_clock::now();
  const auto policy = offrl::make_eval_policy(agent, std::move(behavior), std::move(uncertainty));
  RunResult r;
  r.env = std::string(envs::to_string(env_name));
  r.dataset = "-";
  r.seed = agent.config.seed;
  r.algorithm = std::string(offrl::to_string(agent.config.improvement)) + "+" +
                std::string(offrl::to_string(agent.config.eval_step));
  r.returns = envs::rollout(*env, *policy, seed, episodes).returns();
  r.mean_return = mean_of(r.returns);
  r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace spibb::harness

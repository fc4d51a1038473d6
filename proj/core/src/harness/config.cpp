#include "spibb/harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include "spibb/common/binary_io.hpp"
#include "spibb/common/error.hpp"
#include "spibb/data/generate.hpp"
#include "spibb/harness/format.hpp"

namespace spibb::harness {

namespace {

std::string where(const std::string& source, const YAML::Mark& mark) {
  if (mark.is_null()) return source;
  return source + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
}

// One mapping in the document. Reads are optional; finish() rejects keys
// that were never read.
class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap()) fail(node_, "expected a mapping");
  }

  bool has(const std::string& key) const { return node_.IsMap() && node_[key].IsDefined() && !node_[key].IsNull(); }

  YAML::Node child(const std::string& key) {
    used_.insert(key);
    return node_.IsMap() ? node_[key] : YAML::Node();
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void read(const std::string& key, T& out) {
    const YAML::Node n = child(key);
    if (!n.IsDefined() || n.IsNull()) return;
    out = convert<T>(n, field(key));
  }

  template <typename T>
  T convert(const YAML::Node& n, const std::string& name) const {
    if (!n.IsScalar()) fail(n, name + ": expected a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(n, name + ": cannot read '" + n.Scalar() + "' as " + type_name<T>());
    }
  }

  template <typename T>
  std::vector<T> convert_list(const YAML::Node& n, const std::string& name) const {
    if (!n.IsSequence()) fail(n, name + ": expected a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(convert<T>(n[i], name + "[" + std::to_string(i) + "]"));
    return out;
  }

  void finish() const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) fail(kv.first, "unknown key '" + field(key) + "'");
    }
  }

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    throw ConfigError(where(source_, n.Mark()) + ": " + msg);
  }

 private:
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a string";
  }

  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> used_;
};

void apply_override(YAML::Node& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + spec + "': expected path=value");
  const std::string path = spec.substr(0, eq);
  YAML::Node value;
  try {
    value = YAML::Load(spec.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError("override '" + spec + "': " + e.msg);
  }
  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string k; std::getline(ss, k, '.');) {
    if (k.empty()) throw ConfigError("override '" + spec + "': empty path component");
    keys.push_back(k);
  }
  if (!root.IsMap()) root = YAML::Node(YAML::NodeType::Map);
  // Walk with explicit node copies; yaml-cpp nodes are handles, so assigning
  // a child of `cur` writes through to the document.
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    YAML::Node next = chain.back()[keys[i]];
    if (!next.IsDefined() || next.IsNull()) {
      chain.back()[keys[i]] = YAML::Node(YAML::NodeType::Map);
      next = chain.back()[keys[i]];
    } else if (!next.IsMap()) {
      throw ConfigError("override '" + spec + "': '" + keys[i] + "' is not a section");
    }
    chain.push_back(next);
  }
  chain.back()[keys.back()] = value;
}

std::vector<std::uint64_t> seed_range(int n) {
  std::vector<std::uint64_t> s(n);
  for (int i = 0; i < n; ++i) s[i] = static_cast<std::uint64_t>(i);
  return s;
}

void parse_training(Section s, TrainingSchedule& t) {
  s.read("steps", t.steps);
  s.read("target_period", t.target_period);
  s.read("batch_size", t.batch_size);
  s.read("learning_rate", t.learning_rate);
  s.read("width", t.width);
  s.read("depth", t.depth);
  s.read("gamma", t.gamma);
  s.read("u_ceiling", t.u_ceiling);
  std::string backend(offrl::to_string(t.backend));
  s.read("backend", backend);
  try {
    t.backend = offrl::parse_q_backend(backend);
  } catch (const std::invalid_argument& e) {
    s.fail(s.child("backend"), s.field("backend") + ": " + e.what());
  }
  s.finish();
  if (t.steps < 0 || t.target_period < 1 || t.batch_size < 1 || !(t.learning_rate > 0) || t.width < 1 ||
      t.depth < 0 || !(t.gamma >= 0 && t.gamma < 1) || !(t.u_ceiling > 0)) {
    throw ConfigError("training: values out of range");
  }
}

}  // namespace

int ExperimentConfig::dataset_size() const {
  return dataset.size > 0 ? dataset.size : data::default_dataset_size(env);
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides,
                              const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(where(source, e.mark) + ": " + e.msg);
  }
  if (!root.IsDefined() || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& o : overrides) apply_override(root, o);

  Section top(root, "", source);
  ExperimentConfig c;

  std::string env = "cartpole";
  top.read("env", env);
  try {
    c.env = envs::parse_env_name(env);
  } catch (const std::invalid_argument& e) {
    top.fail(top.child("env"), std::string("env: ") + e.what());
  }
  if (c.env == envs::EnvName::kTabular) top.fail(top.child("env"), "env: sweeps run on cartpole or catch");

  std::string preset = "full";
  top.read("preset", preset);
  if (preset == "quick") {
    c.preset = Preset::kQuick;
  } else if (preset != "full") {
    top.fail(top.child("preset"), "preset: expected 'full' or 'quick'");
  }
  // The quick preset halves training steps and the number of dataset seeds.
  c.training.steps = c.preset == Preset::kQuick ? 50000 : 100000;
  c.seeds = seed_range(c.preset == Preset::kQuick ? 5 : 10);

  if (top.has("seeds")) {
    const YAML::Node n = top.child("seeds");
    c.seeds = n.IsScalar() ? seed_range(top.convert<int>(n, "seeds")) : top.convert_list<std::uint64_t>(n, "seeds");
    if (c.seeds.empty()) top.fail(n, "seeds: need at least one seed");
  }

  {
    Section s(top.child("dataset"), "dataset", source);
    if (s.has("types")) {
      c.dataset.types.clear();
      const YAML::Node n = s.child("types");
      for (const auto& name : s.convert_list<std::string>(n, "dataset.types")) {
        try {
          c.dataset.types.push_back(data::parse_dataset_type(name));
        } catch (const std::invalid_argument& e) {
          s.fail(n, std::string("dataset.types: ") + e.what());
        }
      }
      if (c.dataset.types.empty()) s.fail(n, "dataset.types: need at least one type");
    }
    s.read("size", c.dataset.size);
    std::string path;
    s.read("path", path);
    if (!path.empty()) c.dataset.path = path;
    s.read("medium_episodes", c.dataset.medium_episodes);
    s.read("expert_episodes", c.dataset.expert_episodes);
    s.finish();
    if (c.dataset.size < 0 || c.dataset.medium_episodes < 0 || c.dataset.expert_episodes < 0) {
      throw ConfigError(source + ": dataset: sizes must be nonnegative");
    }
  }

  {
    Section s(top.child("behavior"), "behavior", source);
    std::string backend(behavior::to_string(c.behavior.backend));
    s.read("backend", backend);
    try {
      c.behavior.backend = behavior::parse_backend(backend);
    } catch (const std::invalid_argument& e) {
      s.fail(s.child("backend"), std::string("behavior.backend: ") + e.what());
    }
    s.read("steps", c.behavior.steps);
    s.read("learning_rate", c.behavior.learning_rate);
    s.read("batch_size", c.behavior.batch_size);
    s.read("width", c.behavior.width);
    s.read("depth", c.behavior.depth);
    s.finish();
  }

  {
    Section s(top.child("uncertainty"), "uncertainty", source);
    std::string variant(uncertainty::to_string(c.uncertainty.variant));
    s.read("variant", variant);
    try {
      c.uncertainty.variant = uncertainty::parse_variant(variant);
    } catch (const std::invalid_argument& e) {
      s.fail(s.child("variant"), std::string("uncertainty.variant: ") + e.what());
    }
    s.read("state_source", c.uncertainty.state_source);
    if (c.uncertainty.state_source != "ensemble" && c.uncertainty.state_source != "counts") {
      s.fail(s.child("state_source"), "uncertainty.state_source: expected 'ensemble' or 'counts'");
    }
    auto& e = c.uncertainty.ensemble;
    s.read("ensemble_size", e.ensemble_size);
    s.read("output_dim", e.output_dim);
    s.read("noise_std", e.noise_std);
    s.read("combo_alpha", e.combo_alpha);
    s.read("steps", e.steps);
    s.read("learning_rate", e.learning_rate);
    s.read("batch_size", e.batch_size);
    s.read("width", e.width);
    s.read("depth", e.depth);
    s.read("prior_width", e.prior_width);
    s.read("prior_depth", e.prior_depth);
    s.read("count_constant", c.uncertainty.count_constant);
    s.read("calibration_batch", c.uncertainty.calibration_batch);
    s.finish();
    if (e.ensemble_size < 2) throw ConfigError(source + ": uncertainty.ensemble_size: need at least 2 members");
    if (!(c.uncertainty.count_constant > 0)) throw ConfigError(source + ": uncertainty.count_constant must be positive");
    if (c.uncertainty.calibration_batch < 1) throw ConfigError(source + ": uncertainty.calibration_batch must be positive");
  }

  parse_training(Section(top.child("training"), "training", source), c.training);

  {
    const YAML::Node list = top.child("algorithms");
    if (!list.IsDefined() || list.IsNull()) {
      for (Algorithm a : {Algorithm::kBc, Algorithm::kPessimism, Algorithm::kGenSpibb})
        c.algorithms.push_back({a, default_grid(a)});
    } else {
      if (!list.IsSequence()) top.fail(list, "algorithms: expected a list");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "algorithms[" + std::to_string(i) + "]";
        AlgorithmSpec spec;
        YAML::Node item = list[i];
        std::string name;
        if (item.IsScalar()) {
          name = item.Scalar();
        } else {
          Section s(item, path, source);
          s.read("name", name);
          if (name.empty()) s.fail(item, path + ": missing 'name'");
          spec.grid = {};
          if (s.has("grid")) {
            Section g(s.child("grid"), path + ".grid", source);
            const YAML::Node grid_node = s.child("grid");
            for (const auto& kv : grid_node) {
              const auto axis = kv.first.as<std::string>();
              spec.grid[axis] = g.convert_list<double>(g.child(axis), path + ".grid." + axis);
              if (spec.grid[axis].empty()) g.fail(kv.first, path + ".grid." + axis + ": empty list");
            }
          }
          s.finish();
        }
        try {
          spec.algorithm = parse_algorithm(name);
        } catch (const ConfigError& e) {
          top.fail(item, path + ": " + e.what());
        }
        const auto axes = grid_axes(spec.algorithm);
        for (const auto& [axis, values] : spec.grid) {
          if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
            top.fail(item, path + ": " + name + " has no hyperparameter '" + axis + "'");
          }
        }
        for (const auto& [axis, values] : default_grid(spec.algorithm)) spec.grid.try_emplace(axis, values);
        c.algorithms.push_back(std::move(spec));
      }
    }
  }

  {
    Section s(top.child("evaluation"), "evaluation", source);
    s.read("episodes", c.evaluation.episodes);
    s.read("seed", c.evaluation.seed);
    s.finish();
    if (c.evaluation.episodes < 1) throw ConfigError(source + ": evaluation.episodes must be positive");
  }

  std::string out = c.output_dir.string();
  top.read("output_dir", out);
  c.output_dir = out;
  top.read("workers", c.workers);
  if (c.workers < 1) top.fail(top.child("workers"), "workers: must be positive");
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  return parse_config(text, overrides, path.string());
}

namespace {

std::string emit(const ExperimentConfig& c, bool with_runtime) {
  YAML::Emitter out;
  auto num = [](double v) { return format_number(v); };
  out << YAML::BeginMap;
  out << YAML::Key << "env" << YAML::Value << std::string(envs::to_string(c.env));
  out << YAML::Key << "preset" << YAML::Value << (c.preset == Preset::kQuick ? "quick" : "full");
  out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << c.seeds;

  out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "types" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto t : c.dataset.types) out << std::string(data::to_string(t));
  out << YAML::EndSeq;
  out << YAML::Key << "size" << YAML::Value << c.dataset.size;
  if (c.dataset.path) out << YAML::Key << "path" << YAML::Value << c.dataset.path->string();
  out << YAML::Key << "medium_episodes" << YAML::Value << c.dataset.medium_episodes;
  out << YAML::Key << "expert_episodes" << YAML::Value << c.dataset.expert_episodes;
  out << YAML::EndMap;

  out << YAML::Key << "behavior" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "backend" << YAML::Value << std::string(behavior::to_string(c.behavior.backend));
  out << YAML::Key << "steps" << YAML::Value << c.behavior.steps;
  out << YAML::Key << "learning_rate" << YAML::Value << num(c.behavior.learning_rate);
  out << YAML::Key << "batch_size" << YAML::Value << c.behavior.batch_size;
  out << YAML::Key << "width" << YAML::Value << c.behavior.width;
  out << YAML::Key << "depth" << YAML::Value << c.behavior.depth;
  out << YAML::EndMap;

  const auto& e = c.uncertainty.ensemble;
  out << YAML::Key << "uncertainty" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "variant" << YAML::Value << std::string(uncertainty::to_string(c.uncertainty.variant));
  out << YAML::Key << "state_source" << YAML::Value << c.uncertainty.state_source;
  out << YAML::Key << "ensemble_size" << YAML::Value << e.ensemble_size;
  out << YAML::Key << "output_dim" << YAML::Value << e.output_dim;
  out << YAML::Key << "noise_std" << YAML::Value << num(e.noise_std);
  out << YAML::Key << "combo_alpha" << YAML::Value << num(e.combo_alpha);
  out << YAML::Key << "steps" << YAML::Value << e.steps;
  out << YAML::Key << "learning_rate" << YAML::Value << num(e.learning_rate);
  out << YAML::Key << "batch_size" << YAML::Value << e.batch_size;
  out << YAML::Key << "width" << YAML::Value << e.width;
  out << YAML::Key << "depth" << YAML::Value << e.depth;
  out << YAML::Key << "prior_width" << YAML::Value << e.prior_width;
  out << YAML::Key << "prior_depth" << YAML::Value << e.prior_depth;
  out << YAML::Key << "count_constant" << YAML::Value << num(c.uncertainty.count_constant);
  out << YAML::Key << "calibration_batch" << YAML::Value << c.uncertainty.calibration_batch;
  out << YAML::EndMap;

  const auto& t = c.training;
  out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "steps" << YAML::Value << t.steps;
  out << YAML::Key << "target_period" << YAML::Value << t.target_period;
  out << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
  out << YAML::Key << "learning_rate" << YAML::Value << num(t.learning_rate);
  out << YAML::Key << "width" << YAML::Value << t.width;
  out << YAML::Key << "depth" << YAML::Value << t.depth;
  out << YAML::Key << "gamma" << YAML::Value << num(t.gamma);
  out << YAML::Key << "backend" << YAML::Value << std::string(offrl::to_string(t.backend));
  out << YAML::Key << "u_ceiling" << YAML::Value << (std::isinf(t.u_ceiling) ? std::string(".inf") : num(t.u_ceiling));
  out << YAML::EndMap;

  out << YAML::Key << "algorithms" << YAML::Value << YAML::BeginSeq;
  for (const auto& a : c.algorithms) {
    out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << std::string(to_string(a.algorithm));
    if (!a.grid.empty()) {
      out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
      for (const auto& [axis, values] : a.grid) {
        out << YAML::Key << axis << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (double v : values) out << num(v);
        out << YAML::EndSeq;
      }
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "evaluation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "episodes" << YAML::Value << c.evaluation.episodes;
  out << YAML::Key << "seed" << YAML::Value << c.evaluation.seed;
  out << YAML::EndMap;

  if (with_runtime) {
    out << YAML::Key << "output_dir" << YAML::Value << c.output_dir.string();
    out << YAML::Key << "workers" << YAML::Value << c.workers;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace

std::string ExperimentConfig::canonical() const { return emit(*this, true); }

std::string ExperimentConfig::hash() const {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", io::crc32(emit(*this, false)));
  return buf;
}

std::filesystem::path resolve_output_dir(const std::filesystem::path& dir) {
  if (dir.is_absolute()) return dir;
  if (const char* root = std::getenv("SPIBB_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return std::filesystem::path(root) / dir;
  }
  return dir;
}

}  // namespace spibb::harness

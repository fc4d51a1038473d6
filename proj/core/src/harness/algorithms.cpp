#include "spibb/harness/algorithms.hpp"

#include <algorithm>
#include <stdexcept>

#include "spibb/common/error.hpp"
#include "spibb/harness/format.hpp"

namespace spibb::harness {

namespace {
constexpr Algorithm kAll[] = {Algorithm::kRandom, Algorithm::kBc,        Algorithm::kArgmaxBc,
                              Algorithm::kGreedy, Algorithm::kBcq,       Algorithm::kCql,
                              Algorithm::kPessimism, Algorithm::kSpibb, Algorithm::kGenSpibb};
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kRandom: return "random";
    case Algorithm::kBc: return "bc";
    case Algorithm::kArgmaxBc: return "argmax_bc";
    case Algorithm::kGreedy: return "greedy";
    case Algorithm::kBcq: return "bcq";
    case Algorithm::kCql: return "cql";
    case Algorithm::kPessimism: return "pessimism";
    case Algorithm::kSpibb: return "spibb";
    case Algorithm::kGenSpibb: return "gen_spibb";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : kAll)
    if (to_string(a) == name) return a;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

Grid default_grid(Algorithm a) {
  switch (a) {
    case Algorithm::kBcq: return {{"tau", {0.01, 0.03, 0.1, 0.3}}};
    case Algorithm::kCql: return {{"alpha", {0.3, 1, 3, 10}}};
    case Algorithm::kPessimism: return {{"alpha", {0.3, 1, 3, 10}}};
    case Algorithm::kSpibb: return {{"epsilon", {0.1, 0.3, 1, 3}}};
    case Algorithm::kGenSpibb:
      return {{"epsilon_train", {0.1, 0.3, 1, 3}}, {"epsilon_eval", {0.001, 0.01, 0.1, 1}}};
    default: return {};
  }
}

std::vector<std::string> grid_axes(Algorithm a) {
  std::vector<std::string> axes;
  for (const auto& [name, values] : default_grid(a)) axes.push_back(name);
  return axes;
}

bool is_evaluation_axis(Algorithm a, std::string_view axis) {
  return a == Algorithm::kGenSpibb && axis == "epsilon_eval";
}

std::vector<Cell> expand(const Grid& grid) {
  std::vector<Cell> cells{Cell{}};
  for (const auto& [axis, values] : grid) {
    std::vector<Cell> next;
    for (const Cell& c : cells) {
      for (double v : values) {
        Cell extended = c;
        extended[axis] = v;
        next.push_back(std::move(extended));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

std::string cell_label(const Cell& cell) {
  std::string out;
  for (const auto& [axis, value] : cell) {
    if (!out.empty()) out += ',';
    out += axis + "=" + format_number(value);
  }
  return out.empty() ? "-" : out;
}

bool needs_training(Algorithm a) {
  return a != Algorithm::kRandom && a != Algorithm::kBc && a != Algorithm::kArgmaxBc;
}

bool needs_behavior(Algorithm a) {
  return a != Algorithm::kRandom && a != Algorithm::kGreedy && a != Algorithm::kCql;
}

bool needs_uncertainty(Algorithm a) {
  return a == Algorithm::kPessimism || a == Algorithm::kSpibb || a == Algorithm::kGenSpibb;
}

offrl::AgentConfig make_agent_config(Algorithm a, const Cell& cell, const TrainingSchedule& s,
                                     std::uint64_t seed) {
  const auto axes = grid_axes(a);
  for (const auto& [axis, value] : cell) {
    if (std::find(axes.begin(), axes.end(), axis) == axes.end()) {
      throw ConfigError("algorithm " + std::string(to_string(a)) + " has no hyperparameter '" + axis + "'");
    }
  }
  auto get = [&](const std::string& axis) {
    const auto it = cell.find(axis);
    if (it == cell.end()) throw ConfigError("missing hyperparameter '" + axis + "' for " + std::string(to_string(a)));
    return it->second;
  };

  offrl::AgentConfig c;
  c.steps = s.steps;
  c.target_period = s.target_period;
  c.batch_size = s.batch_size;
  c.learning_rate = s.learning_rate;
  c.width = s.width;
  c.depth = s.depth;
  c.gamma = s.gamma;
  c.backend = s.backend;
  c.u_ceiling = s.u_ceiling;
  c.seed = seed;
  switch (a) {
    case Algorithm::kRandom:
    case Algorithm::kGreedy:
      break;
    case Algorithm::kBc:
      c.improvement = offrl::ImprovementKind::kBc;
      c.steps = 0;
      break;
    case Algorithm::kArgmaxBc:
      // BCQ at tau = 1 acts on the mode of beta-hat whatever Q is.
      c.improvement = offrl::ImprovementKind::kBcq;
      c.tau = 1.0;
      c.steps = 0;
      break;
    case Algorithm::kBcq:
      c.improvement = offrl::ImprovementKind::kBcq;
      c.tau = get("tau");
      break;
    case Algorithm::kCql:
      c.eval_step = offrl::EvalStepKind::kCql;
      c.alpha = get("alpha");
      break;
    case Algorithm::kPessimism:
      c.eval_step = offrl::EvalStepKind::kPessimism;
      c.alpha = get("alpha");
      break;
    case Algorithm::kSpibb:
      c.improvement = offrl::ImprovementKind::kSpibb;
      c.epsilon_train = c.epsilon_eval = get("epsilon");
      break;
    case Algorithm::kGenSpibb:
      c.improvement = offrl::ImprovementKind::kSpibb;
      c.generalized = true;
      c.epsilon_train = get("epsilon_train");
      c.epsilon_eval = get("epsilon_eval");
      break;
  }
  c.validate();
  return c;
}

}  // namespace spibb::harness

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spibb/offrl/agent.hpp"

namespace spibb::harness {

enum class Algorithm { kRandom, kBc, kArgmaxBc, kGreedy, kBcq, kCql, kPessimism, kSpibb, kGenSpibb };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

/// Named hyperparameter values of one grid cell, ordered by name.
using Cell = std::map<std::string, double>;

/// Hyperparameter axes of a grid; the cartesian product gives the cells.
using Grid = std::map<std::string, std::vector<double>>;

/// Per-algorithm grids used when a config omits them.
Grid default_grid(Algorithm a);
/// Axes an algorithm accepts (empty for the untrained baselines).
std::vector<std::string> grid_axes(Algorithm a);
/// Axes that only change the evaluation policy, not the trained Q.
bool is_evaluation_axis(Algorithm a, std::string_view axis);

std::vector<Cell> expand(const Grid& grid);
/// Canonical text form, e.g. "epsilon_eval=0.1,epsilon_train=1".
std::string cell_label(const Cell& cell);

bool needs_training(Algorithm a);
bool needs_behavior(Algorithm a);
bool needs_uncertainty(Algorithm a);

/// Training schedule shared by every trained algorithm.
struct TrainingSchedule {
  int steps = 100000;
  int target_period = 1000;
  int batch_size = 256;
  double learning_rate = 3e-5;
  int width = 256;
  int depth = 2;
  double gamma = 0.99;
  offrl::QBackend backend = offrl::QBackend::kNeural;
  double u_ceiling = std::numeric_limits<double>::infinity();
};

/// Agent configuration for one cell. Throws ConfigError for unknown axes.
offrl::AgentConfig make_agent_config(Algorithm a, const Cell& cell, const TrainingSchedule& schedule,
                                     std::uint64_t seed);

}  // namespace spibb::harness

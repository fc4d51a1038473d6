#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "spibb/envs/tabular.hpp"

namespace spibb::testing {

/// Exhaustive simplex search for the soft-SPIBB problem, resolution 1e-3 for
/// two actions and 1e-2 for three. Returns the best feasible point found.
std::vector<double> spibb_grid_oracle(std::span<const double> q, std::span<const double> beta,
                                      std::span<const double> u, double epsilon);

/// Optimal Q for reward r(s,a) by value iteration until the sup-norm change
/// is below tol.
Eigen::MatrixXd value_iteration(const envs::TabularMDP& mdp, const Eigen::MatrixXd& reward, double tol = 1e-13);

/// Q of a fixed policy by iterating the Bellman expectation operator.
Eigen::MatrixXd iterative_policy_evaluation(const envs::TabularMDP& mdp, const Eigen::MatrixXd& policy,
                                            double tol = 1e-13);

/// The three ensemble formulas transcribed directly, one loop per sum.
/// residuals[i][k] = f_i(s)_k - p_i(s)_k.
double brute_force_state_uncertainty(const std::vector<std::vector<double>>& residuals, double combo_alpha);

}  // namespace spibb::testing

#pragma once

#include <limits>
#include <span>
#include <vector>

#include "spibb/common/types.hpp"

namespace spibb::offrl {

// Per-state improvement operators. All argmaxes break ties toward the lowest
// action index.

int argmax(std::span<const double> values);

/// Point mass on argmax Q.
std::vector<double> greedy_improve(std::span<const double> q);

/// Point mass on the best action among {a : beta(a)/max beta >= tau}.
std::vector<double> bcq_improve(std::span<const double> q, std::span<const double> beta, double tau);

/// Maximizer of sum_a pi(a) q(a) subject to
/// sum_a u(a) |pi(a) - beta(a)| <= epsilon over the simplex.
///
/// Solved as a transport problem from beta: mass leaving action i for a
/// higher-valued action j gains q_j - q_i and spends u_i + u_j of budget.
/// The single budget constraint is handled by a parametric sweep over its
/// Lagrange multiplier, mixing the two allocations that bracket the budget.
/// If the greedy point mass fits inside the budget it is returned directly.
/// Actions with u above `u_ceiling` never receive mass.
std::vector<double> spibb_improve(std::span<const double> q, std::span<const double> beta,
                                  std::span<const double> u, double epsilon,
                                  double u_ceiling = std::numeric_limits<double>::infinity());

/// sum_a u(a) |pi(a) - beta(a)|
double spibb_cost(std::span<const double> pi, std::span<const double> beta, std::span<const double> u);

/// r + gamma (1 - done) sum_a pi(a) q_next(a)
double plain_target(double reward, bool done, double gamma, std::span<const double> pi_next,
                    std::span<const double> q_next);

/// plain_target - alpha * u(s, a)
double pessimism_target(double reward, bool done, double gamma, std::span<const double> pi_next,
                        std::span<const double> q_next, double alpha, double u_sa);

/// Numerically stable log(sum_a exp(x_a)).
template <typename Scalar>
double log_sum_exp(std::span<const Scalar> x);

/// Fitted-Q regression with an optional CQL term, averaged over the batch:
///
///   (1/B) sum_j [ alpha (logsumexp_a Q(j,a) - Q(j,a_j)) + (Q(j,a_j) - y_j)^2 ]
///
/// Writes d loss / d Q into `grad` (targets are constants). alpha = 0 is the
/// plain squared TD loss.
template <typename Scalar>
double q_loss(const RowMatrix<Scalar>& q, std::span<const int> actions, std::span<const double> targets,
              double cql_alpha, RowMatrix<Scalar>& grad);

extern template double log_sum_exp<float>(std::span<const float>);
extern template double log_sum_exp<double>(std::span<const double>);
extern template double q_loss<float>(const RowMatrixF&, std::span<const int>, std::span<const double>, double,
                                     RowMatrixF&);
extern template double q_loss<double>(const RowMatrixD&, std::span<const int>, std::span<const double>,
                                      double, RowMatrixD&);

}  // namespace spibb::offrl

#include "spibb/offrl/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spibb::offrl {

int argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of an empty row");
  int best = 0;
  for (int a = 1; a < static_cast<int>(values.size()); ++a) {
    if (values[a] > values[best]) best = a;
  }
  return best;
}

std::vector<double> greedy_improve(std::span<const double> q) {
  std::vector<double> pi(q.size(), 0.0);
  pi[argmax(q)] = 1.0;
  return pi;
}

std::vector<double> bcq_improve(std::span<const double> q, std::span<const double> beta, double tau) {
  if (q.size() != beta.size()) throw std::invalid_argument("bcq: q and beta sizes differ");
  const double beta_max = *std::max_element(beta.begin(), beta.end());
  int best = -1;
  for (int a = 0; a < static_cast<int>(q.size()); ++a) {
    if (beta[a] < tau * beta_max) continue;
    if (best < 0 || q[a] > q[best]) best = a;
  }
  std::vector<double> pi(q.size(), 0.0);
  pi[best] = 1.0;
  return pi;
}

double spibb_cost(std::span<const double> pi, std::span<const double> beta, std::span<const double> u) {
  double c = 0.0;
  for (std::size_t a = 0; a < pi.size(); ++a) c += u[a] * std::abs(pi[a] - beta[a]);
  return c;
}

namespace {

// Mass moved out of each source action under a fixed Lagrange multiplier on
// the budget: every source sends all of its behavior mass to the destination
// maximizing gain - lambda * cost, or keeps it if no option is positive.
struct Allocation {
  std::vector<double> pi;
  double cost = 0.0;
};

struct Option {
  int to;
  double gain;
  double cost;
};

Allocation allocate(std::span<const double> beta, const std::vector<std::vector<Option>>& options, double lambda) {
  Allocation out{std::vector<double>(beta.begin(), beta.end()), 0.0};
  for (std::size_t i = 0; i < options.size(); ++i) {
    const Option* best = nullptr;
    double best_score = 0.0;
    for (const Option& o : options[i]) {
      const double score = o.gain - lambda * o.cost;
      if (score > best_score) {
        best = &o;
        best_score = score;
      }
    }
    if (best == nullptr) continue;
    out.pi[i] -= beta[i];
    out.pi[best->to] += beta[i];
    out.cost += beta[i] * best->cost;
  }
  return out;
}

}  // namespace

std::vector<double> spibb_improve(std::span<const double> q, std::span<const double> beta,
                                  std::span<const double> u, double epsilon, double u_ceiling) {
  const int n = static_cast<int>(q.size());
  if (beta.size() != q.size() || u.size() != q.size()) throw std::invalid_argument("spibb: row sizes differ");
  std::vector<double> pi(beta.begin(), beta.end());
  if (!(epsilon > 0.0)) return pi;

  const int g = argmax(q);
  if (u[g] <= u_ceiling || beta[g] >= 1.0) {
    std::vector<double> point(n, 0.0);
    point[g] = 1.0;
    if (spibb_cost(point, beta, u) <= epsilon * (1.0 + 1e-12)) return point;
  }

  // Moving mass from a lower-valued action i to a higher-valued j gains
  // q_j - q_i per unit and costs u_i + u_j of budget.
  std::vector<std::vector<Option>> options(n);
  std::vector<double> breakpoints;
  for (int i = 0; i < n; ++i) {
    if (!(beta[i] > 0.0)) continue;
    for (int j = 0; j < n; ++j) {
      if (!(q[j] > q[i]) || u[j] > u_ceiling) continue;
      options[i].push_back({j, q[j] - q[i], u[i] + u[j]});
    }
    for (std::size_t x = 0; x < options[i].size(); ++x) {
      const Option& a = options[i][x];
      if (a.cost > 0.0) breakpoints.push_back(a.gain / a.cost);
      for (std::size_t y = x + 1; y < options[i].size(); ++y) {
        const Option& b = options[i][y];
        if (a.cost == b.cost) continue;
        const double lambda = (a.gain - b.gain) / (a.cost - b.cost);
        if (lambda > 0.0) breakpoints.push_back(lambda);
      }
    }
  }
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

  // One probe multiplier strictly inside each interval between breakpoints;
  // the allocation is constant on each interval and its cost nonincreasing.
  std::vector<double> probes;
  if (breakpoints.empty()) {
    probes.push_back(1.0);
  } else {
    probes.push_back(0.5 * breakpoints.front());
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k)
      probes.push_back(0.5 * (breakpoints[k] + breakpoints[k + 1]));
    probes.push_back(2.0 * breakpoints.back() + 1.0);
  }

  Allocation previous = allocate(beta, options, probes.front());
  if (previous.cost <= epsilon) return previous.pi;
  for (std::size_t k = 1; k < probes.size(); ++k) {
    Allocation current = allocate(beta, options, probes[k]);
    if (current.cost <= epsilon) {
      // Both allocations maximize the Lagrangian at the breakpoint between
      // them, so the mixture that spends the budget exactly is optimal.
      const double theta = (epsilon - current.cost) / (previous.cost - current.cost);
      for (int a = 0; a < n; ++a) pi[a] = theta * previous.pi[a] + (1.0 - theta) * current.pi[a];
      return pi;
    }
    previous = std::move(current);
  }
  return pi;
}

double plain_target(double reward, bool done, double gamma, std::span<const double> pi_next,
                    std::span<const double> q_next) {
  if (done) return reward;
  double v = 0.0;
  for (std::size_t a = 0; a < pi_next.size(); ++a) v += pi_next[a] * q_next[a];
  return reward + gamma * v;
}

double pessimism_target(double reward, bool done, double gamma, std::span<const double> pi_next,
                        std::span<const double> q_next, double alpha, double u_sa) {
  return plain_target(reward, done, gamma, pi_next, q_next) - alpha * u_sa;
}

template <typename Scalar>
double log_sum_exp(std::span<const Scalar> x) {
  const double m = static_cast<double>(*std::max_element(x.begin(), x.end()));
  double s = 0.0;
  for (Scalar v : x) s += std::exp(static_cast<double>(v) - m);
  return m + std::log(s);
}

template <typename Scalar>
double q_loss(const RowMatrix<Scalar>& q, std::span<const int> actions, std::span<const double> targets,
              double cql_alpha, RowMatrix<Scalar>& grad) {
  const Eigen::Index rows = q.rows();
  const Eigen::Index cols = q.cols();
  if (static_cast<Eigen::Index>(actions.size()) != rows || static_cast<Eigen::Index>(targets.size()) != rows) {
    throw std::invalid_argument("q_loss: batch sizes differ");
  }
  grad.setZero(rows, cols);
  const double inv = 1.0 / static_cast<double>(rows);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < rows; ++j) {
    const int a = actions[j];
    const double td = static_cast<double>(q(j, a)) - targets[j];
    loss += td * td;
    grad(j, a) += static_cast<Scalar>(2.0 * td * inv);
    if (cql_alpha != 0.0) {
      const std::span<const Scalar> row(q.row(j).data(), static_cast<std::size_t>(cols));
      const double lse = log_sum_exp(row);
      loss += cql_alpha * (lse - static_cast<double>(q(j, a)));
      for (Eigen::Index b = 0; b < cols; ++b) {
        const double soft = std::exp(static_cast<double>(q(j, b)) - lse);
        grad(j, b) += static_cast<Scalar>(cql_alpha * (soft - (b == a ? 1.0 : 0.0)) * inv);
      }
    }
  }
  return loss * inv;
}

template double log_sum_exp<float>(std::span<const float>);
template double log_sum_exp<double>(std::span<const double>);
template double q_loss<float>(const RowMatrixF&, std::span<const int>, std::span<const double>, double, RowMatrixF&);
template double q_loss<double>(const RowMatrixD&, std::span<const int>, std::span<const double>, double,
                               RowMatrixD&);

}  // namespace spibb::offrl

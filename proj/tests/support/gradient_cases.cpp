#include "support/gradient_cases.hpp"

#include <random>

#include "spibb/behavior/behavior.hpp"
#include "spibb/nets/losses.hpp"
#include "spibb/offrl/operators.hpp"

namespace spibb::testing {
namespace {

constexpr int kBatch = 12;
constexpr int kInput = 5;
constexpr int kActions = 3;

RowMatrixD random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  RowMatrixD m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

std::vector<int> random_actions(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, kActions - 1);
  std::vector<int> a(kBatch);
  for (int& x : a) x = pick(rng);
  return a;
}

GradientCheck behavior_check(std::mt19937_64& rng) {
  nets::Mlp<double> net({kInput, 16, 16, kActions}, rng());
  const RowMatrixD x = random_matrix(kBatch, kInput, rng);
  const std::vector<int> actions = random_actions(rng);
  RowMatrixD grad;
  behavior::softmax_cross_entropy(net.forward(x), actions, grad);
  const auto analytic = net.backward(grad);
  return check_gradient(net, [&](const nets::Mlp<double>& m) {
    RowMatrixD unused;
    return behavior::softmax_cross_entropy(m.predict(x), actions, unused);
  }, analytic);
}

// Q regression towards fixed targets; targets are built the way training
// builds them so the pessimistic path includes its penalty.
GradientCheck q_check(std::mt19937_64& rng, const std::string& kind) {
  nets::Mlp<double> net({kInput, 16, 16, kActions}, rng());
  const RowMatrixD x = random_matrix(kBatch, kInput, rng);
  const RowMatrixD q_next = random_matrix(kBatch, kActions, rng);
  const std::vector<int> actions = random_actions(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> targets(kBatch);
  for (int j = 0; j < kBatch; ++j) {
    std::vector<double> pi(kActions), qn(kActions);
    double total = 0.0;
    for (int a = 0; a < kActions; ++a) {
      pi[a] = unit(rng) + 0.1;
      total += pi[a];
      qn[a] = q_next(j, a);
    }
    for (double& p : pi) p /= total;
    const double r = unit(rng);
    const bool done = unit(rng) < 0.2;
    targets[j] = kind == "pessimism" ? offrl::pessimism_target(r, done, 0.99, pi, qn, 0.7, unit(rng))
                                     : offrl::plain_target(r, done, 0.99, pi, qn);
  }
  const double cql_alpha = kind == "cql" ? 0.8 : 0.0;
  RowMatrixD grad;
  offrl::q_loss(net.forward(x), actions, targets, cql_alpha, grad);
  const auto analytic = net.backward(grad);
  return check_gradient(net, [&](const nets::Mlp<double>& m) {
    RowMatrixD unused;
    return offrl::q_loss(m.predict(x), actions, targets, cql_alpha, unused);
  }, analytic);
}

GradientCheck ensemble_member_check(std::mt19937_64& rng) {
  constexpr int kOut = 8;
  nets::Mlp<double> prior({kInput, 16, kOut}, rng());
  nets::Mlp<double> member({kInput, 16, 16, kOut}, rng());
  const RowMatrixD x = random_matrix(kBatch, kInput, rng);
  RowMatrixD target = prior.predict(x) + 0.1 * random_matrix(kBatch, kOut, rng);
  RowMatrixD grad;
  nets::mean_squared_error(member.forward(x), target, grad);
  const auto analytic = member.backward(grad);
  return check_gradient(member, [&](const nets::Mlp<double>& m) {
    RowMatrixD unused;
    return nets::mean_squared_error(m.predict(x), target, unused);
  }, analytic);
}

}  // namespace

std::vector<NamedGradientCheck> all_gradient_checks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<NamedGradientCheck> out;
  out.push_back({"behavior softmax cross-entropy", behavior_check(rng)});
  for (const std::string kind : {"plain", "pessimism", "cql"}) out.push_back({"q regression (" + kind + ")", q_check(rng, kind)});
  out.push_back({"ensemble member regression", ensemble_member_check(rng)});
  return out;
}

}  // namespace spibb::testing

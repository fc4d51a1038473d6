#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "spibb/common/error.hpp"
#include "spibb/nets/adam.hpp"
#include "spibb/nets/checkpoint.hpp"
#include "spibb/nets/losses.hpp"
#include "spibb/nets/mlp.hpp"

namespace spibb::nets {
namespace {

RowMatrixD random_inputs(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  RowMatrixD x(rows, cols);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = n(rng);
  return x;
}

TEST(Mlp, ShapesAndInitBounds) {
  Mlp<double> net(mlp_widths(4, 32, 2, 3), 1);
  EXPECT_EQ(net.widths(), (std::vector<int>{4, 32, 32, 3}));
  EXPECT_EQ(net.parameters().size(), 4u * 32 + 32 + 32 * 32 + 32 + 32 * 3 + 3);
  for (const auto& layer : net.parameters().layers) {
    const double bound = std::sqrt(6.0 / layer.weight.rows());
    EXPECT_LE(layer.weight.cwiseAbs().maxCoeff(), bound);
    EXPECT_EQ(layer.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Mlp, ForwardMatchesPredictAndManualComputation) {
  Mlp<double> net({3, 5, 2}, 4);
  const RowMatrixD x = random_inputs(6, 3, 2);
  const RowMatrixD out = net.forward(x);
  EXPECT_EQ(out, net.predict(x));
  const auto& l = net.parameters().layers;
  RowMatrixD h = ((x * l[0].weight).rowwise() + l[0].bias).cwiseMax(0.0);
  RowMatrixD manual = (h * l[1].weight).rowwise() + l[1].bias;
  EXPECT_LT((manual - out).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Mlp, BackwardNeedsForward) {
  Mlp<double> net({3, 5, 2}, 4);
  EXPECT_THROW(net.backward(RowMatrixD::Ones(1, 2)), std::logic_error);
}

TEST(Mlp, RejectsWrongInputWidth) {
  Mlp<double> net({3, 5, 2}, 4);
  EXPECT_ANY_THROW(net.predict(RowMatrixD::Ones(1, 4)));
}

TEST(Mlp, FlattenRoundTripAndCast) {
  Mlp<double> net({3, 5, 2}, 4);
  auto flat = net.parameters().flatten();
  auto copy = Mlp<double>::zeros({3, 5, 2});
  copy.parameters().unflatten(flat);
  EXPECT_EQ(copy.parameters().flatten(), flat);
  const Mlp<float> f = net.cast<float>();
  const RowMatrixD x = random_inputs(4, 3, 1);
  EXPECT_LT((f.predict(x.cast<float>()).cast<double>() - net.predict(x)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Mlp, SameSeedSameWeights) {
  EXPECT_EQ(Mlp<float>({4, 8, 2}, 9).parameters().flatten(), Mlp<float>({4, 8, 2}, 9).parameters().flatten());
  EXPECT_NE(Mlp<float>({4, 8, 2}, 9).parameters().flatten(), Mlp<float>({4, 8, 2}, 10).parameters().flatten());
}

TEST(Adam, MatchesHandComputedUpdates) {
  auto net = Mlp<double>::zeros({1, 1});
  ParameterSet<double> grad = net.parameters().zeros_like();
  AdamState<double> state(net.parameters(), 0.1);
  double m = 0.0, v = 0.0, theta = 0.0;
  for (int t = 1; t <= 5; ++t) {
    const double g = 0.5 * t - 1.0;
    grad.layers[0].weight(0, 0) = g;
    adam_step(net.parameters(), grad, state);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    theta -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(net.parameters().layers[0].weight(0, 0), theta, 1e-12);
  }
  EXPECT_EQ(state.step, 5);
}

TEST(Adam, NonFiniteGradientIsReported) {
  auto net = Mlp<double>::zeros({2, 3, 1});
  ParameterSet<double> grad = net.parameters().zeros_like();
  grad.layers[1].bias(0) = std::numeric_limits<double>::quiet_NaN();
  AdamState<double> state(net.parameters(), 0.1);
  EXPECT_THROW(adam_step(net.parameters(), grad, state), NumericError);
}

TEST(Adam, MinimizesAQuadratic) {
  Mlp<double> net({2, 1}, 3);
  AdamState<double> state(net.parameters(), 0.05);
  const RowMatrixD x = random_inputs(32, 2, 5);
  const RowMatrixD y = x * (Eigen::Vector2d(2.0, -1.0)) + RowMatrixD::Constant(32, 1, 0.5);
  RowMatrixD grad;
  double loss = 0.0;
  for (int i = 0; i < 2000; ++i) {
    loss = mean_squared_error(net.forward(x), y, grad);
    adam_step(net.parameters(), net.backward(grad), state);
  }
  EXPECT_LT(loss, 1e-8);
}

TEST(Losses, HuberPieces) {
  EXPECT_DOUBLE_EQ(huber(0.5), 0.125);
  EXPECT_DOUBLE_EQ(huber(-3.0), 2.5);
  EXPECT_DOUBLE_EQ(huber(3.0, 2.0), 4.0);
}

TEST(Losses, SingleQuantileIsHalfHuber) {
  QuantileConfig c;
  c.enabled = true;
  c.n_quantiles = 1;
  for (double residual : {-2.5, -0.3, 0.0, 0.7, 4.0}) {
    const std::vector<double> q{1.0}, y{1.0 + residual};
    EXPECT_NEAR(quantile_huber_loss(q, y, c).loss, 0.5 * huber(residual), 1e-15);
  }
}

TEST(Losses, QuantileGradientMatchesFiniteDifferences) {
  QuantileConfig c;
  c.enabled = true;
  c.n_quantiles = 5;
  c.kappa = 0.7;
  const std::vector<double> q{-1.0, -0.2, 0.35, 0.9, 2.2}, y{-0.5, 0.1, 0.4, 1.7, 3.0, -2.0};
  const auto base = quantile_huber_loss(q, y, c);
  for (std::size_t i = 0; i < q.size(); ++i) {
    auto up = q, down = q;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    const double fd = (quantile_huber_loss(up, y, c).loss - quantile_huber_loss(down, y, c).loss) / 2e-6;
    EXPECT_NEAR(base.grad[i], fd, 1e-7);
  }
}

TEST(Losses, QuantileHeadIsOptIn) {
  const std::vector<double> q{0.0}, y{1.0};
  EXPECT_THROW(quantile_huber_loss(q, y, QuantileConfig{}), std::logic_error);
}

TEST(Checkpoint, MlpRoundTripAndCorruption) {
  const Mlp<float> net({4, 16, 3}, 8);
  const auto path = std::filesystem::temp_directory_path() / "spibb_mlp_test.bin";
  save_mlp(net, path);
  EXPECT_EQ(load_mlp(path).parameters().flatten(), net.parameters().flatten());
  std::string bytes = io::read_file(path);
  bytes[20] ^= 0x10;
  io::write_file_atomic(path, bytes);
  EXPECT_THROW(load_mlp(path), FormatError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace spibb::nets

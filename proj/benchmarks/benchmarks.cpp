#include <benchmark/benchmark.h>

#include <random>

#include "spibb/nets/losses.hpp"
#include "spibb/nets/mlp.hpp"
#include "spibb/offrl/operators.hpp"
#include "spibb/uncertainty/ensemble.hpp"

namespace {

using namespace spibb;

void BM_SpibbImprove(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> q(n), beta(n), u(n);
  double total = 0.0;
  for (int a = 0; a < n; ++a) {
    q[a] = unit(rng);
    beta[a] = unit(rng);
    u[a] = 0.1 + unit(rng);
    total += beta[a];
  }
  for (double& b : beta) b /= total;
  for (auto _ : state) benchmark::DoNotOptimize(offrl::spibb_improve(q, beta, u, 0.3));
}
BENCHMARK(BM_SpibbImprove)->Arg(2)->Arg(3)->Arg(6)->Arg(18);

void BM_MlpForwardBackward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  nets::Mlp<float> net(nets::mlp_widths(5, 256, 2, 3), 1);
  const RowMatrixF x = RowMatrixF::Random(batch, 5);
  const RowMatrixF target = RowMatrixF::Random(batch, 3);
  RowMatrixF grad;
  for (auto _ : state) {
    nets::mean_squared_error(net.forward(x), target, grad);
    benchmark::DoNotOptimize(net.backward(grad));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(64)->Arg(256);

void BM_EnsembleEvaluate(benchmark::State& state) {
  std::vector<nets::Mlp<float>> members, priors;
  for (int i = 0; i < 5; ++i) {
    members.emplace_back(nets::mlp_widths(5, 256, 2, 64), 10 + i);
    priors.emplace_back(nets::mlp_widths(5, 256, 1, 64), 20 + i);
  }
  const uncertainty::EnsembleUncertainty ensemble(members, priors, 1.0);
  const RowMatrixF x = RowMatrixF::Random(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(ensemble.evaluate(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EnsembleEvaluate)->Arg(256)->Arg(4096);

}  // namespace
BENCHMARK_MAIN();

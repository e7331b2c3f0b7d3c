#include <benchmark/benchmark.h>

#include <pujoint/data.hpp>
#include <pujoint/losses.hpp>
#include <pujoint/mlp.hpp>
#include <pujoint/optimizer.hpp>
#include <pujoint/trainers.hpp>

using namespace pujoint;

namespace {

Matrix batch(std::size_t rows, std::size_t dim) {
  return generate_synthetic({SyntheticKind::two_gaussians, dim, 1.0, 1.0}, rows, 0.5, 7).features;
}

void BM_Forward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  MLPModel model({784, 100, 100, 1}, Activation::relu, 1);
  const auto x = batch(n, 784);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, x));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(256);

void BM_ForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  MLPModel model({784, 100, 100, 1}, Activation::relu, 1);
  const auto x = batch(n, 784);
  const std::vector<double> upstream(n, 1.0 / static_cast<double>(n));
  for (auto _ : state) {
    auto pass = forward_pass(model, x);
    benchmark::DoNotOptimize(backward(model, pass, upstream));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256);

void BM_AmsGradStep(benchmark::State& state) {
  MLPModel model({784, 100, 100, 1}, Activation::relu, 1);
  AmsGrad opt(model, AmsGradConfig{1e-5, 0.9, 0.999, 1e-8});
  const auto x = batch(64, 784);
  const auto g = backward(model, x, std::vector<double>(64, 1e-3));
  for (auto _ : state) opt.step(model, g);
}
BENCHMARK(BM_AmsGradStep);

void BM_JointLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> sp(n / 10 + 1, 0.8), su(n, 0.4), y(n, 0.4);
  for (std::size_t i = 0; i < n; ++i) su[i] = 0.05 + 0.9 * static_cast<double>(i % 97) / 97.0;
  for (auto _ : state) benchmark::DoNotOptimize(joint_loss(sp, su, y, {5.0, 10.0, 2.0}, 0.4));
}
BENCHMARK(BM_JointLoss)->Arg(1024)->Arg(16384);

void BM_NnpuRisk(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> sp(n / 10 + 1, 0.8), su(n);
  for (std::size_t i = 0; i < n; ++i) su[i] = 0.05 + 0.9 * static_cast<double>(i % 97) / 97.0;
  for (auto _ : state) benchmark::DoNotOptimize(nnpu_risk(sp, su, 0.4, Surrogate::sigmoid));
}
BENCHMARK(BM_NnpuRisk)->Arg(1024)->Arg(16384);

// Whole training runs on the synthetic benchmark size, one epoch per iteration.
template <Method M>
void BM_TrainEpoch(benchmark::State& state) {
  auto data = generate_synthetic_counts({SyntheticKind::two_gaussians, 2, 1.2, 1.0}, 800, 800, 3);
  auto split = make_pu_split(data, 100, 1000, 0.4, 4);
  auto [train, val] = split_validation(split, 0.2, 5);
  TrainConfig c;
  c.epochs = static_cast<int>(state.range(0));
  c.update_start = 1;
  c.window = 1;
  for (auto _ : state) {
    if constexpr (M == Method::joint)
      benchmark::DoNotOptimize(train_joint(c, train.sample, val.sample, InitStrategy::class_prior));
    else
      benchmark::DoNotOptimize(train_nnpu(c, train.sample, val.sample));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.SetLabel("items = epochs");
}
BENCHMARK(BM_TrainEpoch<Method::nnpu>)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainEpoch<Method::joint>)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

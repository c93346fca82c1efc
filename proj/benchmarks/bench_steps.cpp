#include <benchmark/benchmark.h>

#include <memory>

#include "sgdvi/data_io.hpp"
#include "sgdvi/entropy.hpp"
#include "sgdvi/models.hpp"
#include "sgdvi/optimizer.hpp"

using namespace sgdvi;

namespace {

// 784-128-10 softmax network on the bundled MNIST subset: 101,770 parameters.
struct MnistNet {
  std::shared_ptr<const Dataset> data;
  std::unique_ptr<MlpObjective> net;
  ParamVector theta;
  BatchSelector batch;

  explicit MnistNet(std::size_t batch_size, std::size_t hidden = 128) {
    data = std::make_shared<const Dataset>(load_idx(SGDVI_DATA_DIR "/mnist5k-images-idx3-ubyte",
                                                    SGDVI_DATA_DIR "/mnist5k-labels-idx1-ubyte", 1000));
    net = make_mlp_classification(data, MlpConfig{hidden, Activation::tanh, 1.0});
    Rng rng(1);
    theta = 0.05 * standard_normal(static_cast<Eigen::Index>(net->dimension()), rng);
    for (std::size_t i = 0; i < batch_size; ++i) batch.indices.push_back(i);
    batch.scale = static_cast<double>(data->size()) / static_cast<double>(batch_size);
  }
};

void BM_GradientStep(benchmark::State& state) {
  MnistNet m(static_cast<std::size_t>(state.range(0)));
  ParamVector g(m.theta.size());
  for (auto _ : state) {
    m.net->value_and_gradient(m.theta, m.batch, g);
    m.theta -= 1e-6 * g;
    benchmark::DoNotOptimize(m.theta.data());
  }
  state.counters["params"] = static_cast<double>(m.theta.size());
}

void BM_Hvp(benchmark::State& state) {
  MnistNet m(static_cast<std::size_t>(state.range(0)));
  Rng rng(2);
  const Vector v = standard_normal(m.theta.size(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(m.net->hessian_vector_product(m.theta, v, m.batch));
}

void BM_ProbeEntropyStep(benchmark::State& state) {
  MnistNet m(static_cast<std::size_t>(state.range(0)));
  Rng rng(3);
  StepJacobianSpec spec;
  spec.alpha = 1e-6;
  for (auto _ : state)
    benchmark::DoNotOptimize(taylor_logdet_lower_bound(*m.net, m.theta, m.batch, spec, rng).value);
  state.counters["params"] = static_cast<double>(m.theta.size());
}

void BM_SgdStepProbe(benchmark::State& state) {
  MnistNet m(static_cast<std::size_t>(state.range(0)));
  RunConfig config;
  config.alpha = 1e-6;
  config.sigma0 = 0.1;
  config.g0 = static_cast<double>(state.range(1));
  EntropyLedger ledger = initialize(config, m.net->dimension()).second;
  Rng rng(4);
  for (auto _ : state) m.theta = sgd_step(*m.net, m.theta, m.batch, config, ledger, rng).theta;
}

// Dense reference path, cubic in D.
void BM_ExactLogdet(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  Rng rng(5);
  Matrix b(d, d);
  for (Eigen::Index j = 0; j < d; ++j) b.col(j) = standard_normal(d, rng);
  const Matrix h = (b + b.transpose()) / (2.0 * std::sqrt(static_cast<double>(d)));
  StepJacobianSpec spec;
  spec.alpha = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(exact_logdet_step(h, spec).value);
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_GradientStep)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Hvp)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProbeEntropyStep)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SgdStepProbe)->Args({100, 0})->Args({100, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExactLogdet)->RangeMultiplier(2)->Range(32, 512)->Complexity(benchmark::oNCubed);
BENCHMARK_MAIN();

//
// Copyright 2026 The fedhkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <benchmark/benchmark.h>

#include "fedhkd/experiment.hpp"
#include "fedhkd/loss.hpp"

using namespace fedhkd;

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  for (auto& v : t.values()) v = rng.next_normal();
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_matrix(n, n, rng);
  const Tensor b = random_matrix(n, n, rng);
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_DenseForwardBackward(benchmark::State& state) {
  Rng rng(2);
  Layer dense = Layer::dense_init(32, 32, rng);
  const Tensor x = random_matrix(64, 32, rng);
  const Tensor grad = random_matrix(64, 32, rng);
  for (auto _ : state) {
    auto [out, cache] = layer_forward(dense, x, Mode::kTrain);
    LayerGrads grads;
    Tensor dx = layer_backward(dense, cache, grad, &grads);
    benchmark::DoNotOptimize(dx.values().data());
  }
}
BENCHMARK(BM_DenseForwardBackward);

void BM_BatchNormForwardBackward(benchmark::State& state) {
  Rng rng(3);
  Layer bn = Layer::batchnorm(32);
  const Tensor x = random_matrix(64, 32, rng);
  const Tensor grad = random_matrix(64, 32, rng);
  for (auto _ : state) {
    auto [out, cache] = layer_forward(bn, x, Mode::kTrain);
    LayerGrads grads;
    Tensor dx = layer_backward(bn, cache, grad, &grads);
    benchmark::DoNotOptimize(dx.values().data());
  }
}
BENCHMARK(BM_BatchNormForwardBackward);

void BM_AdamStep(benchmark::State& state) {
  Rng rng(4);
  Tensor p = random_matrix(64, 64, rng);
  const Tensor g = random_matrix(64, 64, rng);
  std::vector<Tensor*> params{&p};
  AdamState opt{std::span<Tensor* const>(params)};
  const std::vector<Tensor> grads{g};
  const AdamConfig config;
  for (auto _ : state) {
    adam_step(std::span<Tensor* const>(params), grads, opt, config);
    benchmark::DoNotOptimize(p.values().data());
  }
}
BENCHMARK(BM_AdamStep);

void BM_LocalObjective(benchmark::State& state) {
  Rng rng(5);
  SplitModel model = make_mlp_model(16, 32, 8, 10, rng);
  const SplitModel snapshot = model;
  const Tensor x = random_matrix(32, 16, rng);
  std::vector<std::size_t> labels;
  for (int i = 0; i < 32; ++i) labels.push_back(rng.next_below(10));

  GlobalHyperKnowledge knowledge;
  knowledge.classes.assign(10, std::nullopt);
  for (std::size_t j = 0; j < 10; ++j) {
    GlobalClassKnowledge entry;
    entry.repr = Tensor({8});
    for (auto& v : entry.repr.values()) v = rng.next_normal();
    entry.soft = Tensor::full({10}, 0.1);
    knowledge.classes[j] = std::move(entry);
  }
  AlgoSpec algo;
  algo.kind = AlgoKind::kFedHkd;
  for (auto _ : state) {
    LossResult r =
        local_loss(algo, model, x, labels, knowledge, 0.5, &snapshot);
    benchmark::DoNotOptimize(r.loss);
  }
}
BENCHMARK(BM_LocalObjective);

void BM_FederationRound(benchmark::State& state) {
  ExperimentConfig c;
  c.data.classes = 10;
  c.data.dim = 16;
  c.data.per_class = 80;
  c.data.spread = 0.5;
  c.model.hidden = 32;
  c.model.repr_dim = 8;
  c.clients = 8;
  c.concentration = 0.5;
  c.fed.epochs = 5;
  c.fed.batch_size = 32;
  c.fed.algo.kind = AlgoKind::kFedHkd;
  c.fed.algo = c.fed.algo.normalized();
  c.fed.workers = static_cast<std::size_t>(state.range(0));

  const SeedData data = build_seed_data(c, 1);
  const FederationState init = init_federation(
      build_seed_model(c, 16, 10, 1), c.clients, 1);
  for (auto _ : state) {
    FederationState next = run_round(init, data.train, c.fed);
    benchmark::DoNotOptimize(next.round);
  }
}
BENCHMARK(BM_FederationRound)->Arg(1)->Arg(4);

}  // namespace

BENCHMARK_MAIN();

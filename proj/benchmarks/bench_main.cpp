/*
 * Copyright 2026 The tentnet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include "tentnet/autodiff.hpp"
#include "tentnet/graph.hpp"
#include "tentnet/image.hpp"
#include "tentnet/kernels.hpp"
#include "tentnet/rng.hpp"
#include "tentnet/training.hpp"

namespace tentnet {
namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  const std::int64_t size = state.range(0), channels = state.range(1);
  const Tensor x = random_tensor({8, size, size, channels}, 1);
  const Tensor k = random_tensor({3, 3, channels, channels * 2}, 2);
  const Tensor b = random_tensor({channels * 2}, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::conv2d(x, k, b, 1, Padding::kSame));
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv2dForward)->Args({56, 32})->Args({28, 64})->Unit(benchmark::kMillisecond);

void BM_DenseForward(benchmark::State& state) {
  const std::int64_t in = state.range(0);
  const Tensor x = random_tensor({64, in}, 1);
  const Tensor w = random_tensor({in, 128}, 2);
  const Tensor b = random_tensor({128}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::dense(x, w, b));
}
BENCHMARK(BM_DenseForward)->Arg(2048)->Arg(25088)->Unit(benchmark::kMillisecond);

void BM_ResizeBilinear(benchmark::State& state) {
  const Tensor img = random_tensor({480, 640, 3}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(resize_bilinear(img, 224, 224));
}
BENCHMARK(BM_ResizeBilinear)->Unit(benchmark::kMillisecond);

// One forward + backward + Adam step of the custom CNN.
void BM_CustomCnnTrainStep(benchmark::State& state) {
  const std::int64_t size = state.range(0), batch = state.range(1);
  ModelGraph model = build_custom_cnn({size, size}, {"a", "b", "c", "d", "e", "f"});
  init_weights(model, 1);
  Rng rng(5);
  Tensor x({batch, size, size, 3});
  for (float& v : x.data()) v = static_cast<float>(rng.uniform(0.0, 1.0));
  Tensor targets({batch, 6});
  for (std::int64_t i = 0; i < batch; ++i) targets.raw()[i * 6 + i % 6] = 1.0f;
  TrainingConfig config;
  AdamState adam;
  std::uint64_t step = 0;
  for (auto _ : state) {
    ForwardResult f = forward(model, x, true, step++);
    const Var loss = cross_entropy(f.tape, f.output, targets);
    f.tape.backward(loss);
    std::vector<Tensor> grads;
    grads.reserve(f.parameter_vars.size());
    for (const Var v : f.parameter_vars) grads.push_back(f.tape.grad(v));
    adam_step(model, grads, adam, config);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_CustomCnnTrainStep)->Args({64, 16})->Args({224, 4})->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace tentnet

BENCHMARK_MAIN();

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

#include <gtest/gtest.h>

#include <cmath>

#include "synthetic.hpp"
#include "tentnet/error.hpp"
#include "tentnet/graph.hpp"
#include "tentnet/rng.hpp"
#include "tentnet/training.hpp"

namespace tentnet {
namespace {

// input (1,1,2) -> dense 2 -> softmax
ModelGraph tiny_model() {
  std::vector<LayerSpec> layers;
  layers.push_back({"in", InputParams{1, 1, 2}, {}});
  layers.push_back({"fc", DenseParams{2, true}, {"in"}});
  layers.push_back({"out", ActivationParams{Activation::kSoftmax}, {"fc"}});
  return ModelGraph::from_layers(std::move(layers), {"a", "b"});
}

std::vector<Tensor> grads_like(const ModelGraph& g, Rng& rng, double scale) {
  std::vector<Tensor> out;
  for (const Parameter& p : g.parameters()) {
    Tensor t(p.value.shape());
    for (float& v : t.data()) v = static_cast<float>(rng.uniform(-scale, scale));
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Tensor> snapshot(const ModelGraph& g) {
  std::vector<Tensor> out;
  for (const Parameter& p : g.parameters()) out.push_back(p.value);
  return out;
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ModelGraph g = tiny_model();
  init_weights(g, 1);
  const auto before = snapshot(g);
  std::vector<Tensor> zero;
  for (const Parameter& p : g.parameters()) zero.emplace_back(p.value.shape());
  AdamState state;
  for (int i = 0; i < 3; ++i) adam_step(g, zero, state, TrainingConfig{});
  EXPECT_EQ(snapshot(g), before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ModelGraph g = tiny_model();
  Rng rng(2);
  const auto grads = grads_like(g, rng, 1.0);
  const auto before = snapshot(g);
  AdamState state;
  TrainingConfig config;
  adam_step(g, grads, state, config);
  for (std::size_t i = 0; i < grads.size(); ++i)
    for (std::size_t j = 0; j < grads[i].size(); ++j) {
      const double delta = g.parameters()[i].value[j] - before[i][j];
      const double sign = grads[i][j] > 0 ? 1.0 : -1.0;
      EXPECT_NEAR(delta, -config.learning_rate * sign, 1e-9);
    }
}

TEST(Adam, MatchesDoublePrecisionRecurrence) {
  ModelGraph g = tiny_model();
  init_weights(g, 3);
  TrainingConfig config;
  config.learning_rate = 1e-2;
  const auto start = snapshot(g);
  std::vector<std::vector<double>> w, m, v;
  for (const Tensor& t : start) {
    w.emplace_back(t.data().begin(), t.data().end());
    m.emplace_back(t.size(), 0.0);
    v.emplace_back(t.size(), 0.0);
  }
  AdamState state;
  Rng rng(4);
  for (int step = 1; step <= 6; ++step) {
    const auto grads = grads_like(g, rng, 0.5);
    adam_step(g, grads, state, config);
    for (std::size_t i = 0; i < grads.size(); ++i)
      for (std::size_t j = 0; j < grads[i].size(); ++j) {
        const double gj = grads[i][j];
        m[i][j] = 0.9 * m[i][j] + 0.1 * gj;
        v[i][j] = 0.999 * v[i][j] + 0.001 * gj * gj;
        const double mh = m[i][j] / (1 - std::pow(0.9, step));
        const double vh = v[i][j] / (1 - std::pow(0.999, step));
        w[i][j] -= 1e-2 * mh / (std::sqrt(vh) + 1e-8);
        EXPECT_NEAR(g.parameters()[i].value[j], w[i][j], 1e-5) << "step " << step;
      }
  }
}

TEST(Adam, FrozenParameterKeepsValueAndStepCount) {
  ModelGraph g = tiny_model();
  g.set_trainable("fc/bias", false);
  Rng rng(5);
  AdamState state;
  const Tensor bias = g.find_parameter("fc/bias")->value;
  for (int i = 0; i < 3; ++i) adam_step(g, grads_like(g, rng, 1.0), state, TrainingConfig{});
  EXPECT_EQ(g.find_parameter("fc/bias")->value, bias);
  EXPECT_EQ(state.slots.count("fc/bias"), 0u);
  EXPECT_EQ(state.slots.at("fc/kernel").t, 3);
  // Unfreezing starts the bias at its own first step.
  g.set_trainable("fc/bias", true);
  adam_step(g, grads_like(g, rng, 1.0), state, TrainingConfig{});
  EXPECT_EQ(state.slots.at("fc/bias").t, 1);
  EXPECT_EQ(state.slots.at("fc/kernel").t, 4);
}

TEST(Adam, RejectsMismatchedGradients) {
  ModelGraph g = tiny_model();
  AdamState state;
  EXPECT_THROW(adam_step(g, std::vector<Tensor>{}, state, TrainingConfig{}), ShapeError);
}

TEST(Config, Validation) {
  TrainingConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), InputError);
}

TEST(Schedule, Validation) {
  ModelGraph g = tiny_model();
  EXPECT_THROW(PhaseSchedule::single(0).validate(g), InputError);
  EXPECT_THROW(PhaseSchedule{}.validate(g), InputError);
  EXPECT_THROW(PhaseSchedule::two_phase(1, 1).validate(g), InputError);  // no backbone/
  EXPECT_NO_THROW(PhaseSchedule::two_phase(1, 1, "fc/").validate(g));
  EXPECT_EQ(PhaseSchedule::two_phase(10, 20).total_epochs(), 30);
}

TEST(History, BestIndexTieBreaks) {
  TrainingHistory h;
  EXPECT_FALSE(h.best_index().has_value());
  auto rec = [](double acc, double loss) {
    EpochRecord r;
    r.val_accuracy = acc;
    r.val_loss = loss;
    return r;
  };
  h.epochs = {rec(0.5, 1.0), rec(0.8, 0.7), rec(0.8, 0.6), rec(0.8, 0.6), rec(0.7, 0.1)};
  EXPECT_EQ(h.best_index(), 2u);
}

class FitTest : public ::testing::Test {
 protected:
  static constexpr std::int64_t kSize = 12;
  FitTest()
      : train_(testing::shape_samples(3, kSize, 1, 3)), val_(testing::shape_samples(2, kSize, 2, 3)) {}

  static ModelGraph model() {
    ModelGraph g = build_custom_cnn({kSize, kSize}, {"x", "y", "z"});
    init_weights(g, 7);
    return g;
  }

  TensorSamples train_;
  TensorSamples val_;
};

TEST_F(FitTest, ZeroLearningRateKeepsWeights) {
  ModelGraph g = model();
  const auto before = snapshot(g);
  TrainingConfig config;
  config.learning_rate = 0.0;
  config.batch_size = 4;
  config.l2_lambda = 0.01;
  fit(g, train_, val_, config, PhaseSchedule::single(2));
  EXPECT_EQ(snapshot(g), before);
}

TEST_F(FitTest, HistoryLengthAndPhases) {
  ModelGraph backbone = load_manifest(TENTNET_DATA_DIR "/tinynet.manifest");
  init_weights(backbone, 1);
  TensorSamples train = testing::shape_samples(2, 32, 3, 3);
  TensorSamples val = testing::shape_samples(1, 32, 4, 3);
  ModelGraph m = build_transfer_model(backbone, {"x", "y", "z"}, 8, 0.5, 2);
  TrainingConfig config;
  config.batch_size = 4;
  std::vector<std::int64_t> phases;
  FitOptions options;
  options.on_epoch = [&](const EpochRecord& r) { phases.push_back(r.phase); };
  const FitResult r = fit(m, train, val, config, PhaseSchedule::two_phase(2, 3), options);
  ASSERT_EQ(r.history.epochs.size(), 5u);
  EXPECT_EQ(phases, (std::vector<std::int64_t>{1, 1, 2, 2, 2}));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.history.epochs[i].epoch, static_cast<std::int64_t>(i + 1));
  EXPECT_EQ(r.best_epoch, *r.history.best_index() + 1);
  EXPECT_EQ(r.best_parameters.size(), m.parameters().size());
}

TEST_F(FitTest, DeterministicForFixedSeed) {
  TrainingConfig config;
  config.batch_size = 4;
  config.learning_rate = 1e-3;
  config.seed = 9;
  ModelGraph a = model(), b = model();
  const FitResult ra = fit(a, train_, val_, config, PhaseSchedule::single(2));
  const FitResult rb = fit(b, train_, val_, config, PhaseSchedule::single(2));
  EXPECT_EQ(a.parameter_hash(), b.parameter_hash());
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(ra.history.epochs[i].train_loss, rb.history.epochs[i].train_loss);
    EXPECT_EQ(ra.history.epochs[i].val_accuracy, rb.history.epochs[i].val_accuracy);
  }
}

TEST_F(FitTest, InitialLossIsNearLogK) {
  // The zero-initialized logits kernel gives uniform predictions.
  const ModelGraph g = model();
  TrainingConfig config;
  const EpochStats s = evaluate_loss(g, val_, config);
  EXPECT_NEAR(s.loss, std::log(3.0), 1e-6);
}

TEST_F(FitTest, OverfitsOneSample) {
  auto one = testing::shape_samples(1, kSize, 5, 3);
  TensorSamples single({one.image(0)}, {one.label(0)}, 3);
  ModelGraph g = build_custom_cnn({kSize, kSize}, {"x", "y", "z"}, 0.0);
  init_weights(g, 7);
  TrainingConfig config;
  config.learning_rate = 1e-3;
  config.batch_size = 1;
  AdamState state;
  double last = 0.0;
  for (std::int64_t e = 0; e < 60; ++e) last = train_epoch(g, single, config, e, state).loss;
  EXPECT_LT(last, 0.05);
  EXPECT_EQ(evaluate_loss(g, single, config).accuracy, 1.0);
}

TEST_F(FitTest, MismatchedClassCountIsRejected) {
  ModelGraph g = build_custom_cnn({kSize, kSize}, {"x", "y"});
  EXPECT_THROW(fit(g, train_, val_, TrainingConfig{}, PhaseSchedule::single(1)), InputError);
}

}  // namespace
}  // namespace tentnet

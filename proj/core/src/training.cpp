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

#include "tentnet/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "tentnet/error.hpp"
#include "tentnet/rng.hpp"
#include "tentnet/weights.hpp"

namespace tentnet {

namespace {

constexpr std::uint64_t kShuffleTag = 0x73687566666c65ULL;
constexpr std::uint64_t kDropoutTag = 0x64726f706f7574ULL;

std::int64_t argmax_row(const float* row, std::int64_t k) {
  std::int64_t best = 0;
  for (std::int64_t j = 1; j < k; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

std::size_t count_correct(const Tensor& probs, const Tensor& targets) {
  const std::int64_t n = probs.dim(0), k = probs.dim(1);
  std::size_t correct = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t pred = argmax_row(probs.raw() + i * k, k);
    if (targets.raw()[i * k + pred] == 1.0f) ++correct;
  }
  return correct;
}

std::vector<Var> regularized_vars(const ModelGraph& model, const ForwardResult& fr) {
  std::vector<Var> vars;
  const auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].trainable && params[i].is_regularized()) vars.push_back(fr.parameter_vars[i]);
  }
  return vars;
}

void check_samples(const ModelGraph& model, const SampleSource& samples, const char* what) {
  if (samples.size() == 0) throw InputError(std::string(what) + " set is empty");
  if (samples.num_classes() != model.class_names().size()) {
    throw InputError(std::string(what) + " set has " + std::to_string(samples.num_classes()) +
                     " classes, model has " + std::to_string(model.class_names().size()));
  }
}

}  // namespace

void TrainingConfig::validate() const {
  if (!(learning_rate >= 0.0 && std::isfinite(learning_rate))) {
    throw InputError("learning rate must be finite and non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InputError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InputError("Adam epsilon must be positive");
  if (batch_size < 1) throw InputError("batch size must be at least 1");
  if (!(l2_lambda >= 0.0)) throw InputError("L2 lambda must be non-negative");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw InputError("dropout rate must lie in [0, 1)");
  }
}

std::int64_t PhaseSchedule::total_epochs() const {
  std::int64_t total = 0;
  for (const Phase& p : phases) total += p.epochs;
  return total;
}

void PhaseSchedule::validate(const ModelGraph& model) const {
  if (phases.empty()) throw InputError("training schedule has no phases");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].epochs < 0) {
      throw InputError("phase " + std::to_string(i + 1) + " has a negative epoch count");
    }
    for (const auto* list : {&phases[i].freeze_prefixes, &phases[i].unfreeze_prefixes}) {
      for (const std::string& prefix : *list) {
        if (model.count_matching(prefix) == 0) {
          throw InputError("phase " + std::to_string(i + 1) + ": prefix '" + prefix +
                           "' matches no parameter");
        }
      }
    }
  }
  if (total_epochs() <= 0) throw InputError("training schedule has zero epochs");
}

PhaseSchedule PhaseSchedule::single(std::int64_t epochs) {
  return PhaseSchedule{{Phase{epochs, {}, {}}}};
}

PhaseSchedule PhaseSchedule::two_phase(std::int64_t frozen_epochs, std::int64_t finetune_epochs,
                                       const std::string& frozen_prefix) {
  return PhaseSchedule{{Phase{frozen_epochs, {frozen_prefix}, {}},
                        Phase{finetune_epochs, {}, {""}}}};
}

std::optional<std::size_t> TrainingHistory::best_index() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (!best || epochs[i].val_accuracy > epochs[*best].val_accuracy ||
        (epochs[i].val_accuracy == epochs[*best].val_accuracy &&
         epochs[i].val_loss < epochs[*best].val_loss)) {
      best = i;
    }
  }
  return best;
}

void adam_step(ModelGraph& model, std::span<const Tensor> grads, AdamState& state,
               const TrainingConfig& config) {
  auto& params = model.parameters();
  if (grads.size() != params.size()) {
    throw ShapeError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].value.shape()) {
      throw ShapeError("adam_step: gradient of '" + params[i].name + "' has shape " +
                       to_string(grads[i].shape()) + ", parameter " +
                       to_string(params[i].value.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (!p.trainable || p.is_statistic()) continue;
    AdamSlot& slot = state.slots[p.name];
    if (slot.m.shape() != p.value.shape()) {
      slot = AdamSlot{zeros_like(p.value), zeros_like(p.value), 0};
    }
    ++slot.t;
    const double b1 = config.beta1, b2 = config.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(slot.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(slot.t));
    float* w = p.value.raw();
    float* m = slot.m.raw();
    float* v = slot.v.raw();
    const float* g = grads[i].raw();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double gj = g[j];
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double update = config.learning_rate * (mj / c1) / (std::sqrt(vj / c2) + config.epsilon);
      w[j] = static_cast<float>(w[j] - update);
    }
  }
}

TensorSamples::TensorSamples(std::vector<Tensor> images, std::vector<std::int64_t> labels,
                             std::size_t num_classes)
    : images_(std::move(images)), labels_(std::move(labels)), num_classes_(num_classes) {
  if (images_.size() != labels_.size()) {
    throw InputError("TensorSamples: " + std::to_string(images_.size()) + " images but " +
                     std::to_string(labels_.size()) + " labels");
  }
  for (std::int64_t label : labels_) {
    if (label < 0 || label >= static_cast<std::int64_t>(num_classes_)) {
      throw InputError("TensorSamples: label " + std::to_string(label) + " out of range");
    }
  }
}

std::pair<Tensor, Tensor> make_batch(SampleSource& samples, std::span<const std::size_t> indices) {
  std::vector<Tensor> images;
  images.reserve(indices.size());
  const auto k = static_cast<std::int64_t>(samples.num_classes());
  Tensor targets(Shape{static_cast<std::int64_t>(indices.size()), k});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    images.push_back(samples.image(indices[i]));
    targets[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(samples.label(indices[i]))] = 1.0f;
  }
  return {stack(images), std::move(targets)};
}

EpochStats train_epoch(ModelGraph& model, SampleSource& samples, const TrainingConfig& config,
                       std::int64_t epoch_index, AdamState& state) {
  config.validate();
  check_samples(model, samples, "training");
  const std::size_t n = samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed({config.seed, static_cast<std::uint64_t>(epoch_index), kShuffleTag}));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const auto batch = static_cast<std::size_t>(config.batch_size);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
    const std::span<const std::size_t> idx(order.data() + start, std::min(batch, n - start));
    auto [x, targets] = make_batch(samples, idx);
    ForwardResult fr = forward(
        model, x, true,
        derive_seed({config.seed, static_cast<std::uint64_t>(epoch_index), b, kDropoutTag}));
    const std::vector<Var> reg = regularized_vars(model, fr);
    const Var loss = loss_ce_l2(fr.tape, fr.output, targets, reg, config.l2_lambda);
    fr.tape.backward(loss);
    std::vector<Tensor> grads;
    grads.reserve(fr.parameter_vars.size());
    for (Var v : fr.parameter_vars) grads.push_back(fr.tape.grad(v));
    adam_step(model, grads, state, config);
    loss_sum += static_cast<double>(fr.tape.value(loss).item()) * static_cast<double>(idx.size());
    correct += count_correct(fr.tape.value(fr.output), targets);
  }
  return {loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

EpochStats evaluate_loss(const ModelGraph& model, SampleSource& samples,
                         const TrainingConfig& config) {
  check_samples(model, samples, "validation");
  double penalty = 0.0;
  for (const Parameter& p : model.parameters()) {
    if (!p.trainable || !p.is_regularized()) continue;
    for (float v : p.value.data()) penalty += static_cast<double>(v) * v;
  }
  const std::size_t n = samples.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> idx;
  double ce_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < n; start += batch) {
    idx.clear();
    for (std::size_t i = start; i < std::min(n, start + batch); ++i) idx.push_back(i);
    auto [x, targets] = make_batch(samples, idx);
    const Tensor probs = predict(model, x);
    ce_sum += kernels::cross_entropy(probs, targets) * static_cast<double>(idx.size());
    correct += count_correct(probs, targets);
  }
  return {ce_sum / static_cast<double>(n) + config.l2_lambda * penalty,
          static_cast<double>(correct) / static_cast<double>(n)};
}

void restore_parameters(ModelGraph& model, const std::vector<Tensor>& values) {
  auto& params = model.parameters();
  if (values.size() != params.size()) throw ShapeError("restore_parameters: count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].shape() != params[i].value.shape()) {
      throw ShapeError("restore_parameters: shape mismatch for '" + params[i].name + "'");
    }
    params[i].value = values[i];
  }
}

FitResult fit(ModelGraph& model, SampleSource& train, SampleSource& val,
              const TrainingConfig& config, const PhaseSchedule& schedule,
              const FitOptions& options) {
  config.validate();
  schedule.validate(model);
  check_samples(model, train, "training");
  check_samples(model, val, "validation");

  FitResult result;
  AdamState state;
  std::int64_t epoch = 0;
  for (std::size_t phase = 0; phase < schedule.phases.size(); ++phase) {
    const Phase& spec = schedule.phases[phase];
    std::map<std::string, bool> before;
    for (const Parameter& p : model.parameters()) before[p.name] = p.trainable;
    for (const std::string& prefix : spec.freeze_prefixes) model.set_trainable(prefix, false);
    for (const std::string& prefix : spec.unfreeze_prefixes) model.set_trainable(prefix, true);
    for (const Parameter& p : model.parameters()) {
      if (p.trainable && !before[p.name]) state.reset(p.name);
    }

    for (std::int64_t e = 0; e < spec.epochs; ++e) {
      const auto start = std::chrono::steady_clock::now();
      EpochRecord record;
      record.epoch = ++epoch;
      record.phase = static_cast<std::int64_t>(phase) + 1;
      const EpochStats tr = train_epoch(model, train, config, epoch - 1, state);
      const EpochStats va = evaluate_loss(model, val, config);
      record.train_loss = tr.loss;
      record.train_accuracy = tr.accuracy;
      record.val_loss = va.loss;
      record.val_accuracy = va.accuracy;
      record.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.history.epochs.push_back(record);

      const bool improved = result.history.best_index() == result.history.epochs.size() - 1;
      if (improved) {
        result.best_epoch = static_cast<std::size_t>(record.epoch);
        result.best_parameters.clear();
        for (const Parameter& p : model.parameters()) result.best_parameters.push_back(p.value);
      }
      if (options.checkpoint_dir) {
        const auto& dir = *options.checkpoint_dir;
        save_weights(model, dir / ("epoch_" + std::to_string(record.epoch) + ".tgwa"));
        if (improved) save_weights(model, dir / "best.tgwa");
      }
      if (options.on_epoch) options.on_epoch(record);
    }
  }
  if (options.checkpoint_dir) save_weights(model, *options.checkpoint_dir / "final.tgwa");
  return result;
}

}  // namespace tentnet

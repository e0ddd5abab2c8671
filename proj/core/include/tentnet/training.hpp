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

#ifndef TENTNET_TRAINING_HPP_
#define TENTNET_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tentnet/augment.hpp"
#include "tentnet/dataset.hpp"
#include "tentnet/graph.hpp"
#include "tentnet/tensor.hpp"

namespace tentnet {

struct TrainingConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t batch_size = 64;
  double l2_lambda = 0.0;
  double dropout_rate = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Phase {
  std::int64_t epochs = 0;
  std::vector<std::string> freeze_prefixes;
  std::vector<std::string> unfreeze_prefixes;
};

struct PhaseSchedule {
  std::vector<Phase> phases;

  std::int64_t total_epochs() const;
  // Throws InputError when the schedule is empty or a prefix resolves to no
  // parameter of `model`.
  void validate(const ModelGraph& model) const;

  static PhaseSchedule single(std::int64_t epochs);
  // Phase 1 freezes `frozen_prefix`; phase 2 unfreezes everything.
  static PhaseSchedule two_phase(std::int64_t frozen_epochs, std::int64_t finetune_epochs,
                                 const std::string& frozen_prefix = std::string(kBackbonePrefix));
};

struct EpochRecord {
  std::int64_t epoch = 0;  // 1-based, counted across phases
  std::int64_t phase = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_seconds = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;

  // Highest val accuracy, ties to lower val loss, then to the earlier epoch.
  std::optional<std::size_t> best_index() const;
};

struct AdamSlot {
  Tensor m;
  Tensor v;
  std::int64_t t = 0;
};

// Moments keyed by parameter name.
struct AdamState {
  std::map<std::string, AdamSlot> slots;

  void reset(const std::string& name) { slots.erase(name); }
};

// One Adam update of every trainable parameter. `grads` is parallel to
// model.parameters(); gradients of frozen parameters are ignored.
void adam_step(ModelGraph& model, std::span<const Tensor> grads, AdamState& state,
               const TrainingConfig& config);

// Random-access labeled images, each (h,w,3) at the model's input size.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual std::int64_t label(std::size_t i) const = 0;
  virtual Tensor image(std::size_t i) = 0;
};

class DatasetSamples : public SampleSource {
 public:
  DatasetSamples(Dataset dataset, ImageSize size) : dataset_(std::move(dataset)), loader_(size) {}

  std::size_t size() const override { return dataset_.items.size(); }
  std::size_t num_classes() const override { return dataset_.num_classes(); }
  std::int64_t label(std::size_t i) const override { return dataset_.items.at(i).class_index; }
  Tensor image(std::size_t i) override { return loader_.load(dataset_.items.at(i)); }
  const Dataset& dataset() const { return dataset_; }

 private:
  Dataset dataset_;
  ImageLoader loader_;
};

class TensorSamples : public SampleSource {
 public:
  TensorSamples(std::vector<Tensor> images, std::vector<std::int64_t> labels,
                std::size_t num_classes);

  std::size_t size() const override { return images_.size(); }
  std::size_t num_classes() const override { return num_classes_; }
  std::int64_t label(std::size_t i) const override { return labels_.at(i); }
  Tensor image(std::size_t i) override { return images_.at(i); }

 private:
  std::vector<Tensor> images_;
  std::vector<std::int64_t> labels_;
  std::size_t num_classes_;
};

// Stacks the listed samples into an (n,h,w,3) batch and one-hot targets.
std::pair<Tensor, Tensor> make_batch(SampleSource& samples, std::span<const std::size_t> indices);

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

// One pass over `samples` in an order shuffled by (config.seed, epoch_index).
// The loss is cross-entropy plus the L2 penalty on regularized parameters,
// averaged over items.
EpochStats train_epoch(ModelGraph& model, SampleSource& samples, const TrainingConfig& config,
                       std::int64_t epoch_index, AdamState& state);

// Loss (cross-entropy plus L2 penalty) and accuracy with training=false.
EpochStats evaluate_loss(const ModelGraph& model, SampleSource& samples,
                         const TrainingConfig& config);

struct FitOptions {
  // When set, epoch_<n>.tgwa, best.tgwa and final.tgwa are written here.
  std::optional<std::filesystem::path> checkpoint_dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
  TrainingHistory history;
  std::size_t best_epoch = 0;  // 1-based
  // Parameter values at the best epoch, parallel to model.parameters().
  std::vector<Tensor> best_parameters;
};

// Runs the schedule. The model ends holding the final-epoch weights.
FitResult fit(ModelGraph& model, SampleSource& train, SampleSource& val,
              const TrainingConfig& config, const PhaseSchedule& schedule,
              const FitOptions& options = {});

// Copies `values` (parallel to model.parameters()) into the model.
void restore_parameters(ModelGraph& model, const std::vector<Tensor>& values);

}  // namespace tentnet

#endif  // TENTNET_TRAINING_HPP_

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

#ifndef TENTNET_METRICS_HPP_
#define TENTNET_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tentnet/dataset.hpp"
#include "tentnet/graph.hpp"
#include "tentnet/tensor.hpp"

namespace tentnet {

class SampleSource;

// Probability rows for n examples over k classes.
struct PredictionSet {
  Tensor scores;  // (n,k)
  std::vector<std::int64_t> true_labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return true_labels.size(); }
  std::size_t num_classes() const { return class_names.size(); }
  // Throws InputError on empty sets, shape mismatch, labels out of range or
  // rows that do not sum to 1 within 1e-5.
  void validate() const;
};

// Argmax with ties going to the lowest index.
std::int64_t argmax(std::span<const float> row);

struct ConfusionMatrix {
  std::size_t k = 0;
  std::vector<std::int64_t> counts;  // row-major, rows = true class

  std::int64_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * k + predicted]; }
  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(std::size_t truth) const;
  std::int64_t column_sum(std::size_t predicted) const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_matrix(const PredictionSet& preds);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;  // true examples of the class
  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

struct ClassificationMetrics {
  std::vector<ClassScores> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  friend bool operator==(const ClassificationMetrics&, const ClassificationMetrics&) = default;
};

// Any 0/0 ratio is taken as 0. Macro values are unweighted class means.
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

// Mean of precision at the rank of each positive after a stable descending
// sort by score. Throws InputError when there are no positives.
double average_precision(std::span<const float> scores, std::span<const std::uint8_t> labels);

struct MeanAveragePrecision {
  // One-vs-rest AP per class; nullopt for classes without positives.
  std::vector<std::optional<double>> per_class;
  // Mean over classes with a value; nullopt when no class has one.
  std::optional<double> mean;
  std::vector<std::string> warnings;
};

MeanAveragePrecision mean_average_precision(const PredictionSet& preds);

struct MetricsReport {
  std::vector<std::string> class_names;
  std::int64_t num_examples = 0;
  double accuracy = 0.0;
  double mean_loss = 0.0;  // cross-entropy only
  ClassificationMetrics classification;
  std::vector<std::optional<double>> average_precision;
  std::optional<double> mean_average_precision;
  ConfusionMatrix confusion;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport build_report(const PredictionSet& preds);

// Runs the model (training=false) over every sample in index order.
PredictionSet collect_predictions(const ModelGraph& model, SampleSource& samples,
                                  std::int64_t batch_size);

// Requires the dataset's class names to equal the model's.
MetricsReport evaluate(const ModelGraph& model, const Dataset& dataset, std::int64_t batch_size);

}  // namespace tentnet

#endif  // TENTNET_METRICS_HPP_

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

#include "tentnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tentnet/error.hpp"
#include "tentnet/kernels.hpp"
#include "tentnet/training.hpp"

namespace tentnet {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void PredictionSet::validate() const {
  const std::size_t n = true_labels.size(), k = class_names.size();
  if (n == 0) throw InputError("prediction set is empty");
  if (k == 0) throw InputError("prediction set has no classes");
  if (scores.shape() != Shape{static_cast<std::int64_t>(n), static_cast<std::int64_t>(k)}) {
    throw InputError("scores have shape " + to_string(scores.shape()) + ", expected (" +
                     std::to_string(n) + "," + std::to_string(k) + ")");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (true_labels[i] < 0 || true_labels[i] >= static_cast<std::int64_t>(k)) {
      throw InputError("label " + std::to_string(true_labels[i]) + " of example " +
                       std::to_string(i) + " is outside [0, " + std::to_string(k) + ")");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += scores.raw()[i * k + j];
    if (!(std::abs(sum - 1.0) <= 1e-5)) {
      throw InputError("score row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

std::int64_t argmax(std::span<const float> row) {
  if (row.empty()) throw InputError("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return static_cast<std::int64_t>(best);
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < k; ++i) t += at(i, i);
  return t;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::int64_t s = 0;
  for (std::size_t j = 0; j < k; ++j) s += at(truth, j);
  return s;
}

std::int64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < k; ++i) s += at(i, predicted);
  return s;
}

ConfusionMatrix confusion_matrix(const PredictionSet& preds) {
  preds.validate();
  const std::size_t k = preds.num_classes();
  ConfusionMatrix cm{k, std::vector<std::int64_t>(k * k, 0)};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto pred = static_cast<std::size_t>(
        argmax(std::span<const float>(preds.scores.raw() + i * k, k)));
    ++cm.counts[static_cast<std::size_t>(preds.true_labels[i]) * k + pred];
  }
  return cm;
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
  if (cm.k == 0 || cm.counts.size() != cm.k * cm.k) throw InputError("malformed confusion matrix");
  if (cm.total() < 1) throw InputError("confusion matrix is empty");
  ClassificationMetrics m;
  for (std::size_t c = 0; c < cm.k; ++c) {
    const std::int64_t tp = cm.at(c, c);
    ClassScores s;
    s.support = cm.row_sum(c);
    s.precision = ratio(tp, cm.column_sum(c));
    s.recall = ratio(tp, s.support);
    const double denom = s.precision + s.recall;
    s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
    m.macro_precision += s.precision;
    m.macro_recall += s.recall;
    m.macro_f1 += s.f1;
    m.per_class.push_back(s);
  }
  const auto k = static_cast<double>(cm.k);
  m.macro_precision /= k;
  m.macro_recall /= k;
  m.macro_f1 /= k;
  m.accuracy = ratio(cm.trace(), cm.total());
  return m;
}

double average_precision(std::span<const float> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw InputError("average_precision: " + std::to_string(scores.size()) + " scores but " +
                     std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::int64_t hits = 0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) throw InputError("average_precision: no positive examples");
  return sum / static_cast<double>(hits);
}

MeanAveragePrecision mean_average_precision(const PredictionSet& preds) {
  preds.validate();
  const std::size_t n = preds.size(), k = preds.num_classes();
  MeanAveragePrecision result;
  std::vector<float> column(n);
  std::vector<std::uint8_t> positive(n);
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < k; ++c) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = preds.scores.raw()[i * k + c];
      positive[i] = preds.true_labels[i] == static_cast<std::int64_t>(c) ? 1 : 0;
      any = any || positive[i] != 0;
    }
    if (!any) {
      result.per_class.push_back(std::nullopt);
      result.warnings.push_back("class '" + preds.class_names[c] +
                                "' has no positive examples; excluded from mAP");
      continue;
    }
    const double ap = average_precision(column, positive);
    result.per_class.push_back(ap);
    sum += ap;
    ++counted;
  }
  if (counted > 0) result.mean = sum / static_cast<double>(counted);
  return result;
}

MetricsReport build_report(const PredictionSet& preds) {
  preds.validate();
  MetricsReport report;
  report.class_names = preds.class_names;
  report.num_examples = static_cast<std::int64_t>(preds.size());
  report.confusion = confusion_matrix(preds);
  report.classification = classification_metrics(report.confusion);
  report.accuracy = report.classification.accuracy;
  Tensor targets(preds.scores.shape());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    targets[i * preds.num_classes() + static_cast<std::size_t>(preds.true_labels[i])] = 1.0f;
  }
  report.mean_loss = kernels::cross_entropy(preds.scores, targets);
  MeanAveragePrecision map = mean_average_precision(preds);
  report.average_precision = std::move(map.per_class);
  report.mean_average_precision = map.mean;
  return report;
}

PredictionSet collect_predictions(const ModelGraph& model, SampleSource& samples,
                                  std::int64_t batch_size) {
  if (batch_size < 1) throw InputError("batch size must be at least 1");
  const std::size_t n = samples.size();
  if (n == 0) throw InputError("cannot evaluate on an empty dataset");
  const std::size_t k = model.class_names().size();
  if (samples.num_classes() != k) {
    throw InputError("dataset has " + std::to_string(samples.num_classes()) +
                     " classes, model has " + std::to_string(k));
  }
  PredictionSet preds;
  preds.class_names = model.class_names();
  std::vector<float> scores;
  scores.reserve(n * k);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
    idx.clear();
    for (std::size_t i = start; i < std::min(n, start + static_cast<std::size_t>(batch_size)); ++i) {
      idx.push_back(i);
      preds.true_labels.push_back(samples.label(i));
    }
    const Tensor probs = predict(model, make_batch(samples, idx).first);
    scores.insert(scores.end(), probs.data().begin(), probs.data().end());
  }
  preds.scores = Tensor(Shape{static_cast<std::int64_t>(n), static_cast<std::int64_t>(k)},
                        std::move(scores));
  return preds;
}

MetricsReport evaluate(const ModelGraph& model, const Dataset& dataset, std::int64_t batch_size) {
  if (dataset.items.empty()) throw InputError("cannot evaluate on an empty dataset");
  if (dataset.class_names != model.class_names()) {
    std::string names;
    for (const std::string& c : dataset.class_names) names += (names.empty() ? "" : ", ") + c;
    throw InputError("dataset classes [" + names + "] do not match the model's classes");
  }
  DatasetSamples samples(dataset, model.input_size());
  return build_report(collect_predictions(model, samples, batch_size));
}

}  // namespace tentnet

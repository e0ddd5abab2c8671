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

#ifndef TENTNET_TESTS_METRICS_ORACLE_HPP_
#define TENTNET_TESTS_METRICS_ORACLE_HPP_

// Brute-force metrics written from the definitions, sharing nothing with the
// library: ranks are counted pairwise instead of sorting, and every count is
// a full scan.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tentnet/metrics.hpp"

namespace tentnet::testing {

struct OracleMetrics {
  std::vector<std::vector<std::int64_t>> confusion;  // [truth][predicted]
  double accuracy = 0.0;
  std::vector<double> precision, recall, f1;
  std::vector<std::int64_t> support;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  std::vector<std::optional<double>> ap;
  std::optional<double> map;
};

OracleMetrics oracle_metrics(const PredictionSet& preds);

// AP of binary labels by pairwise rank counting (ties keep input order).
double oracle_average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

// Random valid PredictionSet. Scores are drawn from a few levels so ties in
// argmax and ranking occur often; some classes may have no examples.
PredictionSet random_prediction_set(std::uint64_t seed);

// Differences between the library and the oracle: counts compared exactly,
// rates within `tolerance`. Empty when they agree.
std::vector<std::string> compare_with_oracle(const PredictionSet& preds, double tolerance);

}  // namespace tentnet::testing

#endif  // TENTNET_TESTS_METRICS_ORACLE_HPP_

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

#ifndef TENTNET_REPORT_HPP_
#define TENTNET_REPORT_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "tentnet/metrics.hpp"
#include "tentnet/training.hpp"

namespace tentnet {

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& text);
MetricsReport read_metrics_json(const std::filesystem::path& path);

// class,precision,recall,f1,ap,support with a final "macro" row whose ap
// column holds the mAP.
std::string metrics_csv(const MetricsReport& report);
// k x k counts with class-name header row and first column.
std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);

// epoch,phase,train_loss,train_acc,val_loss,val_acc
std::string history_csv(const TrainingHistory& history);
TrainingHistory parse_history_csv(const std::string& text);
TrainingHistory read_history_csv(const std::filesystem::path& path);

struct NamedHistory {
  std::string name;
  TrainingHistory history;
};

// Two panels (accuracy, loss) against epoch, each with a train and a val
// polyline per run.
std::string curves_svg(const std::vector<NamedHistory>& runs);

// Writes metrics.json, metrics.csv, confusion.csv and curves.svg into outdir.
void export_report(const MetricsReport& report, const TrainingHistory& history,
                   const std::filesystem::path& outdir, const std::string& run_name = "model");

struct ComparisonRow {
  std::string run;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double val_loss = 0.0;
  double test_loss = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> map;
};

// Train/val values from the best epoch of the history, test values from the
// metrics report.
ComparisonRow comparison_row(const std::string& run, const TrainingHistory& history,
                             const MetricsReport& test);

std::vector<std::string> comparison_columns();
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
// Fixed-width text rendering of the same table.
std::string comparison_text(const std::vector<ComparisonRow>& rows);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace tentnet

#endif  // TENTNET_REPORT_HPP_

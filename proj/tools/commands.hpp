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

#ifndef TENTNET_TOOLS_COMMANDS_HPP_
#define TENTNET_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "run_config.hpp"
#include "tentnet/augment.hpp"
#include "tentnet/dataset.hpp"
#include "tentnet/metrics.hpp"
#include "tentnet/report.hpp"

namespace tentnet::cli {

namespace fs = std::filesystem;

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

// Marker left in an output directory when a command fails part way.
inline constexpr const char* kFailedMarker = "FAILED";

// runs/<YYYYmmdd-HHMMSS>-<model>, with a numeric suffix if taken.
fs::path default_run_dir(const std::string& model);

struct AugmentOptions {
  fs::path input_dir;
  fs::path output_dir;
  AugmentationSpec spec;
};

// Expands every class to spec.target_per_class and writes the tree plus
// manifest.csv. Prints per-class counts before and after.
Dataset cmd_augment(const AugmentOptions& options, std::ostream& log);

struct SplitOptions {
  fs::path data_dir;
  fs::path output_dir;
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
  bool copy_files = false;  // also materialize train/ and val/ trees
};

// Writes split.csv (and optionally the train/val trees).
Split cmd_split(const SplitOptions& options, std::ostream& log);

// Split, fit and validation-set evaluation. Returns the run directory.
fs::path cmd_train(RunConfig config, std::ostream& log);

struct EvaluateOptions {
  fs::path weights;
  fs::path manifest;
  fs::path test_dir;
  fs::path output_dir;
  fs::path history;  // optional, feeds curves.svg
  std::int64_t batch_size = 32;
};

MetricsReport cmd_evaluate(const EvaluateOptions& options, std::ostream& log);

struct PredictOptions {
  fs::path weights;
  fs::path manifest;
  fs::path image;
  std::int64_t top_n = 6;
};

// Prints "<label>\t<probability>" rows, most probable first.
void cmd_predict(const PredictOptions& options, std::ostream& out);

struct ReportOptions {
  std::vector<fs::path> run_dirs;
  fs::path output_dir;
};

// Writes comparison.csv, comparison.txt and curves.svg into output_dir and
// prints the text table.
std::vector<ComparisonRow> cmd_report(const ReportOptions& options, std::ostream& out);

// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace tentnet::cli

#endif  // TENTNET_TOOLS_COMMANDS_HPP_

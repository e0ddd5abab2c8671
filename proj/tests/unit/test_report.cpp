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

#include <cstdlib>
#include <filesystem>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metrics_oracle.hpp"
#include "tentnet/error.hpp"
#include "tentnet/metrics.hpp"
#include "tentnet/report.hpp"
#include "tentnet/rng.hpp"
#include "tentnet/training.hpp"

namespace tentnet {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

TrainingHistory sample_history(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  TrainingHistory h;
  for (std::size_t e = 0; e < n; ++e) {
    EpochRecord r;
    r.epoch = static_cast<std::int64_t>(e + 1);
    r.phase = e < n / 2 ? 1 : 2;
    r.train_loss = rng.uniform(0.1, 2.0);
    r.train_accuracy = rng.uniform(0.0, 1.0);
    r.val_loss = rng.uniform(0.1, 2.0);
    r.val_accuracy = rng.uniform(0.0, 1.0);
    h.epochs.push_back(r);
  }
  return h;
}

std::size_t count_matches(const std::string& text, const std::regex& re) {
  return static_cast<std::size_t>(std::distance(std::sregex_iterator(text.begin(), text.end(), re),
                                                std::sregex_iterator()));
}

TEST(FormatDouble, RoundTrips) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-20.0, 20.0));
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(1.0), "1");
}

TEST(MetricsJson, RoundTrip) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const MetricsReport report = build_report(testing::random_prediction_set(seed));
    const std::string json = metrics_to_json(report);
    EXPECT_TRUE(nlohmann::json::accept(json));
    EXPECT_EQ(metrics_from_json(json), report) << "seed " << seed;
  }
  EXPECT_THROW(metrics_from_json("{}"), InputError);
}

TEST(MetricsCsv, OneRowPerClassPlusMacro) {
  const MetricsReport report = build_report(testing::random_prediction_set(7));
  const auto lines = lines_of(metrics_csv(report));
  ASSERT_EQ(lines.size(), report.class_names.size() + 2);
  EXPECT_EQ(lines[0], "class,precision,recall,f1,ap,support");
  const auto macro = split_csv(lines.back());
  EXPECT_EQ(macro[0], "macro");
  if (report.mean_average_precision) {
    EXPECT_EQ(std::strtod(macro[4].c_str(), nullptr), *report.mean_average_precision);
  }
}

TEST(ConfusionCsv, CountsSumToTotal) {
  const MetricsReport report = build_report(testing::random_prediction_set(9));
  const auto lines = lines_of(confusion_csv(report.confusion, report.class_names));
  const std::size_t k = report.class_names.size();
  ASSERT_EQ(lines.size(), k + 1);
  std::int64_t total = 0;
  for (std::size_t r = 1; r <= k; ++r) {
    const auto cells = split_csv(lines[r]);
    ASSERT_EQ(cells.size(), k + 1);
    EXPECT_EQ(cells[0], report.class_names[r - 1]);
    std::int64_t row = 0;
    for (std::size_t c = 1; c <= k; ++c) row += std::stoll(cells[c]);
    EXPECT_EQ(row, report.confusion.row_sum(r - 1));
    total += row;
  }
  EXPECT_EQ(total, report.num_examples);
}

TEST(HistoryCsv, RoundTrip) {
  const TrainingHistory h = sample_history(7, 3);
  const std::string csv = history_csv(h);
  EXPECT_EQ(lines_of(csv)[0], "epoch,phase,train_loss,train_acc,val_loss,val_acc");
  const TrainingHistory back = parse_history_csv(csv);
  ASSERT_EQ(back.epochs.size(), h.epochs.size());
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    EXPECT_EQ(back.epochs[i].epoch, h.epochs[i].epoch);
    EXPECT_EQ(back.epochs[i].phase, h.epochs[i].phase);
    EXPECT_EQ(back.epochs[i].train_loss, h.epochs[i].train_loss);
    EXPECT_EQ(back.epochs[i].val_accuracy, h.epochs[i].val_accuracy);
  }
  EXPECT_THROW(parse_history_csv("epoch,phase\n1,x\n"), InputError);
}

TEST(CurvesSvg, PanelsAndSeries) {
  const std::regex polyline("<polyline ");
  const std::string one = curves_svg({{"solo", sample_history(5, 1)}});
  EXPECT_EQ(count_matches(one, polyline), 4u);
  EXPECT_NE(one.find(R"(<g class="panel" id="accuracy")"), std::string::npos);
  EXPECT_NE(one.find(R"(<g class="panel" id="loss")"), std::string::npos);
  const std::string two = curves_svg({{"a", sample_history(5, 1)}, {"b<&>", sample_history(3, 2)}});
  EXPECT_EQ(count_matches(two, polyline), 8u);
  EXPECT_EQ(count_matches(two, std::regex(R"(data-run="b&lt;&amp;&gt;" data-split="val")")), 2u);
  // Each series has one point per epoch.
  const std::regex points(R"re(data-run="a" data-split="train"[^>]*points="([^"]*)")re");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(two, m, points));
  EXPECT_EQ(count_matches(m[1].str(), std::regex(",")), 5u);
}

TEST(Comparison, UsesBestEpochAndExactHeader) {
  TrainingHistory h = sample_history(6, 4);
  h.epochs[3].val_accuracy = 2.0;  // force the best epoch
  const MetricsReport test = build_report(testing::random_prediction_set(5));
  const ComparisonRow row = comparison_row("custom", h, test);
  EXPECT_EQ(row.train_accuracy, h.epochs[3].train_accuracy);
  EXPECT_EQ(row.val_loss, h.epochs[3].val_loss);
  EXPECT_EQ(row.test_accuracy, test.accuracy);
  EXPECT_EQ(row.f1, test.classification.macro_f1);
  const auto lines = lines_of(comparison_csv({row, comparison_row("transfer", h, test)}));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "run,train_accuracy,val_accuracy,test_accuracy,val_loss,test_loss,precision,recall,f1,map");
  EXPECT_EQ(split_csv(lines[1]).size(), 10u);
  const auto text = lines_of(comparison_text({row}));
  ASSERT_EQ(text.size(), 3u);
  EXPECT_EQ(text[0].size(), text[2].size());
}

TEST(Export, WritesAllFiles) {
  const fs::path dir = fs::temp_directory_path() / "tentnet_report_export";
  fs::remove_all(dir);
  const MetricsReport report = build_report(testing::random_prediction_set(6));
  export_report(report, sample_history(4, 1), dir);
  for (const char* name : {"metrics.json", "metrics.csv", "confusion.csv", "curves.svg"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  EXPECT_EQ(read_metrics_json(dir / "metrics.json"), report);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace tentnet

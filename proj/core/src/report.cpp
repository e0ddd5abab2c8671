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

#include "tentnet/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tentnet/error.hpp"

namespace fs = std::filesystem;

namespace tentnet {

using nlohmann::json;

namespace {

constexpr const char* kHistoryHeader = "epoch,phase,train_loss,train_acc,val_loss,val_acc";

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, const std::string& context) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InputError(context + ": '" + text + "' is not a number");
  }
  return value;
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, ptr);
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string metrics_to_json(const MetricsReport& report) {
  json doc;
  doc["class_names"] = report.class_names;
  doc["num_examples"] = report.num_examples;
  doc["accuracy"] = report.accuracy;
  doc["loss"] = report.mean_loss;
  doc["precision"] = report.classification.macro_precision;
  doc["recall"] = report.classification.macro_recall;
  doc["f1"] = report.classification.macro_f1;
  doc["map"] = optional_json(report.mean_average_precision);
  json per_class = json::array();
  for (std::size_t c = 0; c < report.class_names.size(); ++c) {
    const ClassScores& s = report.classification.per_class.at(c);
    per_class.push_back({{"class", report.class_names[c]},
                         {"precision", s.precision},
                         {"recall", s.recall},
                         {"f1", s.f1},
                         {"support", s.support},
                         {"ap", optional_json(report.average_precision.at(c))}});
  }
  doc["per_class"] = std::move(per_class);
  json rows = json::array();
  for (std::size_t i = 0; i < report.confusion.k; ++i) {
    rows.push_back(std::vector<std::int64_t>(
        report.confusion.counts.begin() + static_cast<std::ptrdiff_t>(i * report.confusion.k),
        report.confusion.counts.begin() + static_cast<std::ptrdiff_t>((i + 1) * report.confusion.k)));
  }
  doc["confusion"] = std::move(rows);
  return doc.dump(2) + "\n";
}

MetricsReport metrics_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    MetricsReport report;
    report.class_names = doc.at("class_names").get<std::vector<std::string>>();
    report.num_examples = doc.at("num_examples").get<std::int64_t>();
    report.accuracy = doc.at("accuracy").get<double>();
    report.mean_loss = doc.at("loss").get<double>();
    report.classification.accuracy = report.accuracy;
    report.classification.macro_precision = doc.at("precision").get<double>();
    report.classification.macro_recall = doc.at("recall").get<double>();
    report.classification.macro_f1 = doc.at("f1").get<double>();
    report.mean_average_precision = optional_from(doc.at("map"));
    for (const json& row : doc.at("per_class")) {
      ClassScores s;
      s.precision = row.at("precision").get<double>();
      s.recall = row.at("recall").get<double>();
      s.f1 = row.at("f1").get<double>();
      s.support = row.at("support").get<std::int64_t>();
      report.classification.per_class.push_back(s);
      report.average_precision.push_back(optional_from(row.at("ap")));
    }
    const json& rows = doc.at("confusion");
    report.confusion.k = rows.size();
    for (const json& row : rows) {
      const auto values = row.get<std::vector<std::int64_t>>();
      if (values.size() != rows.size()) throw InputError("confusion matrix is not square");
      report.confusion.counts.insert(report.confusion.counts.end(), values.begin(), values.end());
    }
    if (report.classification.per_class.size() != report.class_names.size() ||
        report.confusion.k != report.class_names.size()) {
      throw InputError("metrics class count is inconsistent");
    }
    return report;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed metrics JSON: ") + e.what());
  }
}

MetricsReport read_metrics_json(const fs::path& path) {
  try {
    return metrics_from_json(read_text_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string metrics_csv(const MetricsReport& report) {
  std::string csv = "class,precision,recall,f1,ap,support\n";
  auto ap_text = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (std::size_t c = 0; c < report.class_names.size(); ++c) {
    const ClassScores& s = report.classification.per_class.at(c);
    csv += csv_escape(report.class_names[c]) + ',' + format_double(s.precision) + ',' +
           format_double(s.recall) + ',' + format_double(s.f1) + ',' +
           ap_text(report.average_precision.at(c)) + ',' + std::to_string(s.support) + '\n';
  }
  csv += "macro," + format_double(report.classification.macro_precision) + ',' +
         format_double(report.classification.macro_recall) + ',' +
         format_double(report.classification.macro_f1) + ',' +
         ap_text(report.mean_average_precision) + ',' + std::to_string(report.num_examples) + '\n';
  return csv;
}

std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names) {
  if (class_names.size() != cm.k) throw InputError("confusion_csv: class count mismatch");
  std::string csv = "true\\predicted";
  for (const std::string& name : class_names) csv += ',' + csv_escape(name);
  csv += '\n';
  for (std::size_t i = 0; i < cm.k; ++i) {
    csv += csv_escape(class_names[i]);
    for (std::size_t j = 0; j < cm.k; ++j) csv += ',' + std::to_string(cm.at(i, j));
    csv += '\n';
  }
  return csv;
}

std::string history_csv(const TrainingHistory& history) {
  std::string csv = std::string(kHistoryHeader) + "\n";
  for (const EpochRecord& r : history.epochs) {
    csv += std::to_string(r.epoch) + ',' + std::to_string(r.phase) + ',' +
           format_double(r.train_loss) + ',' + format_double(r.train_accuracy) + ',' +
           format_double(r.val_loss) + ',' + format_double(r.val_accuracy) + '\n';
  }
  return csv;
}

TrainingHistory parse_history_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kHistoryHeader) {
    throw InputError("history CSV must start with '" + std::string(kHistoryHeader) + "'");
  }
  TrainingHistory history;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    const std::string context = "history line " + std::to_string(line_no);
    if (f.size() != 6) throw InputError(context + ": expected 6 fields");
    EpochRecord r;
    r.epoch = static_cast<std::int64_t>(parse_number(f[0], context));
    r.phase = static_cast<std::int64_t>(parse_number(f[1], context));
    r.train_loss = parse_number(f[2], context);
    r.train_accuracy = parse_number(f[3], context);
    r.val_loss = parse_number(f[4], context);
    r.val_accuracy = parse_number(f[5], context);
    history.epochs.push_back(r);
  }
  return history;
}

TrainingHistory read_history_csv(const fs::path& path) {
  try {
    return parse_history_csv(read_text_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string curves_svg(const std::vector<NamedHistory>& runs) {
  constexpr double kPanelW = 420, kPanelH = 300, kMargin = 50, kGap = 40;
  constexpr double kLegendH = 24.0;
  const double width = 2 * kPanelW + kGap + 2 * kMargin;
  const double legend_h = kLegendH * static_cast<double>(runs.size()) + 10;
  const double height = kPanelH + 2 * kMargin + legend_h;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::size_t max_epoch = 1;
  double max_loss = 0.0;
  for (const NamedHistory& run : runs) {
    max_epoch = std::max(max_epoch, run.history.epochs.size());
    for (const EpochRecord& r : run.history.epochs) {
      max_loss = std::max({max_loss, r.train_loss, r.val_loss});
    }
  }
  if (!(max_loss > 0.0) || !std::isfinite(max_loss)) max_loss = 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  struct PanelSpec {
    const char* id;
    const char* title;
    double y_max;
  };
  const PanelSpec panels[] = {{"accuracy", "Accuracy", 1.0}, {"loss", "Loss", max_loss}};
  for (int p = 0; p < 2; ++p) {
    const double x0 = kMargin + p * (kPanelW + kGap), y0 = kMargin;
    const PanelSpec& panel = panels[p];
    svg << "<g class=\"panel\" id=\"" << panel.id << "\">\n";
    svg << "<text x=\"" << x0 + kPanelW / 2 << "\" y=\"" << y0 - 15
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << panel.title << "</text>\n";
    svg << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << kPanelW << "\" height=\""
        << kPanelH << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double frac = t / 4.0;
      const double y = y0 + kPanelH * (1.0 - frac);
      svg << "<text x=\"" << x0 - 6 << "\" y=\"" << y + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
          << fixed(panel.y_max * frac, 2) << "</text>\n";
    }
    svg << "<text x=\"" << x0 + kPanelW / 2 << "\" y=\"" << y0 + kPanelH + 30
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">epoch (1-"
        << max_epoch << ")</text>\n";
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const char* color = kColors[r % std::size(kColors)];
      for (int split = 0; split < 2; ++split) {
        svg << "<polyline class=\"series\" data-run=\"" << xml_escape(runs[r].name)
            << "\" data-split=\"" << (split == 0 ? "train" : "val") << "\" fill=\"none\" stroke=\""
            << color << "\" stroke-width=\"2\"" << (split == 1 ? " stroke-dasharray=\"6,4\"" : "")
            << " points=\"";
        const auto& epochs = runs[r].history.epochs;
        for (std::size_t e = 0; e < epochs.size(); ++e) {
          const EpochRecord& rec = epochs[e];
          const double value = p == 0 ? (split == 0 ? rec.train_accuracy : rec.val_accuracy)
                                      : (split == 0 ? rec.train_loss : rec.val_loss);
          const double fx = max_epoch > 1 ? static_cast<double>(e) / static_cast<double>(max_epoch - 1) : 0.5;
          const double fy = std::clamp(value / panel.y_max, 0.0, 1.0);
          svg << (e ? " " : "") << fixed(x0 + fx * kPanelW, 1) << ','
              << fixed(y0 + (1.0 - fy) * kPanelH, 1);
        }
        svg << "\"/>\n";
      }
    }
    svg << "</g>\n";
  }
  double ly = kMargin + kPanelH + 50;
  for (std::size_t r = 0; r < runs.size(); ++r, ly += kLegendH) {
    const char* color = kColors[r % std::size(kColors)];
    svg << "<g class=\"legend\"><line x1=\"" << kMargin << "\" y1=\"" << ly << "\" x2=\""
        << kMargin + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/><text x=\"" << kMargin + 36 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(runs[r].name)
        << " train (solid), val (dashed)</text></g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void export_report(const MetricsReport& report, const TrainingHistory& history,
                   const fs::path& outdir, const std::string& run_name) {
  fs::create_directories(outdir);
  write_text_file(outdir / "metrics.json", metrics_to_json(report));
  write_text_file(outdir / "metrics.csv", metrics_csv(report));
  write_text_file(outdir / "confusion.csv", confusion_csv(report.confusion, report.class_names));
  write_text_file(outdir / "curves.svg", curves_svg({NamedHistory{run_name, history}}));
}

ComparisonRow comparison_row(const std::string& run, const TrainingHistory& history,
                             const MetricsReport& test) {
  const auto best = history.best_index();
  if (!best) throw InputError("run '" + run + "' has an empty training history");
  const EpochRecord& r = history.epochs[*best];
  ComparisonRow row;
  row.run = run;
  row.train_accuracy = r.train_accuracy;
  row.val_accuracy = r.val_accuracy;
  row.val_loss = r.val_loss;
  row.test_accuracy = test.accuracy;
  row.test_loss = test.mean_loss;
  row.precision = test.classification.macro_precision;
  row.recall = test.classification.macro_recall;
  row.f1 = test.classification.macro_f1;
  row.map = test.mean_average_precision;
  return row;
}

std::vector<std::string> comparison_columns() {
  return {"run", "train_accuracy", "val_accuracy", "test_accuracy", "val_loss",
          "test_loss", "precision", "recall", "f1", "map"};
}

namespace {

std::vector<std::string> row_values(const ComparisonRow& row, bool exact) {
  auto num = [exact](double v) { return exact ? format_double(v) : fixed(v, 4); };
  return {row.run,        num(row.train_accuracy), num(row.val_accuracy), num(row.test_accuracy),
          num(row.val_loss), num(row.test_loss),   num(row.precision),    num(row.recall),
          num(row.f1),    row.map ? num(*row.map) : std::string(exact ? "" : "n/a")};
}

}  // namespace

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string csv;
  const auto columns = comparison_columns();
  for (std::size_t i = 0; i < columns.size(); ++i) csv += (i ? "," : "") + columns[i];
  csv += '\n';
  for (const ComparisonRow& row : rows) {
    const auto values = row_values(row, true);
    for (std::size_t i = 0; i < values.size(); ++i) csv += (i ? "," : "") + csv_escape(values[i]);
    csv += '\n';
  }
  return csv;
}

std::string comparison_text(const std::vector<ComparisonRow>& rows) {
  std::vector<std::vector<std::string>> cells{comparison_columns()};
  for (const ComparisonRow& row : rows) cells.push_back(row_values(row, false));
  std::vector<std::size_t> widths(cells.front().size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());
  }
  std::string text;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    for (std::size_t i = 0; i < cells[l].size(); ++i) {
      const std::string& v = cells[l][i];
      const std::string pad(widths[i] - v.size(), ' ');
      text += i == 0 ? v + pad : "  " + pad + v;
    }
    text += '\n';
    if (l == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w + 2;
      text += std::string(total - 2, '-') + '\n';
    }
  }
  return text;
}

}  // namespace tentnet

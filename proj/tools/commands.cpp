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

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <iomanip>
#include <numeric>

#include <CLI11.hpp>

#include "tentnet/error.hpp"
#include "tentnet/graph.hpp"
#include "tentnet/image.hpp"
#include "tentnet/rng.hpp"
#include "tentnet/training.hpp"
#include "tentnet/weights.hpp"

namespace tentnet::cli {

using nlohmann::json;

namespace {

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_class_counts(std::ostream& log, const Dataset& dataset, const char* label) {
  const auto counts = dataset.class_counts();
  log << label << ": " << dataset.items.size() << " images\n";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    log << "  " << dataset.class_names[c] << ": " << counts[c] << '\n';
  }
}

ScanResult scan_and_report(const fs::path& root, std::ostream& log) {
  ScanResult scan = scan_dataset(root);
  if (!scan.skipped.empty()) {
    log << "skipped " << scan.skipped.size() << " non-image entr"
        << (scan.skipped.size() == 1 ? "y" : "ies") << " under " << root.string() << '\n';
  }
  return scan;
}

// Runs `body`; on failure leaves a FAILED marker in `dir` and rethrows.
template <typename F>
auto with_failure_marker(const fs::path& dir, F&& body) {
  std::error_code ec;
  fs::remove(dir / kFailedMarker, ec);
  try {
    return body();
  } catch (const std::exception& e) {
    fs::create_directories(dir, ec);
    std::ofstream marker(dir / kFailedMarker);
    marker << e.what() << '\n';
    throw;
  }
}

fs::path run_name_path(const fs::path& dir) {
  fs::path p = dir.lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return p;
}

}  // namespace

fs::path default_run_dir(const std::string& model) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  const fs::path base = fs::path("runs") / (std::string(stamp) + "-" + model);
  fs::path candidate = base;
  for (int i = 2; fs::exists(candidate); ++i) candidate = base.string() + "-" + std::to_string(i);
  return candidate;
}

Dataset cmd_augment(const AugmentOptions& options, std::ostream& log) {
  if (options.input_dir.empty()) throw InputError("augment needs an input directory");
  if (options.output_dir.empty()) throw InputError("augment needs an output directory (--out)");
  if (fs::exists(options.output_dir) &&
      fs::equivalent(options.input_dir, options.output_dir)) {
    throw InputError("augment output must differ from its input");
  }
  const ScanResult scan = scan_and_report(options.input_dir, log);
  const Dataset expanded = augment_dataset(scan.dataset, options.spec);
  return with_failure_marker(options.output_dir, [&] {
    Dataset written = export_dataset(expanded, options.output_dir);
    const auto before = scan.dataset.class_counts();
    const auto after = written.class_counts();
    log << "class                     before  after\n";
    for (std::size_t c = 0; c < before.size(); ++c) {
      char line[128];
      std::snprintf(line, sizeof line, "%-24s %7zu %6zu\n", written.class_names[c].c_str(),
                    before[c], after[c]);
      log << line;
    }
    log << "total " << scan.dataset.items.size() << " -> " << written.items.size()
        << " images in " << options.output_dir.string() << '\n';
    return written;
  });
}

Split cmd_split(const SplitOptions& options, std::ostream& log) {
  if (options.data_dir.empty()) throw InputError("split needs a dataset directory");
  if (options.output_dir.empty()) throw InputError("split needs an output directory (--out)");
  const ScanResult scan = scan_and_report(options.data_dir, log);
  Split split = stratified_split(scan.dataset, options.train_fraction, options.seed);
  return with_failure_marker(options.output_dir, [&] {
    fs::create_directories(options.output_dir);
    std::string csv = manifest_header();
    append_manifest_rows(csv, split.train, "train");
    append_manifest_rows(csv, split.val, "val");
    write_text_file(options.output_dir / "split.csv", csv);
    if (options.copy_files) {
      for (const auto& [side, data] : {std::pair{"train", &split.train}, std::pair{"val", &split.val}}) {
        for (const LabeledImage& item : data->items) {
          const fs::path dir = options.output_dir / side /
                               data->class_names.at(static_cast<std::size_t>(item.class_index));
          fs::create_directories(dir);
          fs::copy_file(item.path, dir / item.path.filename(), fs::copy_options::overwrite_existing);
        }
      }
    }
    print_class_counts(log, split.train, "train");
    print_class_counts(log, split.val, "val");
    return split;
  });
}

fs::path cmd_train(RunConfig config, std::ostream& log) {
  const fs::path run_dir = config.out.empty() ? default_run_dir(config.model) : fs::path(config.out);
  config.out = run_dir.string();
  fs::create_directories(run_dir);
  write_text_file(run_dir / "run.json", to_flat_json(config).dump(2) + "\n");
  return with_failure_marker(run_dir, [&] {
    const ScanResult scan = scan_and_report(config.data_dir, log);
    Split split;
    if (!config.augment) {
      split = stratified_split(scan.dataset, config.train_fraction, config.seed);
    } else if (config.split_before_augment) {
      split = stratified_split(scan.dataset, config.train_fraction, config.seed);
      split.train = augment_dataset(split.train, config.augmentation);
    } else {
      split = stratified_split(augment_dataset(scan.dataset, config.augmentation),
                               config.train_fraction, config.seed);
    }
    std::string csv = manifest_header();
    append_manifest_rows(csv, split.train, "train");
    append_manifest_rows(csv, split.val, "val");
    write_text_file(run_dir / "dataset.csv", csv);
    print_class_counts(log, split.train, "train");
    print_class_counts(log, split.val, "val");

    const std::vector<std::string>& classes = scan.dataset.class_names;
    ModelGraph model = [&] {
      if (!config.is_transfer()) {
        ModelGraph m = build_custom_cnn({config.image_size, config.image_size}, classes,
                                        config.training.dropout_rate);
        init_weights(m, config.init_seed());
        return m;
      }
      ModelGraph backbone = load_manifest(config.backbone_manifest);
      init_weights(backbone, config.init_seed());
      if (config.backbone_weights.empty()) {
        log << "warning: no backbone weights given; the backbone starts from random init\n";
      } else {
        load_weights(backbone, config.backbone_weights);
      }
      return build_transfer_model(backbone, classes, config.head_width,
                                  config.training.dropout_rate,
                                  derive_seed({config.init_seed(), fnv1a(kHeadPrefix)}));
    }();
    save_manifest(model, run_dir / "model.manifest");
    log << config.model << ": " << model.parameter_count() << " parameters, input "
        << model.input_size().height << "x" << model.input_size().width << '\n';

    DatasetSamples train(split.train, model.input_size());
    DatasetSamples val(split.val, model.input_size());
    FitOptions options;
    options.checkpoint_dir = run_dir;
    TrainingHistory progress;
    options.on_epoch = [&](const EpochRecord& r) {
      progress.epochs.push_back(r);
      write_text_file(run_dir / "history.csv", history_csv(progress));
      log << "epoch " << r.epoch << " (phase " << r.phase << ")  loss " << fmt(r.train_loss)
          << "  acc " << fmt(r.train_accuracy) << "  val_loss " << fmt(r.val_loss) << "  val_acc "
          << fmt(r.val_accuracy) << "  " << fmt(r.wall_seconds, 1) << "s" << std::endl;
    };
    FitResult result = fit(model, train, val, config.training, config.schedule(), options);
    write_text_file(run_dir / "history.csv", history_csv(result.history));
    std::string timing = "epoch,wall_seconds\n";
    for (const EpochRecord& r : result.history.epochs) {
      timing += std::to_string(r.epoch) + ',' + fmt(r.wall_seconds, 3) + '\n';
    }
    write_text_file(run_dir / "timing.csv", timing);

    restore_parameters(model, result.best_parameters);
    const MetricsReport report =
        build_report(collect_predictions(model, val, config.training.batch_size));
    export_report(report, result.history, run_dir / "validation",
                  run_name_path(run_dir).filename().string());
    log << "best epoch " << result.best_epoch << ": val accuracy " << fmt(report.accuracy)
        << ", macro F1 " << fmt(report.classification.macro_f1) << '\n';
    log << "run directory " << run_dir.string() << '\n';
    return run_dir;
  });
}

MetricsReport cmd_evaluate(const EvaluateOptions& options, std::ostream& log) {
  if (options.weights.empty() || options.manifest.empty() || options.test_dir.empty()) {
    throw InputError("evaluate needs --weights, --manifest and --test-dir (or --run)");
  }
  if (options.output_dir.empty()) throw InputError("evaluate needs an output directory (--out)");
  ModelGraph model = load_manifest(options.manifest);
  load_weights(model, options.weights);
  const ScanResult scan = scan_and_report(options.test_dir, log);
  if (scan.dataset.class_names != model.class_names()) {
    std::string message = "test classes do not match the model:";
    for (const std::string& c : scan.dataset.class_names) {
      if (std::find(model.class_names().begin(), model.class_names().end(), c) ==
          model.class_names().end()) {
        message += " unknown '" + c + "'";
      }
    }
    for (const std::string& c : model.class_names()) {
      if (std::find(scan.dataset.class_names.begin(), scan.dataset.class_names.end(), c) ==
          scan.dataset.class_names.end()) {
        message += " missing '" + c + "'";
      }
    }
    throw InputError(message);
  }
  TrainingHistory history;
  if (!options.history.empty() && fs::exists(options.history)) {
    history = read_history_csv(options.history);
  }
  return with_failure_marker(options.output_dir, [&] {
    const MetricsReport report = evaluate(model, scan.dataset, options.batch_size);
    export_report(report, history, options.output_dir,
                  run_name_path(options.output_dir).filename().string());
    log << "evaluated " << report.num_examples << " images: accuracy " << fmt(report.accuracy)
        << ", loss " << fmt(report.mean_loss) << ", macro P/R/F1 "
        << fmt(report.classification.macro_precision) << "/"
        << fmt(report.classification.macro_recall) << "/" << fmt(report.classification.macro_f1)
        << ", mAP "
        << (report.mean_average_precision ? fmt(*report.mean_average_precision) : std::string("n/a"))
        << '\n';
    return report;
  });
}

void cmd_predict(const PredictOptions& options, std::ostream& out) {
  if (options.top_n < 1) throw InputError("--top must be at least 1");
  ModelGraph model = load_manifest(options.manifest);
  load_weights(model, options.weights);
  const ImageSize size = model.input_size();
  const Tensor image = resize_bilinear(decode_image(options.image), size.height, size.width);
  const Tensor probs = predict(model, image.reshaped(Shape{1, size.height, size.width, 3}));
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(options.top_n), order.size());
  for (std::size_t i = 0; i < n; ++i) {
    out << model.class_names().at(order[i]) << '\t' << format_double(probs[order[i]]) << '\n';
  }
}

std::vector<ComparisonRow> cmd_report(const ReportOptions& options, std::ostream& out) {
  if (options.run_dirs.empty()) throw InputError("report needs at least one run directory");
  if (options.output_dir.empty()) throw InputError("report needs an output directory (--out)");
  std::vector<std::string> missing;
  for (const fs::path& dir : options.run_dirs) {
    for (const char* file : {"metrics.json", "history.csv"}) {
      if (!fs::is_regular_file(dir / file)) missing.push_back((dir / file).string());
    }
  }
  if (!missing.empty()) {
    std::string message = "missing report inputs:";
    for (const std::string& m : missing) message += "\n  " + m;
    throw InputError(message);
  }
  std::vector<ComparisonRow> rows;
  std::vector<NamedHistory> curves;
  for (const fs::path& dir : options.run_dirs) {
    const std::string name = run_name_path(dir).filename().string();
    TrainingHistory history = read_history_csv(dir / "history.csv");
    rows.push_back(comparison_row(name, history, read_metrics_json(dir / "metrics.json")));
    curves.push_back({name, std::move(history)});
  }
  return with_failure_marker(options.output_dir, [&] {
    fs::create_directories(options.output_dir);
    const std::string text = comparison_text(rows);
    write_text_file(options.output_dir / "comparison.csv", comparison_csv(rows));
    write_text_file(options.output_dir / "comparison.txt", text);
    write_text_file(options.output_dir / "curves.svg", curves_svg(curves));
    out << text;
    return rows;
  });
}

// ---------------------------------------------------------------------------

namespace {

// Collects flags that map onto config keys so they can override a config file.
class FlagOverrides {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    CLI::Option* opt = app->add_option(flag, values_[key], help);
    options_.emplace_back(opt, key);
  }
  void add_switch(CLI::App* app, const std::string& flag, const std::string& key, bool value,
                  const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, help);
    switches_.emplace_back(opt, key, value);
  }
  void apply(json& flat) const {
    for (const auto& [opt, key] : options_) {
      if (opt->count() > 0) flat[key] = parse_flag_value(key, values_.at(key));
    }
    for (const auto& [opt, key, value] : switches_) {
      if (opt->count() > 0) flat[key] = value;
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<CLI::Option*, std::string>> options_;
  std::vector<std::tuple<CLI::Option*, std::string, bool>> switches_;
};

AugmentationSpec augmentation_from(const json& flat) {
  json copy = flat;
  copy["data.dir"] = "unused";
  copy.erase("model");
  return resolve_run_config(copy).augmentation;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"tentnet: image classification experiments (custom CNN and transfer learning)"};
  app.require_subcommand(1);
  std::string seed_text, config_path, out_dir;
  app.add_option("--seed", seed_text, "master seed");
  app.add_option("--config", config_path, "JSON file of dotted config keys");
  app.add_option("--out", out_dir, "output directory");

  FlagOverrides aug_flags;
  CLI::App* augment = app.add_subcommand("augment", "expand each class to a target count");
  std::string augment_input;
  augment->add_option("input", augment_input, "directory-per-class image tree")->required();
  aug_flags.add(augment, "--target", "augment.target_per_class", "images per class afterwards");
  aug_flags.add(augment, "--max-rotation", "augment.max_rotation_deg", "rotation range (degrees)");
  aug_flags.add(augment, "--hflip-prob", "augment.hflip_prob", "horizontal flip probability");
  aug_flags.add(augment, "--brightness-min", "augment.brightness_min", "lowest brightness factor");
  aug_flags.add(augment, "--brightness-max", "augment.brightness_max", "highest brightness factor");
  aug_flags.add(augment, "--zoom-min", "augment.zoom_min", "smallest crop scale");
  aug_flags.add(augment, "--zoom-max", "augment.zoom_max", "largest crop scale");

  CLI::App* split = app.add_subcommand("split", "stratified train/validation split");
  std::string split_input;
  double split_fraction = 0.8;
  bool split_copy = false;
  split->add_option("input", split_input, "directory-per-class image tree")->required();
  split->add_option("--train-fraction", split_fraction, "per-class training share");
  split->add_flag("--copy", split_copy, "also copy images into train/ and val/ trees");

  FlagOverrides train_flags;
  CLI::App* train = app.add_subcommand("train", "train a model and evaluate it on validation");
  std::string from_path;
  train->add_option("--from", from_path, "replay the resolved config of an earlier run.json");
  train_flags.add(train, "--model", "model", "custom_cnn or transfer");
  train_flags.add(train, "--data", "data.dir", "directory-per-class image tree");
  train_flags.add(train, "--image-size", "data.image_size", "input resolution (custom CNN)");
  train_flags.add(train, "--train-fraction", "data.train_fraction", "per-class training share");
  train_flags.add(train, "--target-per-class", "augment.target_per_class", "augmented class size");
  train_flags.add_switch(train, "--no-augment", "augment.enabled", false, "train on originals only");
  train_flags.add_switch(train, "--split-before-augment", "augment.split_before_augment", true,
                         "split originals first and augment only the training side");
  train_flags.add(train, "--backbone-manifest", "backbone.manifest", "backbone manifest");
  train_flags.add(train, "--backbone-weights", "backbone.weights", "backbone weight archive");
  train_flags.add(train, "--head-width", "model.head_width", "transfer head hidden units");
  train_flags.add(train, "--epochs", "schedule.epochs", "epochs (custom CNN)");
  train_flags.add(train, "--phase1-epochs", "schedule.phase1_epochs", "frozen-backbone epochs");
  train_flags.add(train, "--phase2-epochs", "schedule.phase2_epochs", "fine-tuning epochs");
  train_flags.add(train, "--batch-size", "train.batch_size", "batch size");
  train_flags.add(train, "--lr", "train.learning_rate", "Adam learning rate");
  train_flags.add(train, "--l2", "train.l2_lambda", "L2 weight");
  train_flags.add(train, "--dropout", "train.dropout_rate", "dropout rate");

  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "metrics of a trained model on a test tree");
  EvaluateOptions eval_opts;
  std::string eval_run;
  evaluate_cmd->add_option("--run", eval_run, "run directory (model.manifest, best.tgwa, history.csv)");
  evaluate_cmd->add_option("--weights", eval_opts.weights, "weight archive");
  evaluate_cmd->add_option("--manifest", eval_opts.manifest, "model manifest");
  evaluate_cmd->add_option("--test-dir", eval_opts.test_dir, "directory-per-class test tree")->required();
  evaluate_cmd->add_option("--history", eval_opts.history, "history.csv for curves.svg");
  evaluate_cmd->add_option("--batch-size", eval_opts.batch_size, "inference batch size");

  CLI::App* predict_cmd = app.add_subcommand("predict", "rank the classes of one image");
  PredictOptions predict_opts;
  predict_cmd->add_option("image", predict_opts.image, "image file")->required();
  predict_cmd->add_option("--weights", predict_opts.weights, "weight archive")->required();
  predict_cmd->add_option("--manifest", predict_opts.manifest, "model manifest")->required();
  predict_cmd->add_option("--top", predict_opts.top_n, "rows to print");

  CLI::App* report_cmd = app.add_subcommand("report", "compare runs side by side");
  std::vector<std::string> report_dirs;
  report_cmd->add_option("runs", report_dirs, "run directories holding metrics.json and history.csv");

  for (CLI::App* sub : {augment, split, train, evaluate_cmd, predict_cmd, report_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    json flat = json::object();
    if (!config_path.empty()) flat = load_config_file(config_path);
    if (!seed_text.empty()) flat["seed"] = parse_flag_value("seed", seed_text);
    if (!out_dir.empty()) flat["out"] = out_dir;

    if (augment->parsed()) {
      aug_flags.apply(flat);
      AugmentOptions options;
      options.input_dir = augment_input;
      options.output_dir = flat.value("out", std::string());
      options.spec = augmentation_from(flat);
      cmd_augment(options, out);
    } else if (split->parsed()) {
      SplitOptions options;
      options.data_dir = split_input;
      options.output_dir = flat.value("out", std::string());
      options.train_fraction = split_fraction;
      options.seed = resolve_run_config([&] {
                       json copy = flat;
                       copy["data.dir"] = split_input;
                       return copy;
                     }()).seed;
      options.copy_files = split_copy;
      cmd_split(options, out);
    } else if (train->parsed()) {
      json merged = json::object();
      if (!from_path.empty()) {
        merged = load_config_file(from_path);
        merged.erase("out");  // a replay writes to a fresh directory
      }
      merged.update(flat);
      train_flags.apply(merged);
      cmd_train(resolve_run_config(merged), out);
    } else if (evaluate_cmd->parsed()) {
      if (!eval_run.empty()) {
        const fs::path run = eval_run;
        if (eval_opts.manifest.empty()) eval_opts.manifest = run / "model.manifest";
        if (eval_opts.weights.empty()) eval_opts.weights = run / "best.tgwa";
        if (eval_opts.history.empty()) eval_opts.history = run / "history.csv";
        eval_opts.output_dir = run;
      }
      if (flat.contains("out")) eval_opts.output_dir = flat.at("out").get<std::string>();
      cmd_evaluate(eval_opts, out);
    } else if (predict_cmd->parsed()) {
      cmd_predict(predict_opts, out);
    } else if (report_cmd->parsed()) {
      ReportOptions options;
      for (const std::string& d : report_dirs) options.run_dirs.emplace_back(d);
      options.output_dir = flat.value("out", std::string("report"));
      cmd_report(options, out);
    }
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace tentnet::cli

// Copyright 2026 The sensekit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sensekit/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <vector>

#include "sensekit/analysis.hpp"
#include "sensekit/backend.hpp"
#include "sensekit/dataset.hpp"
#include "sensekit/de.hpp"
#include "sensekit/ensemble.hpp"
#include "sensekit/error.hpp"
#include "sensekit/trainer.hpp"

namespace sensekit {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

struct DataOptions {
  std::string data;
  std::string format;
  std::string task = "validation";
};

void add_data_options(CLI::App* cmd, DataOptions& o, const std::string& flag = "--data") {
  cmd->add_option(flag, o.data, "Delimiter-separated data file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--format", o.format, "Format config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--task", o.task, "validation or explanation")
      ->check(CLI::IsMember({"validation", "explanation"}));
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

std::map<std::string, Label> gold_labels(std::span<const Sample> samples) {
  std::map<std::string, Label> gold;
  for (const auto& s : samples) gold.emplace(sample_id(s), gold_label(s));
  return gold;
}

std::map<std::string, Label> predictions(const ScoreMatrix& m) {
  std::map<std::string, Label> out;
  for (const auto& [id, row] : m.rows) out.emplace(id, predict_label(row));
  return out;
}

std::vector<ScoreMatrix> load_backends(const std::vector<std::string>& descriptors,
                                       std::span<const Sample> samples,
                                       const FormatConfig& format, ScoreTransform transform) {
  std::vector<ScoreMatrix> out;
  std::vector<std::string> ids;
  for (const auto& d : descriptors) {
    const auto backend = ScorerBackend::parse(d);
    if (std::find(ids.begin(), ids.end(), backend.id) != ids.end()) {
      throw UsageError("backend id '" + backend.id + "' used twice");
    }
    ids.push_back(backend.id);
    LoadOptions options;
    options.markers = format.markers;
    out.push_back(transform_scores(load_score_matrix(backend, samples, options), transform));
  }
  return out;
}

ScoreTransform parse_transform(const std::string& name) {
  if (name == "raw") return ScoreTransform::raw;
  if (name == "softmax") return ScoreTransform::softmax;
  throw DataError("unknown score transform '" + name + "'");
}

std::map<std::string, Label> ensemble_predictions(const EnsembleWeights& weights,
                                                  std::span<const ScoreMatrix> matrices,
                                                  std::span<const Sample> samples) {
  std::map<std::string, Label> out;
  std::vector<ScoreVector> xs(matrices.size());
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < matrices.size(); ++i) xs[i] = matrices[i].at(sample_id(s));
    out.emplace(sample_id(s), predict_label(combine_scores(weights, xs)));
  }
  return out;
}

void check_backend_order(const EnsembleWeights& weights, std::span<const ScoreMatrix> matrices) {
  if (weights.backend_ids.size() != matrices.size()) {
    throw UsageError("weights were fitted for " + std::to_string(weights.backend_ids.size()) +
                     " backends but " + std::to_string(matrices.size()) + " were given");
  }
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    if (weights.backend_ids[i] != matrices[i].backend_id) {
      throw UsageError("backend " + std::to_string(i + 1) + " is '" + matrices[i].backend_id +
                       "' but the weights expect '" + weights.backend_ids[i] + "'");
    }
  }
}

json base_config(const std::string& command, std::uint64_t seed) {
  return {{"tool", "sensekit"}, {"version", kToolVersion}, {"command", command}, {"seed", seed}};
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiple-choice commonsense scoring, weighted ensembling and overlap analysis",
               "sensekit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_dir = ".";
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed, recorded in every artifact");
    cmd->add_option("--out-dir", out_dir, "Directory for written artifacts");
  };

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Sample counts and mean token lengths");
  std::vector<std::string> stats_data;
  std::string stats_format;
  std::string stats_task = "validation";
  stats_cmd->add_option("--data", stats_data, "Data file, optionally as split=path")->required();
  stats_cmd->add_option("--format", stats_format, "Format config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  stats_cmd->add_option("--task", stats_task)->check(CLI::IsMember({"validation", "explanation"}));
  add_common(stats_cmd);

  // train-toy
  auto* train_cmd = app.add_subcommand("train-toy", "Train the toy weight-shared scorer");
  TrainConfig tc;
  DataOptions train_data;
  std::string dev_path;
  add_data_options(train_cmd, train_data, "--train");
  train_cmd->add_option("--dev", dev_path, "Dev split used for epoch selection")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs", tc.epochs, "Number of epochs")->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate, "Peak learning rate")->capture_default_str();
  train_cmd->add_option("--weight-decay", tc.weight_decay, "Decoupled weight decay")
      ->capture_default_str();
  train_cmd->add_option("--dropout", tc.dropout, "Dropout rate")->capture_default_str();
  train_cmd->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train_cmd->add_option("--warmup", tc.warmup_fraction, "Warmup fraction of total steps")
      ->capture_default_str();
  train_cmd->add_option("--adam-eps", tc.adam_epsilon)->capture_default_str();
  train_cmd->add_option("--max-seq-len", tc.max_seq_len, "Maximal sequence length")
      ->capture_default_str();
  train_cmd->add_option("--dim", tc.dims.dim)->capture_default_str();
  train_cmd->add_option("--hidden", tc.dims.hidden)->capture_default_str();
  train_cmd->add_option("--buckets", tc.dims.buckets)->capture_default_str();
  add_common(train_cmd);

  // score
  auto* score_cmd = app.add_subcommand("score", "Write a backend's scores as a logits file");
  DataOptions score_data;
  std::string score_backend;
  std::string score_out;
  add_data_options(score_cmd, score_data);
  score_cmd->add_option("--backend", score_backend, "kind:id:source")->required();
  score_cmd->add_option("--out", score_out, "Logits file (default <out-dir>/<id>.logits.jsonl)");
  add_common(score_cmd);

  // fit-weights
  auto* fit_cmd = app.add_subcommand("fit-weights", "Fit ensemble weights on a dev split");
  DataOptions fit_data;
  std::vector<std::string> fit_backends;
  auto de = DEConfig<double>::unit_box(3);
  std::vector<double> mutation{de.mutation_min, de.mutation_max};
  bool softmax_first = false;
  add_data_options(fit_cmd, fit_data, "--dev");
  fit_cmd->add_option("--backend", fit_backends, "kind:id:source, repeat per model")->required();
  fit_cmd->add_option("--de-iterations", de.max_iterations, "Iterations of DE search")
      ->capture_default_str();
  fit_cmd->add_option("--de-rel-tol", de.rel_tol, "Relative tolerance")->capture_default_str();
  fit_cmd->add_option("--de-popsize", de.popsize_multiplier, "Population size per dimension")
      ->capture_default_str();
  fit_cmd->add_option("--de-crossover", de.crossover)->capture_default_str();
  fit_cmd->add_option("--de-mutation", mutation, "Dither range for the mutation factor")
      ->expected(2);
  fit_cmd->add_flag("--softmax-first", softmax_first, "Softmax each model's scores before summing");
  add_common(fit_cmd);

  // evaluate / overlap
  auto* eval_cmd = app.add_subcommand("evaluate", "Accuracy of each backend and the ensemble");
  auto* overlap_cmd = app.add_subcommand("overlap", "Overlap of single-model correctness");
  DataOptions eval_data;
  std::vector<std::string> eval_backends;
  std::string weights_path;
  std::optional<std::size_t> vote_fallback;
  for (auto* cmd : {eval_cmd, overlap_cmd}) {
    add_data_options(cmd, eval_data);
    cmd->add_option("--backend", eval_backends, "kind:id:source, in the weights' order")
        ->required();
    cmd->add_option("--weights", weights_path, "Weights file from fit-weights")
        ->required()
        ->check(CLI::ExistingFile);
    add_common(cmd);
  }
  eval_cmd->add_option("--vote-fallback", vote_fallback,
                       "Backend index used when majority voting ties");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return static_cast<int>(ErrorKind::usage);
  }

  try {
    const fs::path dir(out_dir);
    if (stats_cmd->parsed()) {
      const auto format = load_format_config(stats_format);
      const Task task = parse_task(stats_task);
      StatsReport report;
      for (const auto& spec : stats_data) {
        const auto eq = spec.find('=');
        const std::string split = eq == std::string::npos ? fs::path(spec).stem().string()
                                                           : spec.substr(0, eq);
        const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        const auto samples = parse_data(path, format, task);
        report.splits.push_back(dataset_stats(samples, split));
      }
      json j = to_json(report);
      j["config"] = base_config("stats", seed);
      j["config"]["data"] = stats_data;
      j["config"]["task"] = stats_task;
      j["config"]["format"] = to_json(format);
      write_json(dir / "stats.json", j);
      out << to_table(report);
      return 0;
    }

    if (train_cmd->parsed()) {
      const auto format = load_format_config(train_data.format);
      const Task task = parse_task(train_data.task);
      tc.seed = seed;
      tc.markers = format.markers;
      const auto train = parse_data(train_data.data, format, task);
      const auto dev = dev_path.empty() ? std::vector<Sample>{} : parse_data(dev_path, format, task);
      const auto result = train_scorer(train, dev, tc);

      json meta = base_config("train-toy", seed);
      meta["train"] = train_data.data;
      meta["dev"] = dev_path;
      meta["task"] = train_data.task;
      meta["format"] = to_json(format);
      meta["selected_epoch"] = result.selected_epoch;
      save_toy_model(dir / "params.json", {result.params, tc}, meta);

      json trace = {{"config", meta}, {"train_config", to_json(tc)},
                    {"rows", trace_to_json(result.trace)}};
      write_json(dir / "trace.json", trace);
      for (const auto& r : result.trace) {
        out << "epoch " << r.epoch << "  loss " << r.train_loss << "  dev_acc "
            << (r.dev_accuracy ? std::to_string(*r.dev_accuracy) : std::string("-")) << "  lr "
            << r.learning_rate << "\n";
      }
      out << "selected epoch " << result.selected_epoch << ", train accuracy "
          << result.train_accuracy << "\n";
      return 0;
    }

    if (score_cmd->parsed()) {
      const auto format = load_format_config(score_data.format);
      const auto samples = parse_data(score_data.data, format, parse_task(score_data.task));
      const auto backend = ScorerBackend::parse(score_backend);
      LoadOptions options;
      options.markers = format.markers;
      const auto matrix = load_score_matrix(backend, samples, options);
      const fs::path path = score_out.empty() ? dir / (backend.id + ".logits.jsonl")
                                              : fs::path(score_out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      write_logits_file(path, matrix);
      json meta = base_config("score", seed);
      meta["backend"] = backend.descriptor();
      meta["data"] = score_data.data;
      meta["task"] = score_data.task;
      meta["format"] = to_json(format);
      meta["samples"] = matrix.rows.size();
      write_json(path.string() + ".meta.json", {{"config", meta}});
      out << "wrote " << matrix.rows.size() << " records to " << path.string() << "\n";
      return 0;
    }

    if (fit_cmd->parsed()) {
      const auto format = load_format_config(fit_data.format);
      const auto samples = parse_data(fit_data.data, format, parse_task(fit_data.task));
      const auto transform = softmax_first ? ScoreTransform::softmax : ScoreTransform::raw;
      const auto matrices = load_backends(fit_backends, samples, format, transform);
      const auto gold = gold_labels(samples);

      de.seed = seed;
      de.mutation_min = mutation.at(0);
      de.mutation_max = mutation.at(1);
      de.lower = VectorXd::Zero(static_cast<Index>(matrices.size()));
      de.upper = VectorXd::Ones(static_cast<Index>(matrices.size()));
      const auto fit = fit_weights(matrices, gold, de);

      json meta = base_config("fit-weights", seed);
      meta["dev"] = fit_data.data;
      meta["task"] = fit_data.task;
      meta["format"] = to_json(format);
      meta["backends"] = fit_backends;
      meta["score_transform"] = softmax_first ? "softmax" : "raw";
      auto resolved = de;
      resolved.lower = VectorXd::Zero(static_cast<Index>(matrices.size()));
      resolved.upper = VectorXd::Ones(static_cast<Index>(matrices.size()));
      meta["de"] = to_json(resolved);

      json wj = to_json(fit.weights);
      wj["score_transform"] = meta["score_transform"];
      wj["config"] = meta;
      write_json(dir / "weights.json", wj);
      write_json(dir / "de_trace.json",
                 {{"config", meta},
                  {"iterations_used", fit.search.iterations_used},
                  {"converged", fit.search.converged},
                  {"rows", trace_to_json(fit.search)}});

      EvaluationReport report;
      for (std::size_t i = 0; i < matrices.size(); ++i) {
        report.accuracies.push_back(
            {matrices[i].backend_id, fit.weights.single_dev_accuracies[i]});
      }
      report.accuracies.push_back({"ensemble", fit.weights.dev_accuracy});
      report.weights = fit.weights;
      out << render_report(report, ReportFormat::text);
      return 0;
    }

    if (eval_cmd->parsed() || overlap_cmd->parsed()) {
      const bool overlap = overlap_cmd->parsed();
      const auto format = load_format_config(eval_data.format);
      const auto samples = parse_data(eval_data.data, format, parse_task(eval_data.task));
      std::ifstream win(weights_path);
      json wj;
      try {
        wj = json::parse(win);
      } catch (const json::exception& e) {
        throw DataError(weights_path + ": " + e.what());
      }
      const auto weights = weights_from_json(wj);
      const auto transform = parse_transform(wj.value("score_transform", "raw"));
      const auto matrices = load_backends(eval_backends, samples, format, transform);
      check_backend_order(weights, matrices);
      const auto gold = gold_labels(samples);
      const auto ens = ensemble_predictions(weights, matrices, samples);

      json meta = base_config(overlap ? "overlap" : "evaluate", seed);
      meta["data"] = eval_data.data;
      meta["task"] = eval_data.task;
      meta["format"] = to_json(format);
      meta["backends"] = eval_backends;
      meta["weights_file"] = weights_path;
      meta["weights"] = to_json(weights);
      meta["score_transform"] = wj.value("score_transform", "raw");

      EvaluationReport report;
      report.weights = weights;
      std::vector<std::map<std::string, Label>> singles;
      for (const auto& m : matrices) {
        singles.push_back(predictions(m));
        report.accuracies.push_back({m.backend_id, accuracy(singles.back(), gold)});
      }
      report.accuracies.push_back({"ensemble", accuracy(ens, gold)});

      if (overlap) {
        std::vector<CorrectnessBitmap> bitmaps;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < singles.size(); ++i) {
          bitmaps.push_back(correctness(singles[i], gold));
          names.push_back(matrices[i].backend_id);
        }
        report.venn = overlap_analysis(bitmaps, correctness(ens, gold), names);
        report.config = meta;
        write_json(dir / "venn.json", {{"config", meta}, {"venn", to_json(*report.venn)}});
        write_text(dir / "overlap_report.json", render_report(report, ReportFormat::structured));
        out << render_report(report, ReportFormat::text);
        return 0;
      }

      std::size_t fallback = 0;
      if (vote_fallback) {
        fallback = *vote_fallback;
      } else if (weights.single_dev_accuracies.size() == matrices.size()) {
        const auto& acc = weights.single_dev_accuracies;
        fallback = static_cast<std::size_t>(std::max_element(acc.begin(), acc.end()) - acc.begin());
      }
      if (fallback >= matrices.size()) throw UsageError("--vote-fallback out of range");
      std::map<std::string, Label> voted;
      for (const auto& s : samples) {
        std::vector<Label> labels;
        for (const auto& p : singles) labels.push_back(p.at(sample_id(s)));
        voted.emplace(sample_id(s), majority_vote(labels, fallback));
      }
      report.accuracies.push_back({"majority_vote", accuracy(voted, gold)});
      meta["vote_fallback"] = fallback;
      report.config = meta;
      write_text(dir / "report.json", render_report(report, ReportFormat::structured));
      write_text(dir / "report.txt", render_report(report, ReportFormat::text));
      out << render_report(report, ReportFormat::text);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::data);
  }
  return static_cast<int>(ErrorKind::usage);
}

}  // namespace sensekit

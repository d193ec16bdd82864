// Copyright 2026 The aczsl Authors.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aczsl/data.hpp"
#include "aczsl/trainer.hpp"

namespace aczsl {

inline constexpr const char* kVersion = "1.0.0";

// Everything needed to reproduce a set of replicate runs. Keys are
// "section.name" as written in the INI config file.
struct ExperimentConfig {
  std::string data_path;  // empty = synthesize
  SynthSpec synth;
  std::size_t num_tasks = 4;
  std::size_t classes_per_task = 3;
  std::optional<std::uint64_t> order_seed;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::string output;
  std::size_t workers = 0;  // 0 = min(replicates, hardware threads)

  // Parses and assigns one key; throws ConfigError for unknown keys or bad
  // values.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  // Canonical INI text listing every key.
  std::string to_ini() const;

  static const std::vector<std::string>& keys();
};

ExperimentConfig parse_experiment_config(const std::string& ini_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

Dataset load_experiment_dataset(const ExperimentConfig& config);

struct ReplicateOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string message;
  std::filesystem::path directory;
};

// Writes one replicate's artifacts (checkpoint, losses.csv, evaluation.json,
// accuracy_matrix.csv, metrics.json, per_task_curves.csv, predictions.csv,
// split.json, config.ini, run.json) into dir.
void write_run_directory(const std::filesystem::path& dir, const ExperimentConfig& config, std::uint64_t seed,
                         const CzslSplit& split, const StreamResult& result);

// Runs every seed on a bounded worker pool, each into out_dir/seed_<s>.
// Failures are collected per replicate rather than aborting the others.
std::vector<ReplicateOutcome> run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;  // replicates where the metric is defined
};

struct ReportRow {
  std::string label;
  std::size_t replicates = 0;
  MetricSummary msa, mua, mh, moa, bwt;
};

// One row per directory. A directory holding metrics.json is a single
// replicate; otherwise its seed_* subdirectories are aggregated.
std::vector<ReportRow> collect_report(const std::vector<std::filesystem::path>& dirs);
std::string render_report_text(const std::vector<ReportRow>& rows);
std::string render_report_csv(const std::vector<ReportRow>& rows);

struct Evaluation {
  AccuracyMatrix matrix;
  MetricsReport metrics;
};

Evaluation evaluate_predictions(const std::filesystem::path& predictions_csv, const std::filesystem::path& split_json,
                                OverallWeighting weighting = OverallWeighting::class_balanced);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace aczsl

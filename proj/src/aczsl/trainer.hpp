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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aczsl/data.hpp"
#include "aczsl/eval.hpp"
#include "aczsl/model.hpp"

namespace aczsl {

struct TrainConfig {
  // Per-task epoch schedules; task t uses entry t-1, the last entry repeats.
  std::vector<std::size_t> model_epochs{100};
  std::vector<std::size_t> classifier_epochs{30};
  std::size_t s_steps = 1;
  std::size_t d_steps = 1;
  std::size_t batch_size = 61;
  double lr_model = 1e-3;
  double lr_classifier = 1e-4;
  double classifier_weight_decay = 1e-4;
  std::size_t replay_n_per_class = 64;
  std::size_t classifier_n_per_class = 128;
  // 0 = linear softmax classifier.
  std::size_t classifier_hidden_units = 0;
  Lambdas lambdas;
  bool adversarial = true;
  bool replay = true;
  // Replay rows carry their original task id on the real branch instead of
  // the current one.
  bool replay_original_task_ids = false;
  bool standardize = false;

  std::size_t latent_dim = 50;
  std::size_t hidden_units = 500;
  std::size_t hidden_layers = 1;
  double grl_strength = 1.0;
  FakeMode fake_mode = FakeMode::decoded;
  OverallWeighting overall_weighting = OverallWeighting::class_balanced;

  std::uint64_t seed = 0;

  std::size_t model_epochs_for(int t) const;
  std::size_t classifier_epochs_for(int t) const;
  void validate() const;
  ModelConfig model_config(std::size_t feature_dim, std::size_t attr_dim, std::size_t max_tasks) const;
};

enum class Provenance { replay, classifier_train };

struct GeneratedSet {
  Tensor features;
  std::vector<int> labels;
  Tensor attributes;  // one row per sample
  Provenance provenance = Provenance::replay;

  std::size_t size() const { return labels.size(); }
};

// Real training rows of one task, already standardized.
struct TaskData {
  Tensor features;
  std::vector<int> labels;
  std::vector<int> classes;
};

TaskData task_data(const Dataset& ds, const CzslSplit& split, int t);

struct EpochLog {
  int task = 0;
  int epoch = 0;
  LossBreakdown losses;  // mean over the epoch's S-step minibatches
  double d_loss = 0.0;   // mean discriminator loss, 0 when adversarial is off
};

struct TaskTrainingLog {
  int task = 0;
  std::size_t samples_per_epoch = 0;
  std::vector<int> real_classes_read;
  std::vector<EpochLog> epochs;
};

struct TaskOptimizers {
  nn::Adam s;  // shared, private t, head t
  nn::Adam d;  // discriminator
};

TaskOptimizers make_task_optimizers(const AczslModel& model, int t, const TrainConfig& config);

// One S-update on batch. Only shared, private-t and head-t parameters move.
// Throws NumericError before updating if any loss term is not finite.
LossBreakdown s_step(const AczslModel& model, const Batch& batch, int t, nn::Adam& s_opt, RngStream& rng);
// One discriminator update; everything else is left untouched.
double d_step(const AczslModel& model, const Batch& batch, int t, nn::Adam& d_opt, RngStream& rng);

// Trains shared, private-t, head-t and the discriminator on data_t joined
// with replay. Each minibatch gets s_steps S-updates then d_steps D-updates.
TaskTrainingLog train_task(AczslModel& model, const TaskData& data_t, const GeneratedSet& replay,
                           const Tensor& class_attributes, const TrainConfig& config, RngStream& rng);

// n_per_class shared-decoder samples for every class of tasks 1..t.
GeneratedSet build_replay(const AczslModel& model, const Tensor& class_attributes, const CzslSplit& split, int t,
                          std::size_t n_per_class, RngStream& rng);

class Classifier {
 public:
  Classifier(std::size_t feature_dim, std::size_t num_classes, std::size_t hidden_units, RngStream& rng);

  Tensor logits(const Tensor& features) const;
  // argmax over the given classes only.
  std::vector<int> predict(const Tensor& features, std::span<const int> allowed) const;
  std::size_t num_classes() const { return net_.out_dim(); }
  const nn::Mlp& net() const { return net_; }

 private:
  nn::Mlp net_;
};

struct ClassifierResult {
  std::unique_ptr<Classifier> classifier;
  double final_loss = 0.0;
};

// Fresh classifier over every dataset class, trained on shared-decoder
// samples for seen and unseen classes alike.
ClassifierResult train_classifier(const AczslModel& model, const Tensor& class_attributes, const TrainConfig& config,
                                  int t, RngStream& rng);

struct TaskEvaluation {
  int task = 0;
  std::vector<int> seen_classes;
  std::vector<int> unseen_classes;
  std::vector<double> seen;  // R(t, i) for i = 1..t
  std::optional<double> unseen;
  double overall = 0.0;
  double classifier_loss = 0.0;
};

struct StreamResult {
  AccuracyMatrix matrix;
  MetricsReport metrics;
  std::vector<TaskTrainingLog> training;
  std::vector<TaskEvaluation> evaluations;
  std::vector<PredictionRecord> predictions;
  std::unique_ptr<AczslModel> model;
  Standardizer standardizer;
};

// The full sequential protocol: for every task train, fit a classifier,
// evaluate seen/unseen/overall, then build replay for the next task.
StreamResult run_stream(const Dataset& dataset, const CzslSplit& split, const TrainConfig& config);

std::string losses_to_csv(std::span<const TaskTrainingLog> logs);
std::string evaluations_to_json(std::span<const TaskEvaluation> evals);

}  // namespace aczsl

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

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aczsl/cvae.hpp"
#include "aczsl/nn.hpp"

namespace aczsl {

struct Lambdas {
  double adv = 1.0;
  double task = 1.0;
  double vae_shared = 1.0;
  double vae_private = 0.5;
};

// What the discriminator sees as label-0 "fake" input.
enum class FakeMode {
  decoded,    // prior noise pushed through the shared decoder
  raw_noise,  // feature-width standard-normal noise fed directly
};

const char* to_string(FakeMode mode);
FakeMode fake_mode_from_string(const std::string& text);

struct ModelConfig {
  std::size_t feature_dim = 0;
  std::size_t attr_dim = 0;
  std::size_t latent_dim = 50;
  std::size_t hidden_units = 500;
  std::size_t hidden_layers = 1;
  std::size_t max_tasks = 1;
  Lambdas lambdas;
  double grl_strength = 1.0;
  bool adversarial = true;
  FakeMode fake_mode = FakeMode::decoded;
};

// One minibatch. labels are dataset class ids; task_ids are the labels the
// discriminator's real branch is trained toward. fake_attrs holds one
// conditioning row per fake sample.
struct Batch {
  Tensor features;
  Tensor attrs;
  std::vector<int> labels;
  std::vector<int> task_ids;
  Tensor fake_attrs;

  std::size_t size() const { return labels.size(); }
};

struct LossBreakdown {
  double l_adv = 0.0;
  double l_task = 0.0;
  double l_vae_shared = 0.0;
  double l_vae_private = 0.0;
  double total = 0.0;
};

struct LossGraph {
  ad::Var total;
  ad::Var l_adv;
  ad::Var l_task;
  ad::Var l_vae_shared;
  ad::Var l_vae_private;
  ad::Var shared_reconstruction;

  LossBreakdown values() const;
};

struct AdversarialLoss {
  // Real-branch cross-entropy seen through the reversal layer; its gradient
  // pushes the shared module to confuse the discriminator.
  ad::Var shared_path;
  // Cross-entropy on real (detached) and fake inputs, for the D-step.
  ad::Var discriminator;
};

// Shared CVAE, one private CVAE and one classification head per task, and a
// (max_tasks + 1)-way task discriminator whose label 0 marks fake input.
class AczslModel {
 public:
  AczslModel(const ModelConfig& config, RngStream& init_rng);

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }

  // Appends a fresh private CVAE and head for a new task holding class_ids.
  // Earlier privates and heads stop receiving updates. Returns the 1-based
  // task index. Throws ContractError while a task is being trained.
  int add_task(std::span<const int> class_ids);

  std::size_t num_tasks() const { return privates_.size(); }
  const std::vector<int>& task_classes(int t) const;
  // Classes introduced by tasks 1..t, in head-column order.
  std::vector<int> classes_through(int t) const;
  // Column of class_id in head t, or -1.
  int head_column(int t, int class_id) const;

  const Cvae& shared() const { return *shared_; }
  const Cvae& private_module(int t) const;
  const nn::Mlp& head(int t) const;
  nn::Mlp& mutable_head(int t);
  const nn::Mlp& discriminator() const { return *discriminator_; }
  nn::Mlp& mutable_discriminator() { return *discriminator_; }

  ad::Var task_loss(const Batch& batch, int t, RngStream& rng) const;
  AdversarialLoss adversarial_loss(const Batch& batch, int t, RngStream& rng) const;
  LossGraph total_loss(const Batch& batch, int t, RngStream& rng) const;
  // Discriminator objective for the D-step; the shared module is evaluated
  // but cut from the graph.
  ad::Var discriminator_loss(const Batch& batch, int t, RngStream& rng) const;

  nn::ParamList shared_parameters() const;
  nn::ParamList private_parameters(int t) const;
  nn::ParamList head_parameters(int t) const;
  nn::ParamList discriminator_parameters() const;
  // Everything, with stable names; checkpoint order.
  nn::ParamList all_parameters() const;
  void zero_grad() const;

  void begin_training(int t);
  void end_training();
  bool training_active() const { return active_task_ != 0; }

 private:
  void check_task(int t) const;
  std::vector<int> head_targets(int t, std::span<const int> labels) const;
  ad::Var fake_input(const Batch& batch, RngStream& rng) const;

  ModelConfig config_;
  RngStream init_rng_;
  std::unique_ptr<Cvae> shared_;
  std::vector<std::unique_ptr<Cvae>> privates_;
  std::vector<std::unique_ptr<nn::Mlp>> heads_;
  std::unique_ptr<nn::Mlp> discriminator_;
  std::vector<std::vector<int>> task_classes_;
  int active_task_ = 0;
};

// Checkpoint container: the magic "ACZSL1", a little-endian u64 byte count,
// a JSON metadata document of that length, then every tensor's values as
// little-endian IEEE-754 doubles in metadata order.
struct CheckpointInfo {
  std::string config_echo;
  std::size_t task_count = 0;
};

void save_checkpoint(const AczslModel& model, const std::filesystem::path& path, const std::string& config_echo = "");
std::unique_ptr<AczslModel> load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr);

}  // namespace aczsl

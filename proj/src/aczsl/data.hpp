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
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aczsl/tensor.hpp"

namespace aczsl {

// Pre-extracted features with one attribute row (class embedding) per class.
// train_idx and test_idx are sorted row indices into features.
struct Dataset {
  Tensor features;  // n x d
  std::vector<int> labels;
  Tensor attributes;  // C x a
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  std::vector<std::string> names;

  std::size_t num_rows() const { return labels.size(); }
  std::size_t feature_dim() const { return features.cols(); }
  std::size_t attr_dim() const { return attributes.cols(); }
  std::size_t num_classes() const { return attributes.rows(); }

  std::vector<std::size_t> train_rows_of(std::span<const int> classes) const;
  std::vector<std::size_t> test_rows_of(std::span<const int> classes) const;
  Tensor attributes_of(std::span<const int> classes) const;

  // Throws ContractError on any broken invariant.
  void validate() const;
};

// Per class, the first floor(0.8 n) rows in index order (at least one, and
// leaving at least one) train; the remainder test.
void assign_default_split(Dataset& ds);

Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Ordered, disjoint class sets. Task t (1-based) is tasks[t - 1].
struct CzslSplit {
  std::vector<std::vector<int>> tasks;
  std::size_t num_classes = 0;

  std::size_t num_tasks() const { return tasks.size(); }
  const std::vector<int>& task(int t) const;
  // Task (1-based) holding class_id, 0 when the class is in no task.
  int task_of(int class_id) const;
};

CzslSplit make_split(std::size_t num_classes, std::size_t num_tasks, std::size_t classes_per_task,
                     std::optional<std::uint64_t> order_seed = std::nullopt);

struct SeenUnseen {
  std::vector<int> seen;
  std::vector<int> unseen;
};

// seen = classes of tasks 1..t; unseen = every other dataset class.
SeenUnseen seen_unseen_at(const CzslSplit& split, int t);

std::string split_to_json(const CzslSplit& split);
CzslSplit split_from_json(const std::string& text);

struct SynthSpec {
  std::size_t num_classes = 12;
  std::size_t feature_dim = 32;
  std::size_t attr_dim = 8;
  std::size_t n_per_class = 100;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
};

// Class c's samples are drawn from N(W attr_c, sigma^2 I) for one fixed
// random W, so attributes determine class means.
Dataset synth_dataset(const SynthSpec& spec);

// Per-dimension z-score with frozen statistics.
class Standardizer {
 public:
  Standardizer() = default;
  static Standardizer fit(const Tensor& features, std::span<const std::size_t> rows);

  Tensor apply(const Tensor& features) const;
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

}  // namespace aczsl

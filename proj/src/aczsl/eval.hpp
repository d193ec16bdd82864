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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aczsl/data.hpp"

namespace aczsl {

// R values, all 1-based. seen(j, i) is accuracy on task i's classes after
// training task j (i <= j); unseen(t) and overall(t) are the ZSL and GZSL
// accuracies after task t.
class AccuracyMatrix {
 public:
  explicit AccuracyMatrix(std::size_t num_tasks = 0);

  std::size_t num_tasks() const { return unseen_.size(); }

  void set_seen(int j, int i, double value);
  void set_unseen(int t, double value);
  void set_overall(int t, double value);
  std::optional<double> seen(int j, int i) const;
  std::optional<double> unseen(int t) const;
  std::optional<double> overall(int t) const;

 private:
  void check(int t) const;
  static double checked(double value);

  std::vector<std::vector<std::optional<double>>> seen_;
  std::vector<std::optional<double>> unseen_;
  std::vector<std::optional<double>> overall_;
};

struct MetricsReport {
  double msa = 0.0;
  std::optional<double> mua;
  std::optional<double> mh;
  double moa = 0.0;
  std::optional<double> bwt;
};

// Class-balanced accuracy: per-class hit rates averaged over the classes of
// class_set that occur in labels. An absent class is skipped (with a message
// on stderr) or, in strict mode, rejected.
double accuracy(std::span<const int> predictions, std::span<const int> labels, std::span<const int> class_set,
                bool strict = false);

// How the overall (all-classes) regime averages: per-class hit rates, or
// plain hits over samples.
enum class OverallWeighting { class_balanced, sample_weighted };
const char* to_string(OverallWeighting w);
OverallWeighting overall_weighting_from_string(const std::string& text);

double overall_accuracy(std::span<const int> predictions, std::span<const int> labels, std::span<const int> class_set,
                        OverallWeighting weighting);

std::optional<double> bwt(const AccuracyMatrix& m);
double msa(const AccuracyMatrix& m);
std::optional<double> mua(const AccuracyMatrix& m);
double moa(const AccuracyMatrix& m);
std::optional<double> mh(const AccuracyMatrix& m);
// 2 s u / (s + u), 0 when both are 0.
double harmonic_term(double seen, double unseen);
MetricsReport compute_metrics(const AccuracyMatrix& m);

enum class Regime { seen, unseen, overall };
const char* to_string(Regime r);
Regime regime_from_string(const std::string& text);

struct PredictionRecord {
  int t = 0;
  std::size_t sample_id = 0;
  int true_label = 0;
  int pred = 0;
  Regime regime = Regime::seen;
};

std::string predictions_to_csv(std::span<const PredictionRecord> records);
std::vector<PredictionRecord> predictions_from_csv(const std::string& text);

AccuracyMatrix accuracy_matrix_from_predictions(std::span<const PredictionRecord> records, const CzslSplit& split,
                                               OverallWeighting weighting = OverallWeighting::class_balanced);

std::string metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const std::string& text);
std::string accuracy_matrix_to_csv(const AccuracyMatrix& m);
std::string per_task_curves_to_csv(const AccuracyMatrix& m);

}  // namespace aczsl

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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "aczsl/error.hpp"
#include "aczsl/experiment.hpp"

using namespace aczsl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kTinyIni = R"(
[data]
synth_classes = 9
synth_dim = 6
synth_attr = 3
synth_per_class = 10

[split]
num_tasks = 3
classes_per_task = 3

[train]
model_epochs = 2
classifier_epochs = 2
latent_dim = 3
hidden_units = 8
batch_size = 16
replay_n_per_class = 4
classifier_n_per_class = 6

[run]
seeds = 3, 4
workers = 2
)";

void write_metrics(const fs::path& dir, const MetricsReport& m) {
  fs::create_directories(dir);
  write_text_file(dir / "metrics.json", metrics_to_json(m));
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_experiment_config(kTinyIni);
  CHECK(c.synth.num_classes == 9);
  CHECK(c.num_tasks == 3);
  CHECK(c.train.model_epochs == std::vector<std::size_t>{2});
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(c.workers == 2);
  CHECK_NOTHROW(c.validate());

  ExperimentConfig d;
  d.set("train.lambdas", "0, 1, 1, 0.5");
  CHECK(d.train.lambdas.adv == 0.0);
  d.set("train.model_epochs", "100,50");
  CHECK(d.train.model_epochs == std::vector<std::size_t>{100, 50});
  d.set("train.adversarial", "off");
  CHECK_FALSE(d.train.adversarial);
  d.set("train.fake_mode", "raw_noise");
  CHECK(d.train.fake_mode == FakeMode::raw_noise);
  d.set("split.order_seed", "17");
  CHECK(d.order_seed == 17u);

  CHECK_THROWS_AS(d.set("train.learning_rate", "1"), ConfigError);
  CHECK_THROWS_AS(d.set("train.batch_size", "-3"), ConfigError);
  CHECK_THROWS_AS(d.set("train.batch_size", "12abc"), ConfigError);
  CHECK_THROWS_AS(d.set("train.adversarial", "maybe"), ConfigError);
  CHECK_THROWS_AS(d.set("train.lambdas", "1,2"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("[train]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("seeds = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("[train\n"), ConfigError);
}

TEST_CASE("canonical ini round-trips") {
  auto c = parse_experiment_config(kTinyIni);
  c.order_seed = 5;
  c.train.lr_model = 3e-3;
  const auto ini = c.to_ini();
  CHECK(parse_experiment_config(ini).to_ini() == ini);
  for (const auto& key : ExperimentConfig::keys()) CHECK(ini.find(key.substr(key.find('.') + 1) + " = ") != std::string::npos);
}

TEST_CASE("validation happens before training") {
  auto c = parse_experiment_config(kTinyIni);
  c.num_tasks = 4;  // needs 12 classes, only 9 synthesized
  CHECK_THROWS_AS(c.validate(), ConfigError);
  TempDir tmp("aczsl_exp_invalid");
  CHECK_THROWS_AS(run_experiment(c, tmp.path / "out"), ConfigError);
  CHECK_FALSE(fs::exists(tmp.path / "out"));
  c = parse_experiment_config(kTinyIni);
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("replicates write self-describing run directories") {
  TempDir tmp("aczsl_exp_run");
  const auto c = parse_experiment_config(kTinyIni);
  const auto outcomes = run_experiment(c, tmp.path / "a");
  REQUIRE(outcomes.size() == 2);
  for (const auto& o : outcomes) {
    CHECK_MESSAGE(o.ok, o.message);
    for (const char* f : {"config.ini", "run.json", "checkpoint.aczsl", "losses.csv", "evaluation.json",
                          "accuracy_matrix.csv", "metrics.json", "per_task_curves.csv", "predictions.csv",
                          "split.json"})
      CHECK_MESSAGE(fs::exists(o.directory / f), f);
  }
  // The echoed config reproduces the replicate exactly.
  const auto echo = load_experiment_config(tmp.path / "a" / "seed_3" / "config.ini");
  CHECK(echo.seeds == std::vector<std::uint64_t>{3});
  run_experiment(echo, tmp.path / "b");
  CHECK(read_text_file(tmp.path / "a" / "seed_3" / "metrics.json") ==
        read_text_file(tmp.path / "b" / "seed_3" / "metrics.json"));
  CHECK(read_text_file(tmp.path / "a" / "seed_3" / "predictions.csv") ==
        read_text_file(tmp.path / "b" / "seed_3" / "predictions.csv"));

  // Re-evaluating the logged predictions reproduces metrics.json.
  const auto ev = evaluate_predictions(tmp.path / "a" / "seed_4" / "predictions.csv",
                                       tmp.path / "a" / "seed_4" / "split.json");
  CHECK(metrics_to_json(ev.metrics) == read_text_file(tmp.path / "a" / "seed_4" / "metrics.json"));
  CHECK(accuracy_matrix_to_csv(ev.matrix) == read_text_file(tmp.path / "a" / "seed_4" / "accuracy_matrix.csv"));

  const auto rows = collect_report({tmp.path / "a"});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].replicates == 2);
}

TEST_CASE("sample-weighted overall accuracy is recorded and re-evaluated") {
  TempDir tmp("aczsl_exp_weighting");
  auto c = parse_experiment_config(kTinyIni);
  c.seeds = {3};
  c.set("train.overall_weighting", "sample_weighted");
  CHECK(c.to_ini().find("overall_weighting = sample_weighted") != std::string::npos);
  run_experiment(c, tmp.path);
  const auto run = tmp.path / "seed_3";
  const auto ev = evaluate_predictions(run / "predictions.csv", run / "split.json", OverallWeighting::sample_weighted);
  CHECK(metrics_to_json(ev.metrics) == read_text_file(run / "metrics.json"));
  CHECK_THROWS_AS(c.set("train.overall_weighting", "median"), ConfigError);
}

TEST_CASE("worker count does not change results") {
  TempDir tmp("aczsl_exp_workers");
  auto c = parse_experiment_config(kTinyIni);
  c.workers = 1;
  run_experiment(c, tmp.path / "serial");
  c.workers = 2;
  run_experiment(c, tmp.path / "parallel");
  for (const char* s : {"seed_3", "seed_4"})
    CHECK(read_text_file(tmp.path / "serial" / s / "metrics.json") ==
          read_text_file(tmp.path / "parallel" / s / "metrics.json"));
}

TEST_CASE("report aggregation") {
  TempDir tmp("aczsl_exp_report");
  write_metrics(tmp.path / "single", {0.5, 0.25, 1.0 / 3.0, 0.4, 0.1});
  auto rows = collect_report({tmp.path / "single"});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].replicates == 1);
  CHECK(rows[0].msa.mean == 0.5);
  CHECK(rows[0].msa.std == 0.0);

  const double msa[5] = {0.9, 0.8, 0.85, 0.95, 0.7};
  for (int s = 0; s < 5; ++s)
    write_metrics(tmp.path / "five" / ("seed_" + std::to_string(s)), {msa[s], 0.1 * s, std::nullopt, 0.5, -0.01 * s});
  rows = collect_report({tmp.path / "five", tmp.path / "single"});
  REQUIRE(rows.size() == 2);
  double mean = 0, ss = 0;
  for (double v : msa) mean += v / 5;
  for (double v : msa) ss += (v - mean) * (v - mean);
  CHECK(std::abs(rows[0].msa.mean - mean) < 1e-12);
  CHECK(std::abs(rows[0].msa.std - std::sqrt(ss / 4)) < 1e-12);
  CHECK(rows[0].mh.count == 0);
  CHECK(rows[0].label == "five");

  const auto text = render_report_text(rows);
  CHECK(text.find("mSA") < text.find("mUA"));
  CHECK(text.find("mUA") < text.find("mH"));
  CHECK(text.find("mH") < text.find("mOA"));
  CHECK(text.find("±") != std::string::npos);
  const auto csv = render_report_csv(rows);
  CHECK(csv.rfind("run,n,mSA_mean,mSA_std,mUA_mean,mUA_std,mH_mean,mH_std,mOA_mean,mOA_std", 0) == 0);

  try {
    collect_report({tmp.path / "nowhere"});
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("nowhere") != std::string::npos);
  }
  fs::create_directories(tmp.path / "corrupt");
  write_text_file(tmp.path / "corrupt" / "metrics.json", "{\"mSA\": ");
  try {
    collect_report({tmp.path / "corrupt"});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("corrupt") != std::string::npos);
  }
}

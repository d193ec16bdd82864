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

// Exercises the shared library strictly through its C interface.
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "aczsl/aczsl.h"

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

std::string take(char* s) {
  std::string out = s ? s : "";
  aczsl_string_free(s);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

const char* kIni =
    "[data]\nsynth_classes = 6\nsynth_dim = 4\nsynth_attr = 2\nsynth_per_class = 8\n"
    "[split]\nnum_tasks = 2\nclasses_per_task = 3\n"
    "[train]\nmodel_epochs = 2\nclassifier_epochs = 2\nlatent_dim = 2\nhidden_units = 6\n"
    "[run]\nseeds = 1,2\n";

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::string(aczsl_version()) == "1.0.0");
  CHECK(std::string(aczsl_status_string(ACZSL_OK)) == "ok");
  CHECK(std::string(aczsl_status_string(ACZSL_ERR_CONFIG)) == "config error");
  CHECK(std::string(aczsl_status_string(static_cast<aczsl_status>(99))) == "unknown status");
}

TEST_CASE("null arguments are rejected, not dereferenced") {
  CHECK(aczsl_dataset_synth(nullptr, nullptr) == ACZSL_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(aczsl_last_error()) > 0);
  CHECK(aczsl_dataset_load(nullptr, nullptr) == ACZSL_ERR_INVALID_ARGUMENT);
  CHECK(aczsl_config_set(nullptr, "a", "b") == ACZSL_ERR_INVALID_ARGUMENT);
  CHECK(aczsl_report(nullptr, 0, 0, nullptr) == ACZSL_ERR_INVALID_ARGUMENT);
  aczsl_dataset_free(nullptr);
  aczsl_config_free(nullptr);
  aczsl_model_free(nullptr);
  aczsl_string_free(nullptr);
}

TEST_CASE("dataset lifecycle") {
  TempDir tmp("aczsl_capi_ds");
  aczsl_synth_spec spec = aczsl_synth_spec_default();
  CHECK(spec.num_classes == 12);
  spec.seed = 7;
  aczsl_dataset* ds = nullptr;
  REQUIRE(aczsl_dataset_synth(&spec, &ds) == ACZSL_OK);
  aczsl_dataset_info info{};
  REQUIRE(aczsl_dataset_info_get(ds, &info) == ACZSL_OK);
  CHECK(info.rows == 1200);
  CHECK(info.num_classes == 12);
  CHECK(info.train_rows + info.test_rows == 1200);
  REQUIRE(aczsl_dataset_save(ds, (tmp.path / "d").string().c_str()) == ACZSL_OK);
  aczsl_dataset_free(ds);

  aczsl_dataset* back = nullptr;
  REQUIRE(aczsl_dataset_load((tmp.path / "d").string().c_str(), &back) == ACZSL_OK);
  aczsl_dataset_info info2{};
  aczsl_dataset_info_get(back, &info2);
  CHECK(info2.rows == 1200);
  CHECK(info2.feature_dim == 32);
  aczsl_dataset_free(back);

  aczsl_dataset* none = nullptr;
  CHECK(aczsl_dataset_load((tmp.path / "missing").string().c_str(), &none) == ACZSL_ERR_IO);
  CHECK(none == nullptr);
  spec.num_classes = 0;
  CHECK(aczsl_dataset_synth(&spec, &none) == ACZSL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config handles") {
  aczsl_config* cfg = nullptr;
  REQUIRE(aczsl_config_default(&cfg) == ACZSL_OK);
  char* value = nullptr;
  REQUIRE(aczsl_config_get(cfg, "train.batch_size", &value) == ACZSL_OK);
  CHECK(take(value) == "61");
  CHECK(aczsl_config_set(cfg, "train.batch_size", "32") == ACZSL_OK);
  aczsl_config_get(cfg, "train.batch_size", &value);
  CHECK(take(value) == "32");
  CHECK(aczsl_config_set(cfg, "train.nope", "1") == ACZSL_ERR_CONFIG);
  CHECK(std::string(aczsl_last_error()).find("train.nope") != std::string::npos);
  CHECK(aczsl_config_get(cfg, "run.nope", &value) == ACZSL_ERR_CONFIG);
  CHECK(aczsl_config_set(cfg, "train.batch_size", "0") == ACZSL_OK);
  CHECK(aczsl_config_validate(cfg) == ACZSL_ERR_CONFIG);
  char* ini = nullptr;
  REQUIRE(aczsl_config_to_ini(cfg, &ini) == ACZSL_OK);
  CHECK(take(ini).find("batch_size = 0") != std::string::npos);
  aczsl_config_free(cfg);

  aczsl_config* parsed = nullptr;
  CHECK(aczsl_config_parse("[train]\nbatch_size = x\n", &parsed) == ACZSL_ERR_CONFIG);
  CHECK(parsed == nullptr);
  CHECK(aczsl_config_load("/nonexistent/aczsl.ini", &parsed) == ACZSL_ERR_IO);
}

TEST_CASE("experiment, evaluation, report and checkpoints") {
  TempDir tmp("aczsl_capi_run");
  aczsl_config* cfg = nullptr;
  REQUIRE(aczsl_config_parse(kIni, &cfg) == ACZSL_OK);
  struct Seen {
    std::vector<uint64_t> seeds;
    int ok = 0;
  } seen;
  size_t failed = 99;
  const auto cb = [](uint64_t seed, int ok, const char*, const char*, void* user) {
    auto* s = static_cast<Seen*>(user);
    s->seeds.push_back(seed);
    s->ok += ok;
  };
  REQUIRE(aczsl_experiment_run(cfg, tmp.path.string().c_str(), cb, &seen, &failed) == ACZSL_OK);
  CHECK(failed == 0);
  CHECK(seen.seeds == std::vector<uint64_t>{1, 2});
  CHECK(seen.ok == 2);
  aczsl_config_free(cfg);

  const auto run = tmp.path / "seed_1";
  char* metrics = nullptr;
  char* matrix = nullptr;
  REQUIRE(aczsl_evaluate((run / "predictions.csv").string().c_str(), (run / "split.json").string().c_str(), nullptr,
                         &metrics, &matrix) == ACZSL_OK);
  CHECK(take(metrics) == slurp(run / "metrics.json"));
  CHECK(take(matrix) == slurp(run / "accuracy_matrix.csv"));
  CHECK(aczsl_evaluate((run / "missing.csv").string().c_str(), (run / "split.json").string().c_str(), nullptr,
                       &metrics, nullptr) == ACZSL_ERR_IO);
  CHECK(aczsl_evaluate((run / "predictions.csv").string().c_str(), (run / "split.json").string().c_str(), "median",
                       &metrics, nullptr) == ACZSL_ERR_CONFIG);
  REQUIRE(aczsl_evaluate((run / "predictions.csv").string().c_str(), (run / "split.json").string().c_str(),
                         "sample_weighted", &metrics, nullptr) == ACZSL_OK);
  CHECK(take(metrics).find("\"mOA\"") != std::string::npos);

  const std::string parent = tmp.path.string();
  const char* dirs[] = {parent.c_str()};
  char* table = nullptr;
  REQUIRE(aczsl_report(dirs, 1, 0, &table) == ACZSL_OK);
  CHECK(take(table).find("mOA(GZSL)") != std::string::npos);
  REQUIRE(aczsl_report(dirs, 1, 1, &table) == ACZSL_OK);
  CHECK(take(table).rfind("run,n,mSA_mean", 0) == 0);

  aczsl_model* model = nullptr;
  REQUIRE(aczsl_model_load((run / "checkpoint.aczsl").string().c_str(), &model) == ACZSL_OK);
  size_t tasks = 0, params = 0;
  aczsl_model_task_count(model, &tasks);
  aczsl_model_parameter_count(model, &params);
  CHECK(tasks == 2);
  CHECK(params > 0);
  REQUIRE(aczsl_model_save(model, (tmp.path / "copy.aczsl").string().c_str()) == ACZSL_OK);
  CHECK(slurp(tmp.path / "copy.aczsl") == slurp(run / "checkpoint.aczsl"));
  aczsl_model_free(model);
  CHECK(aczsl_model_load((run / "metrics.json").string().c_str(), &model) == ACZSL_ERR_PARSE);
}

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

// aczsl command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aczsl/aczsl.h"

namespace {

namespace fs = std::filesystem;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CString {
  char* p = nullptr;
  ~CString() { aczsl_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct ConfigHandle {
  aczsl_config* p = nullptr;
  ~ConfigHandle() { aczsl_config_free(p); }
};

struct DatasetHandle {
  aczsl_dataset* p = nullptr;
  ~DatasetHandle() { aczsl_dataset_free(p); }
};

// Reports a failed call and returns the matching exit code.
int report_error(const char* what, aczsl_status s) {
  std::cerr << "aczsl: " << what << ": " << aczsl_status_string(s);
  const std::string detail = aczsl_last_error();
  if (!detail.empty()) std::cerr << ": " << detail;
  std::cerr << "\n";
  return (s == ACZSL_ERR_CONFIG || s == ACZSL_ERR_INVALID_ARGUMENT) ? kExitUsage : kExitFailure;
}

fs::path output_root() {
  const char* env = std::getenv("ACZSL_OUTPUT_ROOT");
  return (env && *env) ? fs::path(env) : fs::path("runs");
}

bool write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) {
    std::cerr << "aczsl: cannot write " << path.string() << "\n";
    return false;
  }
  return true;
}

struct SynthArgs {
  aczsl_synth_spec spec = aczsl_synth_spec_default();
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  DatasetHandle ds;
  if (auto s = aczsl_dataset_synth(&a.spec, &ds.p)) return report_error("synth", s);
  const fs::path dir = a.out.empty() ? output_root() / ("synth_seed" + std::to_string(a.spec.seed)) : fs::path(a.out);
  if (auto s = aczsl_dataset_save(ds.p, dir.string().c_str())) return report_error("synth", s);
  aczsl_dataset_info info{};
  aczsl_dataset_info_get(ds.p, &info);
  std::cout << "wrote " << info.rows << " rows (" << info.num_classes << " classes, dim " << info.feature_dim
            << ", attr " << info.attr_dim << ") to " << dir.string() << "\n";
  return 0;
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  bool no_adversarial = false;
  bool no_replay = false;
  std::string seeds;
  int workers = -1;
  std::string output;
};

int cmd_train(const TrainArgs& a) {
  ConfigHandle cfg;
  const auto s = a.config.empty() ? aczsl_config_default(&cfg.p) : aczsl_config_load(a.config.c_str(), &cfg.p);
  if (s) return report_error(a.config.empty() ? "config" : a.config.c_str(), s);

  auto set = [&](const std::string& key, const std::string& value) {
    if (auto st = aczsl_config_set(cfg.p, key.c_str(), value.c_str())) {
      report_error(("--set " + key).c_str(), st);
      return false;
    }
    return true;
  };
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "aczsl: --set expects key=value, got '" << kv << "'\n";
      return kExitUsage;
    }
    if (!set(kv.substr(0, eq), kv.substr(eq + 1))) return kExitUsage;
  }
  if (a.no_adversarial && !set("train.adversarial", "false")) return kExitUsage;
  if (a.no_replay && !set("train.replay", "false")) return kExitUsage;
  if (!a.seeds.empty() && !set("run.seeds", a.seeds)) return kExitUsage;
  if (a.workers >= 0 && !set("run.workers", std::to_string(a.workers))) return kExitUsage;
  if (!a.output.empty() && !set("run.output", a.output)) return kExitUsage;
  if (auto st = aczsl_config_validate(cfg.p)) return report_error("config", st);

  CString out;
  aczsl_config_get(cfg.p, "run.output", &out.p);
  fs::path dir = out.str();
  if (dir.empty()) dir = output_root() / (a.config.empty() ? "default" : fs::path(a.config).stem().string());

  struct Tally {
    std::vector<std::string> failures;
  } tally;
  auto on_replicate = [](uint64_t seed, int ok, const char* message, const char* directory, void* user) {
    auto* t = static_cast<Tally*>(user);
    if (ok)
      std::cout << "seed " << seed << ": ok " << directory << "\n";
    else
      t->failures.push_back("seed " + std::to_string(seed) + ": " + message);
  };
  std::size_t failed = 0;
  if (auto st = aczsl_experiment_run(cfg.p, dir.string().c_str(), on_replicate, &tally, &failed))
    return report_error("train", st);
  if (failed) {
    std::cerr << "aczsl: " << failed << " replicate(s) failed\n";
    for (const auto& f : tally.failures) std::cerr << "  " << f << "\n";
    return kExitFailure;
  }
  return 0;
}

struct EvaluateArgs {
  std::string run_dir;
  std::string predictions;
  std::string split;
  std::string out;
  std::string overall_weighting;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const fs::path run = a.run_dir;
  const fs::path pred = a.predictions.empty() ? run / "predictions.csv" : fs::path(a.predictions);
  const fs::path split = a.split.empty() ? run / "split.json" : fs::path(a.split);
  // A run directory remembers how its overall accuracy was weighted.
  std::string weighting = a.overall_weighting;
  if (weighting.empty() && !a.run_dir.empty() && fs::exists(run / "config.ini")) {
    ConfigHandle cfg;
    CString value;
    if (auto s = aczsl_config_load((run / "config.ini").string().c_str(), &cfg.p)) return report_error("evaluate", s);
    if (auto s = aczsl_config_get(cfg.p, "train.overall_weighting", &value.p)) return report_error("evaluate", s);
    weighting = value.str();
  }
  CString metrics, matrix;
  if (auto s = aczsl_evaluate(pred.string().c_str(), split.string().c_str(),
                              weighting.empty() ? nullptr : weighting.c_str(), &metrics.p, &matrix.p))
    return report_error("evaluate", s);
  if (a.out.empty()) {
    std::cout << metrics.str();
    return 0;
  }
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (!write_file(fs::path(a.out) / "metrics.json", metrics.str()) ||
      !write_file(fs::path(a.out) / "accuracy_matrix.csv", matrix.str()))
    return kExitFailure;
  return 0;
}

struct ReportArgs {
  std::vector<std::string> dirs;
  bool csv = false;
};

int cmd_report(const ReportArgs& a) {
  std::vector<const char*> dirs;
  for (const auto& d : a.dirs) dirs.push_back(d.c_str());
  CString table;
  if (auto s = aczsl_report(dirs.data(), dirs.size(), a.csv ? 1 : 0, &table.p)) return report_error("report", s);
  std::cout << table.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual zero-shot learning with adversarial shared/private CVAEs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("aczsl ") + aczsl_version());

  SynthArgs synth;
  auto* sc = app.add_subcommand("synth", "Write a synthetic attribute-conditioned dataset");
  sc->add_option("--classes", synth.spec.num_classes, "number of classes")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30));
  sc->add_option("--dim", synth.spec.feature_dim, "feature dimension")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30));
  sc->add_option("--attr", synth.spec.attr_dim, "attribute dimension")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30));
  sc->add_option("--per-class", synth.spec.per_class, "samples per class")->check(CLI::Range(2, 1 << 30));
  sc->add_option("--noise", synth.spec.noise, "feature noise sigma")->check(CLI::PositiveNumber);
  sc->add_option("--seed", synth.spec.seed, "generator seed");
  sc->add_option("-o,--out", synth.out, "output directory (default $ACZSL_OUTPUT_ROOT/synth_seed<seed>)");

  TrainArgs train;
  auto* tc = app.add_subcommand("train", "Train every replicate seed of an experiment");
  tc->add_option("-c,--config", train.config, "INI config file")->check(CLI::ExistingFile);
  tc->add_option("--set", train.overrides, "override a config key, e.g. --set train.lr_model=0.003");
  tc->add_flag("--no-adversarial", train.no_adversarial, "disable adversarial training");
  tc->add_flag("--no-replay", train.no_replay, "disable generative replay");
  tc->add_option("--seeds", train.seeds, "comma-separated replicate seeds");
  tc->add_option("--workers", train.workers, "worker pool size (0 = automatic)")->check(CLI::NonNegativeNumber);
  tc->add_option("-o,--output", train.output, "run directory (default $ACZSL_OUTPUT_ROOT/<config name>)");

  EvaluateArgs eval;
  auto* ec = app.add_subcommand("evaluate", "Recompute metrics from a run's predictions");
  ec->add_option("run_dir", eval.run_dir, "run directory holding predictions.csv and split.json");
  ec->add_option("--predictions", eval.predictions, "predictions CSV");
  ec->add_option("--split", eval.split, "split JSON");
  ec->add_option("-o,--out", eval.out, "write metrics.json and accuracy_matrix.csv here instead of stdout");
  ec->add_option("--overall-weighting", eval.overall_weighting,
                 "class_balanced or sample_weighted (default: the run's config, else class_balanced)")
      ->check(CLI::IsMember({"class_balanced", "sample_weighted"}));

  ReportArgs report;
  auto* rc = app.add_subcommand("report", "Tabulate metrics across run directories");
  rc->add_option("dirs", report.dirs, "run directories")->required();
  rc->add_flag("--csv", report.csv, "emit CSV instead of an aligned table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*ec && eval.run_dir.empty() && (eval.predictions.empty() || eval.split.empty())) {
    std::cerr << "aczsl: evaluate needs a run directory or both --predictions and --split\n";
    return kExitUsage;
  }

  if (*sc) return cmd_synth(synth);
  if (*tc) return cmd_train(train);
  if (*ec) return cmd_evaluate(eval);
  return cmd_report(report);
}

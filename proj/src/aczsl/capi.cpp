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

#include "aczsl/aczsl.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "aczsl/error.hpp"
#include "aczsl/experiment.hpp"
#include "aczsl/model.hpp"

struct aczsl_dataset {
  aczsl::Dataset ds;
};

struct aczsl_config {
  aczsl::ExperimentConfig cfg;
};

struct aczsl_model {
  std::unique_ptr<aczsl::AczslModel> model;
  std::string config_echo;
};

namespace {

thread_local std::string g_last_error;

aczsl_status fail(aczsl_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Maps the exception in flight to a status code.
aczsl_status translate() {
  try {
    throw;
  } catch (const aczsl::ShapeError& e) {
    return fail(ACZSL_ERR_SHAPE, e.what());
  } catch (const aczsl::DomainError& e) {
    return fail(ACZSL_ERR_DOMAIN, e.what());
  } catch (const aczsl::ContractError& e) {
    return fail(ACZSL_ERR_CONTRACT, e.what());
  } catch (const aczsl::ParseError& e) {
    return fail(ACZSL_ERR_PARSE, e.what());
  } catch (const aczsl::IoError& e) {
    return fail(ACZSL_ERR_IO, e.what());
  } catch (const aczsl::ConfigError& e) {
    return fail(ACZSL_ERR_CONFIG, e.what());
  } catch (const aczsl::NumericError& e) {
    return fail(ACZSL_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(ACZSL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(ACZSL_ERR_INTERNAL, "unknown error");
  }
}

template <typename F>
aczsl_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return ACZSL_OK;
  } catch (...) {
    return translate();
  }
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define ACZSL_REQUIRE(cond, what) \
  if (!(cond)) return fail(ACZSL_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* aczsl_version(void) { return aczsl::kVersion; }

const char* aczsl_status_string(aczsl_status status) {
  switch (status) {
    case ACZSL_OK: return "ok";
    case ACZSL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ACZSL_ERR_SHAPE: return "shape mismatch";
    case ACZSL_ERR_DOMAIN: return "domain error";
    case ACZSL_ERR_CONTRACT: return "contract violation";
    case ACZSL_ERR_PARSE: return "parse error";
    case ACZSL_ERR_IO: return "i/o error";
    case ACZSL_ERR_CONFIG: return "config error";
    case ACZSL_ERR_NUMERIC: return "numeric error";
    case ACZSL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* aczsl_last_error(void) { return g_last_error.c_str(); }

void aczsl_string_free(char* s) { std::free(s); }

aczsl_synth_spec aczsl_synth_spec_default(void) {
  const aczsl::SynthSpec d;
  return {d.num_classes, d.feature_dim, d.attr_dim, d.n_per_class, d.noise_sigma, d.seed};
}

aczsl_status aczsl_dataset_synth(const aczsl_synth_spec* spec, aczsl_dataset** out) {
  ACZSL_REQUIRE(spec && out, "aczsl_dataset_synth: null argument");
  *out = nullptr;
  ACZSL_REQUIRE(spec->num_classes > 0, "num_classes must be positive");
  ACZSL_REQUIRE(spec->feature_dim > 0 && spec->attr_dim > 0, "dimensions must be positive");
  ACZSL_REQUIRE(spec->per_class >= 2, "per_class must be at least 2");
  ACZSL_REQUIRE(spec->noise > 0.0, "noise must be positive");
  return guarded([&] {
    aczsl::SynthSpec s{spec->num_classes, spec->feature_dim, spec->attr_dim, spec->per_class, spec->noise,
                       spec->seed};
    *out = new aczsl_dataset{aczsl::synth_dataset(s)};
  });
}

aczsl_status aczsl_dataset_load(const char* dir, aczsl_dataset** out) {
  ACZSL_REQUIRE(dir && out, "aczsl_dataset_load: null argument");
  *out = nullptr;
  return guarded([&] { *out = new aczsl_dataset{aczsl::load_dataset(dir)}; });
}

aczsl_status aczsl_dataset_save(const aczsl_dataset* ds, const char* dir) {
  ACZSL_REQUIRE(ds && dir, "aczsl_dataset_save: null argument");
  return guarded([&] { aczsl::save_dataset(ds->ds, dir); });
}

aczsl_status aczsl_dataset_info_get(const aczsl_dataset* ds, aczsl_dataset_info* out) {
  ACZSL_REQUIRE(ds && out, "aczsl_dataset_info_get: null argument");
  const auto& d = ds->ds;
  *out = {d.labels.size(), d.features.cols(), d.attributes.cols(), d.num_classes(), d.train_idx.size(),
          d.test_idx.size()};
  return ACZSL_OK;
}

void aczsl_dataset_free(aczsl_dataset* ds) { delete ds; }

aczsl_status aczsl_config_default(aczsl_config** out) {
  ACZSL_REQUIRE(out, "aczsl_config_default: null argument");
  return guarded([&] { *out = new aczsl_config{}; });
}

aczsl_status aczsl_config_parse(const char* ini_text, aczsl_config** out) {
  ACZSL_REQUIRE(ini_text && out, "aczsl_config_parse: null argument");
  *out = nullptr;
  return guarded([&] { *out = new aczsl_config{aczsl::parse_experiment_config(ini_text)}; });
}

aczsl_status aczsl_config_load(const char* path, aczsl_config** out) {
  ACZSL_REQUIRE(path && out, "aczsl_config_load: null argument");
  *out = nullptr;
  return guarded([&] { *out = new aczsl_config{aczsl::load_experiment_config(path)}; });
}

aczsl_status aczsl_config_set(aczsl_config* cfg, const char* key, const char* value) {
  ACZSL_REQUIRE(cfg && key && value, "aczsl_config_set: null argument");
  return guarded([&] { cfg->cfg.set(key, value); });
}

aczsl_status aczsl_config_get(const aczsl_config* cfg, const char* key, char** out) {
  ACZSL_REQUIRE(cfg && key && out, "aczsl_config_get: null argument");
  *out = nullptr;
  return guarded([&] {
    // Read back through the canonical INI so there is one formatter.
    const std::string k = key;
    const auto dot = k.find('.');
    if (dot == std::string::npos) throw aczsl::ConfigError("unknown config key '" + k + "'");
    const std::string section = "[" + k.substr(0, dot) + "]";
    const std::string name = k.substr(dot + 1) + " = ";
    const std::string ini = cfg->cfg.to_ini();
    const auto sec = ini.find(section + "\n");
    if (sec != std::string::npos) {
      std::size_t pos = sec + section.size() + 1;
      while (pos < ini.size() && ini[pos] != '[' && ini[pos] != '\n') {
        const auto eol = ini.find('\n', pos);
        const std::string line = ini.substr(pos, eol - pos);
        if (line.rfind(name, 0) == 0) {
          *out = dup_string(line.substr(name.size()));
          return;
        }
        pos = eol + 1;
      }
    }
    throw aczsl::ConfigError("unknown config key '" + k + "'");
  });
}

aczsl_status aczsl_config_validate(const aczsl_config* cfg) {
  ACZSL_REQUIRE(cfg, "aczsl_config_validate: null argument");
  return guarded([&] { cfg->cfg.validate(); });
}

aczsl_status aczsl_config_to_ini(const aczsl_config* cfg, char** out) {
  ACZSL_REQUIRE(cfg && out, "aczsl_config_to_ini: null argument");
  *out = nullptr;
  return guarded([&] { *out = dup_string(cfg->cfg.to_ini()); });
}

void aczsl_config_free(aczsl_config* cfg) { delete cfg; }

aczsl_status aczsl_experiment_run(const aczsl_config* cfg, const char* out_dir, aczsl_replicate_fn fn, void* user,
                                  size_t* failed) {
  ACZSL_REQUIRE(cfg && out_dir, "aczsl_experiment_run: null argument");
  if (failed) *failed = 0;
  return guarded([&] {
    const auto outcomes = aczsl::run_experiment(cfg->cfg, out_dir);
    std::size_t bad = 0;
    for (const auto& o : outcomes) {
      if (!o.ok) ++bad;
      if (fn) fn(o.seed, o.ok ? 1 : 0, o.message.c_str(), o.directory.string().c_str(), user);
    }
    if (failed) *failed = bad;
  });
}

aczsl_status aczsl_evaluate(const char* predictions_csv, const char* split_json, const char* overall_weighting,
                            char** metrics_json, char** matrix_csv) {
  ACZSL_REQUIRE(predictions_csv && split_json && metrics_json, "aczsl_evaluate: null argument");
  *metrics_json = nullptr;
  if (matrix_csv) *matrix_csv = nullptr;
  return guarded([&] {
    const auto weighting = overall_weighting ? aczsl::overall_weighting_from_string(overall_weighting)
                                              : aczsl::OverallWeighting::class_balanced;
    const auto ev = aczsl::evaluate_predictions(predictions_csv, split_json, weighting);
    std::unique_ptr<char, decltype(&std::free)> m(dup_string(aczsl::metrics_to_json(ev.metrics)), &std::free);
    if (matrix_csv) *matrix_csv = dup_string(aczsl::accuracy_matrix_to_csv(ev.matrix));
    *metrics_json = m.release();
  });
}

aczsl_status aczsl_report(const char* const* dirs, size_t count, int as_csv, char** out) {
  ACZSL_REQUIRE(out && (dirs || count == 0), "aczsl_report: null argument");
  ACZSL_REQUIRE(count > 0, "aczsl_report: no run directories given");
  *out = nullptr;
  return guarded([&] {
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < count; ++i) {
      if (!dirs[i]) throw aczsl::ContractError("aczsl_report: null directory");
      paths.emplace_back(dirs[i]);
    }
    const auto rows = aczsl::collect_report(paths);
    *out = dup_string(as_csv ? aczsl::render_report_csv(rows) : aczsl::render_report_text(rows));
  });
}

aczsl_status aczsl_model_load(const char* path, aczsl_model** out) {
  ACZSL_REQUIRE(path && out, "aczsl_model_load: null argument");
  *out = nullptr;
  return guarded([&] {
    aczsl::CheckpointInfo info;
    auto m = aczsl::load_checkpoint(path, &info);
    *out = new aczsl_model{std::move(m), info.config_echo};
  });
}

aczsl_status aczsl_model_save(const aczsl_model* model, const char* path) {
  ACZSL_REQUIRE(model && path, "aczsl_model_save: null argument");
  return guarded([&] { aczsl::save_checkpoint(*model->model, path, model->config_echo); });
}

aczsl_status aczsl_model_task_count(const aczsl_model* model, size_t* out) {
  ACZSL_REQUIRE(model && out, "aczsl_model_task_count: null argument");
  *out = model->model->num_tasks();
  return ACZSL_OK;
}

aczsl_status aczsl_model_parameter_count(const aczsl_model* model, size_t* out) {
  ACZSL_REQUIRE(model && out, "aczsl_model_parameter_count: null argument");
  std::size_t n = 0;
  for (const auto& p : model->model->all_parameters()) n += p.var.value().size();
  *out = n;
  return ACZSL_OK;
}

void aczsl_model_free(aczsl_model* model) { delete model; }

}  // extern "C"

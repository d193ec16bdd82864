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

#ifndef ACZSL_ACZSL_H_
#define ACZSL_ACZSL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ACZSL_API __declspec(dllexport)
#else
#define ACZSL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum aczsl_status {
  ACZSL_OK = 0,
  ACZSL_ERR_INVALID_ARGUMENT = 1, /* null pointer or out-of-range argument */
  ACZSL_ERR_SHAPE = 2,
  ACZSL_ERR_DOMAIN = 3,
  ACZSL_ERR_CONTRACT = 4,
  ACZSL_ERR_PARSE = 5,
  ACZSL_ERR_IO = 6,
  ACZSL_ERR_CONFIG = 7,
  ACZSL_ERR_NUMERIC = 8,
  ACZSL_ERR_INTERNAL = 9
} aczsl_status;

ACZSL_API const char* aczsl_version(void);
ACZSL_API const char* aczsl_status_string(aczsl_status status);
/* Message of the last failing call on this thread; "" if none. */
ACZSL_API const char* aczsl_last_error(void);
/* Frees strings returned through char** out-parameters. */
ACZSL_API void aczsl_string_free(char* s);

/* ---- datasets ---- */

typedef struct aczsl_dataset aczsl_dataset;

typedef struct aczsl_synth_spec {
  size_t num_classes;
  size_t feature_dim;
  size_t attr_dim;
  size_t per_class;
  double noise;
  uint64_t seed;
} aczsl_synth_spec;

typedef struct aczsl_dataset_info {
  size_t rows;
  size_t feature_dim;
  size_t attr_dim;
  size_t num_classes;
  size_t train_rows;
  size_t test_rows;
} aczsl_dataset_info;

ACZSL_API aczsl_synth_spec aczsl_synth_spec_default(void);
ACZSL_API aczsl_status aczsl_dataset_synth(const aczsl_synth_spec* spec, aczsl_dataset** out);
ACZSL_API aczsl_status aczsl_dataset_load(const char* dir, aczsl_dataset** out);
ACZSL_API aczsl_status aczsl_dataset_save(const aczsl_dataset* ds, const char* dir);
ACZSL_API aczsl_status aczsl_dataset_info_get(const aczsl_dataset* ds, aczsl_dataset_info* out);
ACZSL_API void aczsl_dataset_free(aczsl_dataset* ds);

/* ---- experiment configs ---- */

typedef struct aczsl_config aczsl_config;

ACZSL_API aczsl_status aczsl_config_default(aczsl_config** out);
ACZSL_API aczsl_status aczsl_config_parse(const char* ini_text, aczsl_config** out);
ACZSL_API aczsl_status aczsl_config_load(const char* path, aczsl_config** out);
ACZSL_API aczsl_status aczsl_config_set(aczsl_config* cfg, const char* key, const char* value);
ACZSL_API aczsl_status aczsl_config_get(const aczsl_config* cfg, const char* key, char** out);
ACZSL_API aczsl_status aczsl_config_validate(const aczsl_config* cfg);
ACZSL_API aczsl_status aczsl_config_to_ini(const aczsl_config* cfg, char** out);
ACZSL_API void aczsl_config_free(aczsl_config* cfg);

/* ---- training ---- */

/* Called once per replicate, from the calling thread, after all finish.
 * message is "" on success. */
typedef void (*aczsl_replicate_fn)(uint64_t seed, int ok, const char* message, const char* directory,
                                   void* user);

/* Trains every seed in the config into out_dir/seed_<s>. Returns ACZSL_OK
 * when the experiment ran; *failed (optional) counts failing replicates. */
ACZSL_API aczsl_status aczsl_experiment_run(const aczsl_config* cfg, const char* out_dir, aczsl_replicate_fn fn,
                                            void* user, size_t* failed);

/* ---- evaluation and reporting ---- */

/* Recomputes the accuracy matrix and metrics from a predictions file.
 * overall_weighting is "class_balanced" (also when NULL) or "sample_weighted". */
ACZSL_API aczsl_status aczsl_evaluate(const char* predictions_csv, const char* split_json,
                                      const char* overall_weighting, char** metrics_json, char** matrix_csv);

/* Aggregates run directories (a replicate or a parent of seed_* dirs). */
ACZSL_API aczsl_status aczsl_report(const char* const* dirs, size_t count, int as_csv, char** out);

/* ---- checkpoints ---- */

typedef struct aczsl_model aczsl_model;

ACZSL_API aczsl_status aczsl_model_load(const char* path, aczsl_model** out);
ACZSL_API aczsl_status aczsl_model_save(const aczsl_model* model, const char* path);
ACZSL_API aczsl_status aczsl_model_task_count(const aczsl_model* model, size_t* out);
ACZSL_API aczsl_status aczsl_model_parameter_count(const aczsl_model* model, size_t* out);
ACZSL_API void aczsl_model_free(aczsl_model* model);

#ifdef __cplusplus
}
#endif

#endif  /* ACZSL_ACZSL_H_ */

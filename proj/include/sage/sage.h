/*
 * Copyright 2026 The SAGE Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SAGE__SAGE_H_
#define SAGE__SAGE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SAGE_API __declspec(dllexport)
#else
#define SAGE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sage_status
{
  SAGE_OK = 0,
  SAGE_ERR_INVALID_ARGUMENT = 1,
  SAGE_ERR_VALIDATION = 2,
  SAGE_ERR_IO = 3,
  SAGE_ERR_PARSE = 4,
  SAGE_ERR_NUMERIC = 5,
  SAGE_ERR_PROTOCOL = 6,
  SAGE_ERR_INTERNAL = 7
} sage_status;

typedef struct sage_config sage_config;
typedef struct sage_dataset sage_dataset;
typedef struct sage_gates sage_gates;

/* Message of the last failed call on this thread; "" after a success. */
SAGE_API const char * sage_last_error(void);
SAGE_API const char * sage_status_name(sage_status status);
SAGE_API const char * sage_version(void);

/* Pipeline configuration. Relative paths resolve against the directory of
 * the config file (or base_dir for sage_config_parse). */
SAGE_API sage_status sage_config_load(const char * path, sage_config ** out);
SAGE_API sage_status sage_config_parse(const char * json, const char * base_dir, sage_config ** out);
SAGE_API void sage_config_free(sage_config * config);
SAGE_API sage_status sage_config_set_out_dir(sage_config * config, const char * out_dir);
SAGE_API sage_status sage_config_override_seeds(sage_config * config, uint64_t seed);
/* Writes the 16 hex digit digest plus a terminating NUL; len must be >= 17. */
SAGE_API sage_status sage_config_digest(const sage_config * config, char * buf, size_t len);

/* Pipeline stages. threads caps the worker count; results do not depend on
 * it. */
SAGE_API sage_status sage_run(const sage_config * config, int threads);
SAGE_API sage_status sage_stratify(const sage_config * config, int threads);
SAGE_API sage_status sage_calibrate(const sage_config * config, int threads);
SAGE_API sage_status sage_harvest(const sage_config * config, int threads);

/* Ablation over the arms in arms_path (NULL for the default arm set).
 * Outputs go to the config's output directory. */
SAGE_API sage_status sage_ablate(const sage_config * config, const char * arms_path, int threads);

/* Synthetic data: dataset.csv, truth.csv and scenario.json in out_dir. */
SAGE_API sage_status sage_generate(const char * scenario_path, const char * out_dir);
SAGE_API sage_status sage_generate_builtin(
  const char * name, size_t n, uint64_t seed, const char * out_dir);

SAGE_API sage_status sage_dataset_load(const char * path, size_t dim, sage_dataset ** out);
SAGE_API size_t sage_dataset_size(const sage_dataset * data);
SAGE_API size_t sage_dataset_dim(const sage_dataset * data);
SAGE_API void sage_dataset_free(sage_dataset * data);

/* Calibrated gates as written by the calibrate stage. Queries take raw
 * feature vectors of the gates' dimension. */
SAGE_API sage_status sage_gates_load(const char * path, sage_gates ** out);
SAGE_API size_t sage_gates_count(const sage_gates * gates);
SAGE_API sage_status sage_gates_score(
  const sage_gates * gates, size_t index, const double * x, size_t dim, double * score);
SAGE_API sage_status sage_gates_accept(
  const sage_gates * gates, const double * x, size_t dim, int * accepted, double * weight);
SAGE_API void sage_gates_free(sage_gates * gates);

#ifdef __cplusplus
}
#endif

#endif /* SAGE__SAGE_H_ */

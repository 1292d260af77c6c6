/* SPDX-License-Identifier: Apache-2.0 */
#ifndef MATTEN_MATTEN_H
#define MATTEN_MATTEN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MATTEN_BUILDING_DLL)
#define MATTEN_API __declspec(dllexport)
#else
#define MATTEN_API __declspec(dllimport)
#endif
#else
#define MATTEN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The first four double as CLI exit codes. */
typedef enum matten_status {
  MATTEN_OK = 0,
  MATTEN_ERR_INTERNAL = 1,
  MATTEN_ERR_CONFIG = 2,
  MATTEN_ERR_DATASET = 3,
  MATTEN_ERR_DIVERGENCE = 4,
  MATTEN_ERR_PARSE = 5,
  MATTEN_ERR_BOUNDS = 6,
  MATTEN_ERR_STATE = 7,
  MATTEN_ERR_SHAPE = 8,
  MATTEN_ERR_ARGUMENT = 9,
  MATTEN_ERR_IO = 10
} matten_status;

typedef struct matten_tensor matten_tensor;
typedef struct matten_model matten_model;

MATTEN_API const char* matten_version(void);
MATTEN_API const char* matten_status_name(matten_status status);

/* Message of the last failure on the calling thread, "" after success. */
MATTEN_API const char* matten_last_error(void);
/* {"error": kind, "message": ...} for the last failure on this thread. */
MATTEN_API const char* matten_last_error_json(void);

/* Strings returned through out-parameters are owned by the caller. */
MATTEN_API void matten_string_free(char* text);

/* Tensors ------------------------------------------------------------- */

/* Reads a formula,value CSV and tensorizes it. `config_json` may be NULL
   for defaults. `report_json` (optional) receives the skip report. */
MATTEN_API matten_status matten_tensorize_csv(const char* csv_path, const char* config_json,
                                              matten_tensor** out, char** report_json);
MATTEN_API matten_status matten_tensor_load(const char* path, matten_tensor** out);
MATTEN_API matten_status matten_tensor_save(const matten_tensor* tensor, const char* path,
                                            const char* meta);
/* Shape, kinds, labels, entry count and density as JSON. */
MATTEN_API matten_status matten_tensor_info(const matten_tensor* tensor, char** info_json);
MATTEN_API size_t matten_tensor_nnz(const matten_tensor* tensor);
MATTEN_API void matten_tensor_free(matten_tensor* tensor);

/* Generates a planted CP tensor from a synthetic spec (JSON object). */
MATTEN_API matten_status matten_synthetic(const char* spec_json, matten_tensor** out);

/* Models -------------------------------------------------------------- */

/* Trains the model described by `model_json` on every entry of `tensor`
   (deduplicated first). `report_json` (optional) receives the train report
   and the resolved model config. */
MATTEN_API matten_status matten_train(const matten_tensor* tensor, const char* model_json,
                                      uint64_t seed, matten_model** out, char** report_json);
MATTEN_API matten_status matten_model_save(const matten_model* model, const char* path);
MATTEN_API matten_status matten_model_load(const char* path, matten_model** out);
MATTEN_API matten_status matten_model_predict_coord(const matten_model* model,
                                                    const uint32_t* coord, size_t order,
                                                    double* out);
MATTEN_API matten_status matten_model_predict_formula(const matten_model* model,
                                                      const char* formula, double* out);
MATTEN_API void matten_model_free(matten_model* model);

/* Experiments --------------------------------------------------------- */

/* Runs a benchmark from a run config document. Writes results.csv,
   samples.csv and report.json to the configured output_dir and returns the
   report through `report_json` (optional). A non-NULL `progress` receives
   one line per step. */
typedef void (*matten_progress_fn)(const char* line, void* user);

MATTEN_API matten_status matten_benchmark(const char* run_json, matten_progress_fn progress,
                                          void* user, char** report_json);
/* Runs an efficiency sweep and writes sweep.csv. */
MATTEN_API matten_status matten_sweep(const char* run_json, matten_progress_fn progress,
                                      void* user);

#ifdef __cplusplus
}
#endif

#endif /* MATTEN_MATTEN_H */

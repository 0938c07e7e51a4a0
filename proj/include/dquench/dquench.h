// Copyright 2026 The dquench Authors
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


#ifndef DQUENCH_DQUENCH_H
#define DQUENCH_DQUENCH_H

#include <stddef.h>

#if defined(DQUENCH_BUILDING)
#define DQ_API __attribute__((visibility("default")))
#else
#define DQ_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dq_status {
    DQ_OK = 0,
    DQ_ERR_INVALID_ARGUMENT = 1,
    DQ_ERR_UNDEFINED_DIRECTION = 2,
    DQ_ERR_GAPLESS = 3,
    DQ_ERR_UNRESOLVED = 4,
    DQ_ERR_NO_CROSSOVER = 5,
    DQ_ERR_DEGENERATE_FIELD = 6,
    DQ_ERR_STEP_SIZE = 7,
    DQ_ERR_IO = 8,
    DQ_ERR_INTERNAL = 9
} dq_status;

typedef enum dq_kind { DQ_KIND_MOMENTUM_QUENCH = 0, DQ_KIND_LATTICE_QUENCH = 1, DQ_KIND_ANALYZE = 2 } dq_kind;

typedef enum dq_field { DQ_FIELD_LINEARIZED = 0, DQ_FIELD_LATTICE = 1 } dq_field;

typedef struct dq_config dq_config;
typedef struct dq_manifest dq_manifest;
typedef struct dq_report dq_report;

/* Message of the last failed call on this thread, "" if none. */
DQ_API const char* dq_last_error(void);
DQ_API const char* dq_version(void);
DQ_API const char* dq_status_name(dq_status status);

/* Config documents. Relative paths in a loaded config resolve against
   DQUENCH_OUTPUT_ROOT when set, else against base_dir (NULL = cwd). */
DQ_API dq_status dq_config_parse(const char* text, dq_config** out);
DQ_API dq_status dq_config_load(const char* path, const char* base_dir, dq_config** out);
DQ_API void dq_config_free(dq_config* cfg);
DQ_API dq_kind dq_config_kind(const dq_config* cfg);
DQ_API size_t dq_config_run_count(const dq_config* cfg);
DQ_API dq_status dq_config_set_output_dir(dq_config* cfg, const char* dir);
DQ_API dq_status dq_config_set_workers(dq_config* cfg, int workers);
/* Writes at most cap bytes including the terminator; *needed gets the full
   size. Pass buf = NULL to query. */
DQ_API dq_status dq_config_serialize(const dq_config* cfg, char* buf, size_t cap, size_t* needed);

DQ_API dq_status dq_run(const dq_config* cfg, dq_manifest** out);
DQ_API void dq_manifest_free(dq_manifest* m);
DQ_API const char* dq_manifest_status(const dq_manifest* m);
DQ_API const char* dq_manifest_config_hash(const dq_manifest* m);
/* 0 complete, 2 every run failed, 3 partial. */
DQ_API int dq_manifest_exit_code(const dq_manifest* m);
DQ_API double dq_manifest_wall_clock(const dq_manifest* m);
DQ_API size_t dq_manifest_run_count(const dq_manifest* m);
DQ_API dq_status dq_manifest_run(const dq_manifest* m, size_t i, double* tau, double* gamma, int* ok,
                                 size_t* censored);
DQ_API const char* dq_manifest_run_error(const dq_manifest* m, size_t i);
DQ_API size_t dq_manifest_file_count(const dq_manifest* m);
DQ_API const char* dq_manifest_file_path(const dq_manifest* m, size_t i);
DQ_API const char* dq_manifest_file_sha256(const dq_manifest* m, size_t i);

DQ_API dq_status dq_analyze(const dq_config* cfg, dq_report** out);
DQ_API void dq_report_free(dq_report* r);
DQ_API size_t dq_report_row_count(const dq_report* r);
DQ_API dq_status dq_report_row(const dq_report* r, size_t i, double* exponent, double* prefactor,
                               double* residual, double* expected_weak, double* expected_strong);
DQ_API dq_status dq_report_crossover(const dq_report* r, double* x_c);
DQ_API const char* dq_report_text(const dq_report* r);

DQ_API dq_status dq_two_level_coherence(double delta, double gamma, double t, double* out);

/* Pseudo-spin of one momentum through a quench. spins receives 3 values per
   entry of times; times must ascend within [t0, tf]. dt <= 0 picks the
   stable step for that momentum. */
DQ_API dq_status dq_integrate_trajectory(dq_field field, double tau, double gamma, double t0, double tf,
                                         double dt, double kx, double ky, const double* times, size_t count,
                                         double* spins);

/* Winding of the field direction at mass m. Lattice fields use the
   points x points Brillouin-zone grid, linearized fields a grid of
   half-width k_max. */
DQ_API dq_status dq_winding_number(dq_field field, double m, int points, double k_max, int* out);

#ifdef __cplusplus
}
#endif

#endif

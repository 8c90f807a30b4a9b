/* Copyright 2026 The spdelab Authors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef SPDELAB_SPDELAB_H_
#define SPDELAB_SPDELAB_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SPDELAB_API __declspec(dllexport)
#else
#define SPDELAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spdelab_status {
  SPDELAB_OK = 0,
  SPDELAB_ERR_CONFIGURATION = 1,
  SPDELAB_ERR_DOMAIN = 2,
  SPDELAB_ERR_SHAPE = 3,
  SPDELAB_ERR_NUMERIC = 4,
  SPDELAB_ERR_IO = 5,
  SPDELAB_ERR_INVALID_ARGUMENT = 6,
  SPDELAB_ERR_INTERNAL = 7
} spdelab_status;

typedef enum spdelab_space_kind { SPDELAB_SPACE_SPECTRAL = 0, SPDELAB_SPACE_FEM_P1 = 1 } spdelab_space_kind;

typedef struct spdelab_basis spdelab_basis;
typedef struct spdelab_space spdelab_space;
typedef struct spdelab_problem spdelab_problem;

typedef struct spdelab_estimate {
  double value;
  double stderr_value;
  double eval_time;
  size_t samples;
  double p;
} spdelab_estimate;

typedef struct spdelab_rate {
  double slope;
  double slope_stderr;
  double expected;
  double tolerance;
  int pass;
} spdelab_rate;

SPDELAB_API const char* spdelab_version(void);

/* Message of the last failed call on this thread ("" if none). */
SPDELAB_API const char* spdelab_last_error(void);

/* quadrature_size 0 selects the default grid for mode_count. */
SPDELAB_API spdelab_status spdelab_basis_create(size_t mode_count, size_t quadrature_size,
                                                spdelab_basis** out);
SPDELAB_API void spdelab_basis_destroy(spdelab_basis* basis);
SPDELAB_API size_t spdelab_basis_quadrature_size(const spdelab_basis* basis);

/* resolution is N for spectral spaces (needs basis) and the element count for P1. */
SPDELAB_API spdelab_status spdelab_space_create(spdelab_space_kind kind, const spdelab_basis* basis,
                                                size_t resolution, spdelab_space** out);
SPDELAB_API void spdelab_space_destroy(spdelab_space* space);
SPDELAB_API size_t spdelab_space_dim(const spdelab_space* space);
SPDELAB_API double spdelab_space_h(const spdelab_space* space);

/* Built-in problem by name (P1, P2, P3, P3f, P4). */
SPDELAB_API spdelab_status spdelab_problem_create(const char* name, const spdelab_basis* basis,
                                                  size_t noise_modes, spdelab_problem** out);
SPDELAB_API void spdelab_problem_destroy(spdelab_problem* problem);
SPDELAB_API spdelab_status spdelab_problem_set_final_time(spdelab_problem* problem, double T);

/* Strong error of (coarse, k) against (ref, k_ref) over coupled samples. */
SPDELAB_API spdelab_status spdelab_strong_error(const spdelab_problem* problem,
                                                const spdelab_space* coarse, double k,
                                                const spdelab_space* ref, double k_ref,
                                                size_t samples, double p, uint64_t base_seed,
                                                size_t threads, spdelab_estimate* out);

/* Rate check for a named lemma over levels (N, element counts or k). */
SPDELAB_API spdelab_status spdelab_lemma_check(const char* id, double mu, double nu, double rho,
                                               spdelab_space_kind kind, const double* levels,
                                               size_t level_count, spdelab_rate* out);

/* Returns the number of validation errors; the messages, newline separated,
 * are copied (truncated) into errors when it is non-null. */
SPDELAB_API size_t spdelab_config_validate(const char* json, char* errors, size_t errors_size);

/* Runs a JSON experiment and returns its exit status: 0 pass, 1 fail,
 * 2 configuration error, 3 I/O error. The summary or error list is copied
 * into diagnostics when it is non-null. */
SPDELAB_API int spdelab_run_experiment(const char* json, char* diagnostics, size_t diagnostics_size);

#ifdef __cplusplus
}
#endif

#endif /* SPDELAB_SPDELAB_H_ */

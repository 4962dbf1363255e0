/* Apache License, Version 2.0, refer to LICENSE.txt */

#ifndef SEPEX_SEPEX_H
#define SEPEX_SEPEX_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(SEPEX_BUILDING_LIBRARY)
#define SEPEX_API __attribute__((visibility("default")))
#else
#define SEPEX_API
#endif

/* Every fallible call returns one of these; details go to sepex_last_error. */
typedef enum sepex_status {
  SEPEX_OK = 0,
  SEPEX_ERR_PARAMETER = 1,  /* bad option or hyperparameter */
  SEPEX_ERR_VALIDATION = 2, /* malformed or inconsistent input data */
  SEPEX_ERR_NUMERICAL = 3,  /* sampler failure (non-finite state, ...) */
  SEPEX_ERR_IO = 4,         /* file or archive problem */
  SEPEX_ERR_INTERNAL = 5,   /* unexpected exception */
  SEPEX_ERR_NULL = 6        /* null handle or pointer argument */
} sepex_status;

typedef struct sepex_context sepex_context;
typedef struct sepex_archive sepex_archive;

SEPEX_API const char* sepex_version(void);
SEPEX_API const char* sepex_status_string(int status);

/* A context carries the last error message and the last job result. It is
 * not thread-safe; use one context per thread. */
SEPEX_API sepex_context* sepex_context_create(void);
SEPEX_API void sepex_context_destroy(sepex_context* ctx);
SEPEX_API const char* sepex_last_error(const sepex_context* ctx);
/* JSON result of the last successful job, "" otherwise. */
SEPEX_API const char* sepex_last_result(const sepex_context* ctx);

/* Jobs. `options_json` is a JSON object; the keys are documented in the
 * README and match the config-file schema. */
SEPEX_API int sepex_simulate(sepex_context* ctx, const char* options_json);
SEPEX_API int sepex_fit(sepex_context* ctx, const char* options_json);
SEPEX_API int sepex_summarize(sepex_context* ctx, const char* options_json);
SEPEX_API int sepex_rank(sepex_context* ctx, const char* options_json);
/* `all_pass` (may be null) receives 1 when every check passed. */
SEPEX_API int sepex_check_exch(sepex_context* ctx, const char* options_json,
                               int* all_pass);
SEPEX_API int sepex_diagnose(sepex_context* ctx, const char* options_json);

/* Read-only access to a chain archive. Labels are the top-level partition:
 * subject labels S for the nested model, protein labels s for the DDP. */
SEPEX_API int sepex_archive_open(sepex_context* ctx, const char* path,
                                 sepex_archive** out);
SEPEX_API void sepex_archive_close(sepex_archive* archive);
SEPEX_API int sepex_archive_info(sepex_context* ctx,
                                 const sepex_archive* archive, size_t* chains,
                                 size_t* draws_per_chain, size_t* items,
                                 size_t* iters);
SEPEX_API int sepex_archive_labels(sepex_context* ctx,
                                   const sepex_archive* archive, size_t chain,
                                   size_t draw, int* out, size_t len);
SEPEX_API int sepex_archive_log_joint(sepex_context* ctx,
                                      const sepex_archive* archive,
                                      size_t chain, double* out, size_t len);

/* Binder-loss point estimate from `n_draws` row-major label vectors of
 * length `n_items`. Writes canonical labels and the loss. */
SEPEX_API int sepex_binder_point_estimate(sepex_context* ctx, const int* labels,
                                          size_t n_draws, size_t n_items,
                                          int* out_labels, double* out_loss);

/* Quantile ranking of a row-major n_draws x n_items gamma matrix. `top` = 0
 * selects ceil((1 - c)(I + 1)) items. Outputs have n_items entries;
 * `selected` receives 0/1 flags. */
SEPEX_API int sepex_rank_quantile(sepex_context* ctx, const double* gamma,
                                  size_t n_draws, size_t n_items, double c,
                                  size_t top, double* exceed_prob, int* r_star,
                                  int* selected);

#ifdef __cplusplus
}
#endif

#endif /* SEPEX_SEPEX_H */

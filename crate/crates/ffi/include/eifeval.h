#ifndef EIFEVAL_H
#define EIFEVAL_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EifStatus {
  EIF_STATUS_OK = 0,
  EIF_STATUS_NULL_POINTER = 1,
  EIF_STATUS_INVALID_INPUT = 2,
  EIF_STATUS_INVALID_CONFIG = 3,
  EIF_STATUS_CONTRACT = 4,
  EIF_STATUS_PARSE = 5,
  EIF_STATUS_IO = 6,
  EIF_STATUS_SINGULAR_DESIGN = 7,
  EIF_STATUS_EMPTY_DATASET = 8,
  EIF_STATUS_PANIC = 99,
} EifStatus;

typedef enum EifMethod {
  EIF_METHOD_NAIVE = 0,
  EIF_METHOD_ONE_STEP_CROSSFIT = 1,
  EIF_METHOD_ONE_STEP_FIXED = 2,
} EifMethod;

/**
 * Opaque handle to a loaded benchmark dataset.
 */
typedef struct EifBenchDataset EifBenchDataset;

/**
 * Flat copy of an estimate report.
 */
typedef struct EifReport {
  enum EifMethod method;
  double theta_hat;
  double theta_hat_clamped;
  double var_influence;
  double std_error;
  double level;
  double ci_lo;
  double ci_hi;
  size_t n;
  size_t m;
  size_t k;
} EifReport;

typedef struct EifVariances {
  double var_naive;
  double var_onestep;
  double vr;
} EifVariances;

/**
 * Simulation settings for a single model.
 */
typedef struct EifSimParams {
  size_t n;
  size_t m;
  double sigma_sq;
  double rho1;
  double rho2;
  double sigma_eta;
  size_t folds;
  uint64_t seed;
} EifSimParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *eif_last_error_message(void);

/**
 * Loads a benchmark JSONL file. Free the handle with [`eif_bench_free`].
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum EifStatus eif_bench_load(const char *path, struct EifBenchDataset **out);

/**
 * # Safety
 * `dataset` must come from [`eif_bench_load`] and not be freed twice. NULL is ignored.
 */
void eif_bench_free(struct EifBenchDataset *dataset);

/**
 * Number of records, or 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t eif_bench_len(const struct EifBenchDataset *dataset);

/**
 * Auxiliary samples per record used for integration (`M`), or 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t eif_bench_m(const struct EifBenchDataset *dataset);

/**
 * Naive accuracy estimate over a loaded dataset.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum EifStatus eif_bench_naive(const struct EifBenchDataset *dataset,
                               double level,
                               struct EifReport *out);

/**
 * One-step estimate from the dataset's fixed tau predictions.
 * `clamped_out` may be NULL; otherwise it receives the number of clamped predictions.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum EifStatus eif_bench_one_step_fixed(const struct EifBenchDataset *dataset,
                                        double level,
                                        struct EifReport *out,
                                        size_t *clamped_out);

/**
 * Naive estimate from raw metric values.
 *
 * # Safety
 * `phis` must point to `len` doubles; `out` must be writable.
 */
enum EifStatus eif_naive_from_scores(const double *phis,
                                     size_t len,
                                     double level,
                                     struct EifReport *out);

/**
 * Closed-form variances for the simulation model.
 *
 * # Safety
 * `out` must be writable.
 */
enum EifStatus eif_oracle_variances(double sigma_sq,
                                    double rho,
                                    double sigma_eta,
                                    struct EifVariances *out);

/**
 * Kendall tau between two rankings given as 1-based model ids.
 *
 * # Safety
 * `a` and `b` must each point to `len` values; `out` must be writable.
 */
enum EifStatus eif_kendall_tau(const size_t *a, const size_t *b, size_t len, double *out);

/**
 * `|naive - gt| - |onestep - gt|`; positive when the one-step estimate is closer.
 */
double eif_improvement(double naive, double onestep, double gt);

/**
 * Simulates one model's dataset and returns naive and cross-fitted one-step
 * estimates of its squared error.
 *
 * # Safety
 * `params` must be readable; `naive_out` and `onestep_out` must be writable.
 */
enum EifStatus eif_simulate_estimate(const struct EifSimParams *params,
                                     double level,
                                     struct EifReport *naive_out,
                                     struct EifReport *onestep_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EIFEVAL_H */

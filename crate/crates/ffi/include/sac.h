#ifndef SAC_H
#define SAC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SacStatus {
  SAC_STATUS_OK = 0,
  SAC_STATUS_NULL_POINTER = 1,
  SAC_STATUS_INVALID_INPUT = 2,
  /**
   * Singular or indefinite matrices, failed root finding and similar.
   */
  SAC_STATUS_NUMERICAL = 3,
  SAC_STATUS_PANIC = 4,
} SacStatus;

typedef enum SacRegime {
  SAC_REGIME_NOISELESS = 0,
  SAC_REGIME_CONSTRAINED = 1,
  SAC_REGIME_CONSTRAINT_INACTIVE = 2,
} SacRegime;

/**
 * Opaque Rényi dataset.
 */
typedef struct SacDataset SacDataset;

/**
 * Opaque estimate.
 */
typedef struct SacEstimate SacEstimate;

/**
 * Estimator settings. Start from [`sac_options_default`].
 */
typedef struct SacOptions {
  double epsilon;
  double eta;
  /**
   * χ² radius; zero or negative selects `k_max`.
   */
  double chi2_0;
} SacOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL.
 *
 * The pointer stays valid until the next `sac_*` call on the same thread.
 */
const char *sac_last_error_message(void);

/**
 * Defaults: the bundled conformal parameters and `chi2_0 = 0`.
 */
struct SacOptions sac_options_default(void);

/**
 * Builds a dataset from `len` orders and Rényi values in bits.
 *
 * `covariance` is NULL for exact data, otherwise `len * len` doubles in
 * row-major order.
 *
 * # Safety
 * `orders` and `values` must point to `len` readable elements, `covariance`
 * to `len * len` or be NULL, and `out` must be writable.
 */
enum SacStatus sac_dataset_new(const uint32_t *orders,
                               const double *values,
                               const double *covariance,
                               size_t len,
                               struct SacDataset **out);

/**
 * # Safety
 * `dataset` must come from [`sac_dataset_new`] and not be freed twice. NULL is ignored.
 */
void sac_dataset_free(struct SacDataset *dataset);

/**
 * Number of orders in the dataset, 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t sac_dataset_len(const struct SacDataset *dataset);

/**
 * True when the dataset carries a covariance and takes the noisy path.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
bool sac_dataset_is_noisy(const struct SacDataset *dataset);

/**
 * Runs the estimator. `options` may be NULL for the defaults.
 *
 * # Safety
 * `dataset` must be a live handle, `options` NULL or readable, `out` writable.
 */
enum SacStatus sac_estimate(const struct SacDataset *dataset,
                            const struct SacOptions *options,
                            struct SacEstimate **out);

/**
 * # Safety
 * `estimate` must come from [`sac_estimate`] and not be freed twice. NULL is ignored.
 */
void sac_estimate_free(struct SacEstimate *estimate);

/**
 * Von Neumann entropy estimate in bits; NaN for NULL.
 *
 * # Safety
 * `estimate` must be NULL or a live handle.
 */
double sac_estimate_value(const struct SacEstimate *estimate);

/**
 * Minimal squared norm at the estimate; NaN for NULL.
 *
 * # Safety
 * `estimate` must be NULL or a live handle.
 */
double sac_estimate_delta2(const struct SacEstimate *estimate);

/**
 * # Safety
 * `estimate` must be NULL or a live handle.
 */
double sac_estimate_kernel_condition(const struct SacEstimate *estimate);

/**
 * # Safety
 * `estimate` must be a live handle and `out` writable.
 */
enum SacStatus sac_estimate_regime(const struct SacEstimate *estimate, enum SacRegime *out);

/**
 * Chebyshev interpolation of the supplied orders, evaluated at `k = 1`.
 *
 * # Safety
 * `dataset` must be a live handle and `out` writable.
 */
enum SacStatus sac_chebyshev(const struct SacDataset *dataset, double *out);

/**
 * Least-squares polynomial of the given degree, evaluated at `k = 1`.
 *
 * # Safety
 * `dataset` must be a live handle and `out` writable.
 */
enum SacStatus sac_least_squares(const struct SacDataset *dataset, size_t degree, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAC_H */

#ifndef QMC_MALLIAVIN_H
#define QMC_MALLIAVIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum QmStatus {
  QM_STATUS_OK = 0,
  QM_STATUS_NULL_POINTER = 1,
  QM_STATUS_INVALID_CONFIG = 2,
  QM_STATUS_RUN_FAILED = 3,
  QM_STATUS_OUT_OF_RANGE = 4,
  QM_STATUS_PANIC = 5,
} QmStatus;

typedef enum QmPayoff {
  QM_PAYOFF_ASIAN_FIXED = 0,
  QM_PAYOFF_ASIAN_FLOATING = 1,
  QM_PAYOFF_DIGITAL = 2,
  QM_PAYOFF_EXOTIC = 3,
} QmPayoff;

typedef enum QmMethod {
  QM_METHOD_ADAPTIVE = 0,
  /**
   * Fixed localization width; `method_parameter` is the fraction of the strike.
   */
  QM_METHOD_LOCALIZED = 1,
  /**
   * Central differences; `method_parameter` is the relative spot bump.
   */
  QM_METHOD_FINITE_DIFFERENCE = 2,
} QmMethod;

/**
 * Opaque market handle.
 */
typedef struct QmMarket QmMarket;

/**
 * Opaque result handle.
 */
typedef struct QmReport QmReport;

/**
 * Sampling and method settings for [`qm_estimate`].
 */
typedef struct QmRunOptions {
  enum QmPayoff payoff;
  double strike;
  enum QmMethod method;
  double method_parameter;
  size_t points;
  size_t replications;
  /**
   * 0 selects min(50, assets * steps).
   */
  size_t lss_block;
  uint64_t seed;
  /**
   * Nonzero enables the orthogonal transformation.
   */
  int32_t transform;
  /**
   * Nonzero selects pseudo-random sampling instead of scrambled Sobol'.
   */
  int32_t pseudo_random;
  /**
   * Nonzero reuses the first replication as the pilot sample.
   */
  int32_t reuse_pilot;
} QmRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *qm_last_error(void);

/**
 * Reference market: spots 100, rate 5%, maturity 1, volatilities from 10%
 * to 50%, pairwise correlation 0.5, equally spaced dates.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum QmStatus qm_market_reference(size_t assets, size_t steps, struct QmMarket **out);

/**
 * Market from explicit parameters. `spots` and `vols` hold `assets`
 * values, `correlation` holds `assets * assets` values row-major.
 *
 * # Safety
 * The arrays must be readable for the stated lengths and `out` writable.
 */
enum QmStatus qm_market_new(size_t assets,
                            size_t steps,
                            const double *spots,
                            const double *vols,
                            const double *correlation,
                            double rate,
                            double maturity,
                            struct QmMarket **out);

/**
 * # Safety
 * `market` must come from this library and not be used afterwards.
 */
void qm_market_free(struct QmMarket *market);

/**
 * Defaults: at-the-money fixed-strike call, adaptive localization,
 * 32 replications of 2048 points, transformation on.
 *
 * # Safety
 * `out` must be writable.
 */
enum QmStatus qm_run_options_default(struct QmRunOptions *out);

/**
 * Runs one estimation.
 *
 * # Safety
 * `market` and `options` must be valid; `out` must be writable.
 */
enum QmStatus qm_estimate(const struct QmMarket *market,
                          const struct QmRunOptions *options,
                          struct QmReport **out);

/**
 * Number of Delta components, 0 for a null handle.
 *
 * # Safety
 * `report` must be null or valid.
 */
size_t qm_report_components(const struct QmReport *report);

/**
 * Delta of component `k` (zero-based).
 *
 * # Safety
 * `report` must be valid and `out` writable.
 */
enum QmStatus qm_report_delta(const struct QmReport *report, size_t k, double *out);

/**
 * Standard error of component `k` across replications.
 *
 * # Safety
 * `report` must be valid and `out` writable.
 */
enum QmStatus qm_report_stderr(const struct QmReport *report, size_t k, double *out);

/**
 * Discounted price estimate and its standard error.
 *
 * # Safety
 * `report` must be valid; both outputs writable.
 */
enum QmStatus qm_report_price(const struct QmReport *report, double *price, double *stderr);

/**
 * Paths dropped as degenerate, and total simulated paths.
 *
 * # Safety
 * `report` must be valid; both outputs writable.
 */
enum QmStatus qm_report_paths(const struct QmReport *report,
                              uint64_t *rejected,
                              uint64_t *simulated);

/**
 * # Safety
 * `report` must come from [`qm_estimate`] and not be used afterwards.
 */
void qm_report_free(struct QmReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMC_MALLIAVIN_H */

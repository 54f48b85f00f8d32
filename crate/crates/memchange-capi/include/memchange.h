/* C interface of the memchange change-point detection library. */

#ifndef MEMCHANGE_H
#define MEMCHANGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Selection rule for the number of changes.
 */
enum McRule
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  MC_RULE_FIXED = 0,
  MC_RULE_BIC = 1,
  MC_RULE_SLOPE = 2,
};
#ifndef __cplusplus
typedef int32_t McRule;
#endif // __cplusplus

/**
 * Status codes returned by every fallible function.
 */
enum McStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  MC_STATUS_OK = 0,
  MC_STATUS_NULL_POINTER = 1,
  MC_STATUS_INVALID_UTF8 = 2,
  MC_STATUS_INVALID_INPUT = 3,
  MC_STATUS_DATA_ERROR = 4,
  MC_STATUS_DEGENERATE_SEGMENT = 5,
  MC_STATUS_INFEASIBLE_K = 6,
  MC_STATUS_IO_ERROR = 7,
  MC_STATUS_BUFFER_TOO_SMALL = 8,
  MC_STATUS_PANIC = 9,
};
#ifndef __cplusplus
typedef int32_t McStatus;
#endif // __cplusplus

/**
 * A detection handle: full contrast curve plus the reported segmentation.
 */
typedef struct McDetection McDetection;

/**
 * A series handle: raw values, owned by the library.
 */
typedef struct McSeries McSeries;

/**
 * Local Whittle fit of one segment.
 */
typedef struct McWhittleFit {
  double d_hat;
  double w_min;
  /**
   * Nonzero when the minimizer sits at an end of the search interval.
   */
  uint8_t at_boundary;
} McWhittleFit;

/**
 * Detection knobs; zero means the documented default. Set `known_k` to a
 * non-negative value to skip selection and report that row.
 */
typedef struct McDetectParams {
  size_t m;
  size_t k_max;
  size_t step;
  size_t min_seg;
  /**
   * Fixed penalty per break; 0 means `2 / sqrt(n)`.
   */
  double z_n;
  /**
   * True change count, or -1 when unknown.
   */
  int64_t known_k;
  McRule rule;
  /**
   * Slope fit range; both 0 means the default `2..k_max`.
   */
  size_t slope_fit_lo;
  size_t slope_fit_hi;
} McDetectParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the message of the most recent failure on this thread into `buf`
 * (NUL terminated, truncated to `cap`). Returns the full message length.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be NULL (then only the
 * required length is returned).
 */
size_t mc_last_error(char *buf, size_t cap);

/**
 * Wrap a copy of `len` raw values into a series handle.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be a valid
 * destination pointer.
 */
McStatus mc_series_from_values(const double *values, size_t len, struct McSeries **out);

/**
 * Simulate a trajectory from a JSON process specification, e.g.
 * `{"n":1000,"taus":[0.5],"regimes":[{"family":"farima00","d":0.4},
 * {"family":"farima00","d":0.1}]}`. `truncation` 0 selects `10 * n`.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string; `out` must be valid.
 */
McStatus mc_simulate_json(const char *spec_json,
                          uint64_t seed,
                          size_t truncation,
                          struct McSeries **out);

/**
 * Number of values held by the series, or 0 for NULL.
 *
 * # Safety
 * `series` must be NULL or a live handle.
 */
size_t mc_series_len(const struct McSeries *series);

/**
 * Copy the series values into `buf` (`cap` doubles available).
 *
 * # Safety
 * `series` must be a live handle; `buf` must hold `cap` doubles.
 */
McStatus mc_series_copy_values(const struct McSeries *series, double *buf, size_t cap);

/**
 * Release a series handle (NULL is a no-op).
 *
 * # Safety
 * `series` must be NULL or a handle not yet freed.
 */
void mc_series_free(struct McSeries *series);

/**
 * Local Whittle fit on the window `{a+1, ..., b}`; pass `a = b = 0` for
 * the full series and `m = 0` for the default bandwidth.
 *
 * # Safety
 * `series` must be a live handle and `out` a valid destination.
 */
McStatus mc_estimate_d(const struct McSeries *series,
                       size_t m,
                       size_t a,
                       size_t b,
                       struct McWhittleFit *out);

/**
 * Segment the series and select the number of changes.
 *
 * # Safety
 * `series` must be a live handle; `params` NULL or valid; `out` valid.
 */
McStatus mc_detect(const struct McSeries *series,
                   const struct McDetectParams *params,
                   struct McDetection **out);

/**
 * Selected number of changes.
 *
 * # Safety
 * `det` must be a live handle.
 */
size_t mc_detection_k_hat(const struct McDetection *det);

/**
 * Fitted slope magnitude (zero unless the slope rule ran).
 *
 * # Safety
 * `det` must be a live handle.
 */
double mc_detection_s_hat(const struct McDetection *det);

/**
 * Number of contrast rows (`k_max + 1`).
 *
 * # Safety
 * `det` must be a live handle.
 */
size_t mc_detection_num_rows(const struct McDetection *det);

/**
 * Copy `C(K)` for `K = 0..num_rows` into `buf`.
 *
 * # Safety
 * `det` must be a live handle; `buf` must hold `cap` doubles.
 */
McStatus mc_detection_contrasts(const struct McDetection *det, double *buf, size_t cap);

/**
 * Copy the `k` breakpoints of row `k` into `buf`; pass `buf = NULL` to
 * query the length through `out_len`.
 *
 * # Safety
 * `det` must be a live handle; `buf` NULL or `cap` writable entries;
 * `out_len` NULL or valid.
 */
McStatus mc_detection_breakpoints(const struct McDetection *det,
                                  size_t k,
                                  size_t *buf,
                                  size_t cap,
                                  size_t *out_len);

/**
 * Copy the `k + 1` per-segment memory estimates of row `k` into `buf`;
 * pass `buf = NULL` to query the length through `out_len`.
 *
 * # Safety
 * Same contract as [`mc_detection_breakpoints`].
 */
McStatus mc_detection_dhats(const struct McDetection *det,
                            size_t k,
                            double *buf,
                            size_t cap,
                            size_t *out_len);

/**
 * Release a detection handle (NULL is a no-op).
 *
 * # Safety
 * `det` must be NULL or a handle not yet freed.
 */
void mc_detection_free(struct McDetection *det);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMCHANGE_H */

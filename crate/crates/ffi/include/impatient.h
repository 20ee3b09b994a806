#ifndef IMPATIENT_H
#define IMPATIENT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ImpStatus {
  IMP_STATUS_OK = 0,
  IMP_STATUS_NULL_POINTER = 1,
  IMP_STATUS_DOMAIN = 2,
  IMP_STATUS_ARGUMENT = 3,
  IMP_STATUS_RESOURCE = 4,
  IMP_STATUS_BACKEND_WINDOW = 5,
  IMP_STATUS_NUMERIC = 6,
  IMP_STATUS_PANIC = 7,
} ImpStatus;

/**
 * Stirling backend selector. `Auto` picks exact arithmetic up to 300 and
 * log-space arithmetic above that.
 */
typedef enum ImpBackend {
  IMP_BACKEND_AUTO = 0,
  IMP_BACKEND_EXACT = 1,
  IMP_BACKEND_LOG_DP = 2,
  IMP_BACKEND_SADDLE = 3,
} ImpBackend;

/**
 * A solved completion curve.
 */
typedef struct ImpCurve ImpCurve;

/**
 * A conditioned collector sampler with its transition table.
 */
typedef struct ImpSampler ImpSampler;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or NULL. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *imp_last_error_message(void);

/**
 * Principal branch of the Lambert W function on `[-1/e, inf)`.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one double.
 */
enum ImpStatus imp_lambert_w0(double z, double *out);

/**
 * Positive root of `xi = (1 + lambda)(1 - exp(-xi))`.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one double.
 */
enum ImpStatus imp_xi_of_lambda(double lambda, double *out);

/**
 * `exp(-xi(lambda))`.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one double.
 */
enum ImpStatus imp_rho_of_lambda(double lambda, double *out);

/**
 * `1 - k exp(-xi(k - 1))`.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one double.
 */
enum ImpStatus imp_korshunov_constant(uint32_t k, double *out);

/**
 * Natural log of the Stirling number of the second kind; `-inf` when it
 * is zero.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one double.
 */
enum ImpStatus imp_stirling_ln(uint64_t m, uint64_t l, double *out);

/**
 * `S(m-1, l-1) / S(m, l)` with the chosen backend.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one double.
 */
enum ImpStatus imp_ratio_r(uint64_t m, uint64_t l, enum ImpBackend backend, double *out);

/**
 * Exact `S(m, l)` as a decimal string. Free the result with
 * [`imp_string_free`].
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one pointer.
 */
enum ImpStatus imp_stirling_exact(uint64_t m, uint64_t l, char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void imp_string_free(char *s);

/**
 * Monte-Carlo fraction of accessible structures for alphabet size `k` and
 * `n` states.
 *
 * # Safety
 * `estimate` and `stderr_out` must be NULL or writable doubles.
 */
enum ImpStatus imp_estimate_accessibility(uint32_t k,
                                          uint32_t n,
                                          uint64_t trials,
                                          uint64_t seed,
                                          double *estimate,
                                          double *stderr_out);

/**
 * Solves the completion curve for `nu` down to `x = a` with RK4 step
 * `step`.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one pointer.
 */
enum ImpStatus imp_curve_solve(double nu, double a, double step, struct ImpCurve **out);

/**
 * Number of grid points, or 0 for NULL.
 *
 * # Safety
 * `curve` must be NULL or a live handle from [`imp_curve_solve`].
 */
size_t imp_curve_len(const struct ImpCurve *curve);

/**
 * Grid point `i`; points run from `x = 1 + nu` down to `x = a`.
 *
 * # Safety
 * `curve` must be NULL or a live handle; `x` and `y` NULL or writable.
 */
enum ImpStatus imp_curve_point(const struct ImpCurve *curve, size_t i, double *x, double *y);

/**
 * Interpolated `y(x)` for `a <= x <= 1 + nu`.
 *
 * # Safety
 * `curve` must be NULL or a live handle; `out` NULL or writable.
 */
enum ImpStatus imp_curve_eval(const struct ImpCurve *curve, double x, double *out);

/**
 * # Safety
 * `curve` must be NULL or a handle from [`imp_curve_solve`], not yet freed.
 */
void imp_curve_free(struct ImpCurve *curve);

/**
 * Builds a sampler for the collector conditioned on finishing within
 * `big_n` draws of `n` coupons.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one pointer.
 */
enum ImpStatus imp_sampler_new(uint64_t big_n,
                               uint64_t n,
                               enum ImpBackend backend,
                               struct ImpSampler **out);

/**
 * Writes the forward completion path `y_0 = 0, ..., y_N = n` (`N + 1`
 * values) of the trajectory for `(seed, stream)` into `y`.
 *
 * # Safety
 * `sampler` must be NULL or a live handle; `y` NULL or writable for `len`
 * values.
 */
enum ImpStatus imp_sampler_sample(const struct ImpSampler *sampler,
                                  uint64_t seed,
                                  uint64_t stream,
                                  uint32_t *y,
                                  size_t len);

/**
 * # Safety
 * `sampler` must be NULL or a handle from [`imp_sampler_new`], not yet
 * freed.
 */
void imp_sampler_free(struct ImpSampler *sampler);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMPATIENT_H */

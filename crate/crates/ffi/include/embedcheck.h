#ifndef EMBEDCHECK_H
#define EMBEDCHECK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every function.
 */
typedef enum EcStatus {
  EC_STATUS_OK = 0,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  EC_STATUS_NULL_OR_INVALID_ARGUMENT = 1,
  /**
   * The space document failed validation.
   */
  EC_STATUS_SCHEMA = 2,
  /**
   * A parameter is outside its admissible range.
   */
  EC_STATUS_INVALID_PARAMETER = 3,
  EC_STATUS_UNKNOWN_MEASURE = 4,
  /**
   * Degenerate measure, exhausted budget, failed fit or empty ball.
   */
  EC_STATUS_NUMERICAL = 5,
  /**
   * A hypothesis of the requested criterion does not hold.
   */
  EC_STATUS_HYPOTHESIS = 6,
  /**
   * Any other library error.
   */
  EC_STATUS_OTHER = 7,
  /**
   * A panic was caught at the boundary.
   */
  EC_STATUS_PANIC = 8,
} EcStatus;

/**
 * Verdict codes written by `ec_classify_theta`.
 */
typedef enum EcVerdict {
  EC_VERDICT_COMPACT = 0,
  EC_VERDICT_BOUNDED = 1,
  EC_VERDICT_NOT_COMPACT = 2,
  EC_VERDICT_NOT_BOUNDED = 3,
  EC_VERDICT_INCONCLUSIVE = 4,
} EcVerdict;

/**
 * Opaque space handle.
 */
typedef struct EcSpace EcSpace;

/**
 * Parameters of a Theta scan.
 */
typedef struct EcQuery {
  double p;
  double q;
  double alpha;
  double lambda;
  bool truncation_supported;
  bool measure_density;
} EcQuery;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ec_last_error_message(void);

/**
 * Parses a space description (JSON text) into a new handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EcStatus ec_space_from_json(const char *json, struct EcSpace **out);

/**
 * Releases a handle from `ec_space_from_json`; null is ignored.
 *
 * # Safety
 * `space` must be null or a handle not yet freed.
 */
void ec_space_free(struct EcSpace *space);

/**
 * Ambient dimension of the space.
 *
 * # Safety
 * `space` must be a live handle and `dim` a valid pointer.
 */
enum EcStatus ec_space_dim(const struct EcSpace *space, size_t *dim);

/**
 * Measure of the open ball B(center, radius) with relative error target
 * `target` (0 < target < 1). Writes the estimate and its error bound.
 *
 * # Safety
 * `center` must hold `dim` doubles; `measure_id` must be NUL-terminated;
 * `value` and `error` must be valid pointers.
 */
enum EcStatus ec_ball_measure(const struct EcSpace *space,
                              const char *measure_id,
                              const double *center,
                              size_t dim,
                              double radius,
                              double target,
                              uint64_t seed,
                              double *value,
                              double *error);

/**
 * Theta(r) over the strictly decreasing `radii`, with centres taken from
 * the space's E. Writes `count` values into `theta_out`.
 *
 * # Safety
 * `radii` and `theta_out` must hold `count` doubles; strings must be
 * NUL-terminated.
 */
enum EcStatus ec_theta_scan(const struct EcSpace *space,
                            const char *mu,
                            const char *nu,
                            const struct EcQuery *query,
                            const double *radii,
                            size_t count,
                            double *theta_out);

/**
 * Runs a Theta scan and classifies it.
 *
 * # Safety
 * As for `ec_theta_scan`; `verdict` must be a valid pointer.
 */
enum EcStatus ec_classify_theta(const struct EcSpace *space,
                                const char *mu,
                                const char *nu,
                                const struct EcQuery *query,
                                const double *radii,
                                size_t count,
                                enum EcVerdict *verdict);

/**
 * Threshold q with q(s - alpha p) < sigma p; writes INFINITY when every q
 * qualifies.
 *
 * # Safety
 * `q_sup` must be a valid pointer.
 */
enum EcStatus ec_critical_exponent(double s, double sigma, double alpha, double p, double *q_sup);

/**
 * Cusp exponent theta for weights x_n^alpha, x_n^beta.
 *
 * # Safety
 * `theta` must be a valid pointer.
 */
enum EcStatus ec_cusp_exponent(size_t n,
                               double gamma,
                               double alpha,
                               double beta,
                               double p,
                               double q,
                               double *theta);

/**
 * Runs a named scenario. `params_json` is a JSON object of numeric
 * parameters, or null for defaults. The report is written as a new JSON
 * string to `*report_json`, to be released with `ec_string_free`.
 *
 * # Safety
 * Strings must be NUL-terminated; `report_json` must be a valid pointer.
 */
enum EcStatus ec_scenario_run(const char *id,
                              const char *params_json,
                              uint64_t seed,
                              char **report_json);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void ec_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMBEDCHECK_H */

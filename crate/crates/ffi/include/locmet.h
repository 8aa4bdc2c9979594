#ifndef LOCMET_H
#define LOCMET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum LmStatus {
  LM_STATUS_OK = 0,
  LM_STATUS_NULL_ARGUMENT = 1,
  LM_STATUS_INVALID_UTF8 = 2,
  LM_STATUS_IO = 3,
  LM_STATUS_PARSE = 4,
  LM_STATUS_SPEC = 5,
  LM_STATUS_DOMAIN = 6,
  LM_STATUS_INVALID_CHART = 7,
  LM_STATUS_PRECONDITION = 8,
  LM_STATUS_NUMERICAL = 9,
  LM_STATUS_NOT_COMPATIBLE = 10,
  LM_STATUS_OUT_OF_RANGE = 11,
  LM_STATUS_NO_METRIC = 12,
  LM_STATUS_PANIC = 13,
} LmStatus;

typedef enum LmVerdict {
  LM_VERDICT_METRIC = 0,
  LM_VERDICT_FLAT = 1,
  LM_VERDICT_NOT_METRIC_EIGEN = 2,
  LM_VERDICT_NOT_METRIC_SKEW = 3,
  LM_VERDICT_INCONCLUSIVE = 4,
} LmVerdict;

/**
 * Outcome of a metrizability check.
 */
typedef struct LmReport LmReport;

/**
 * A parsed connection spec.
 */
typedef struct LmSpec LmSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next `lm_*` call on the same thread.
 */
const char *lm_last_error(void);

/**
 * Library version, NUL-terminated, static.
 */
const char *lm_version(void);

/**
 * Parses spec-file text.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LmStatus lm_spec_parse(const char *source, struct LmSpec **out_spec);

/**
 * Reads and parses a spec file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LmStatus lm_spec_read(const char *path, struct LmSpec **out_spec);

/**
 * Overrides the grid of the spec's chart.
 *
 * # Safety
 * `spec` must come from `lm_spec_parse` or `lm_spec_read`.
 */
enum LmStatus lm_spec_set_grid(struct LmSpec *spec, size_t nx, size_t ny);

/**
 * # Safety
 * `spec` must be null or come from `lm_spec_parse` / `lm_spec_read`, and
 * must not be used afterwards.
 */
void lm_spec_free(struct LmSpec *spec);

/**
 * Runs the metrizability check with every tolerance scaled by `tol_scale`
 * (1 for the defaults) and the lower-left basepoint.
 *
 * # Safety
 * `spec` must be a live spec handle and `out_report` a valid pointer.
 */
enum LmStatus lm_check(const struct LmSpec *spec, double tol_scale, struct LmReport **out_report);

/**
 * Like [`lm_check`] with the basepoint snapped to the node nearest `(x, y)`.
 *
 * # Safety
 * As for [`lm_check`].
 */
enum LmStatus lm_check_at(const struct LmSpec *spec,
                          double tol_scale,
                          double x,
                          double y,
                          struct LmReport **out_report);

/**
 * # Safety
 * `report` must be null or come from `lm_check*`, and must not be used
 * afterwards.
 */
void lm_report_free(struct LmReport *report);

/**
 * # Safety
 * `report` must be a live report handle; `out_verdict` a valid pointer.
 */
enum LmStatus lm_report_verdict(const struct LmReport *report, enum LmVerdict *out_verdict);

/**
 * Exit code the CLI would return for this report.
 *
 * # Safety
 * `report` must be a live report handle; `out_code` a valid pointer.
 */
enum LmStatus lm_report_exit_code(const struct LmReport *report, int32_t *out_code);

/**
 * Witness point of a negative or inconclusive verdict. `*has_witness` is
 * false when the report has none; `x` and `y` are then left untouched.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LmStatus lm_report_witness(const struct LmReport *report,
                                bool *has_witness,
                                double *x,
                                double *y);

/**
 * Grid size of the chart the report was computed on.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LmStatus lm_report_grid(const struct LmReport *report, size_t *nx, size_t *ny);

/**
 * Recovered metric at node `(ix, iy)`, row-major into `out4[0..4]`.
 * Returns `NoMetric` for verdicts without a metric.
 *
 * # Safety
 * `report` must be a live report handle and `out4` point to 4 doubles.
 */
enum LmStatus lm_report_metric_at(const struct LmReport *report,
                                  size_t ix,
                                  size_t iy,
                                  double *out4);

/**
 * JSON envelope identical to `locmet check --json`. Owned by the report.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
const char *lm_report_json(const struct LmReport *report);

/**
 * Euler number of `[connection]` with respect to `[metric]`.
 *
 * # Safety
 * `spec` must be a live spec handle and `out_number` a valid pointer.
 */
enum LmStatus lm_euler_number(const struct LmSpec *spec, double tol_scale, double *out_number);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOCMET_H */

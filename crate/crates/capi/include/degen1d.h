/* C interface to the degen1d degenerate-operator library. */

#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every entry point.
 */
typedef enum Degen1dStatus {
  DEGEN1D_STATUS_OK = 0,
  DEGEN1D_STATUS_NULL_POINTER = 1,
  DEGEN1D_STATUS_INVALID_ARGUMENT = 2,
  DEGEN1D_STATUS_DOMAIN_ERROR = 3,
  DEGEN1D_STATUS_INDETERMINATE = 4,
  DEGEN1D_STATUS_NOTHING_TO_COMPARE = 5,
  DEGEN1D_STATUS_NUMERICAL_FAILURE = 6,
  DEGEN1D_STATUS_PARSE_ERROR = 7,
  DEGEN1D_STATUS_IO_ERROR = 8,
  DEGEN1D_STATUS_PANIC = 9,
} Degen1dStatus;

/**
 * Opaque coefficient handle.
 */
typedef struct Degen1dCoefficient Degen1dCoefficient;

/**
 * Opaque classification-report handle.
 */
typedef struct Degen1dReport Degen1dReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null (length query).
 */
uintptr_t degen1d_last_error(char *buf, uintptr_t cap);

/**
 * Library version as a static string; do not free.
 */
const char *degen1d_version(void);

/**
 * Free a string allocated by this library.
 *
 * # Safety
 * `s` must have been returned by a degen1d function and not yet freed.
 */
void degen1d_string_free(char *s);

/**
 * Build a power-law coefficient c(x) = amp |x|^exp per side on the domain
 * selected by `domain_kind` (interval bounds in `a`, `b`; ignored otherwise).
 *
 * # Safety
 * `out` must be a valid pointer; the result is freed with
 * `degen1d_coefficient_free`.
 */
enum Degen1dStatus degen1d_coefficient_power_law(double amplitude_left,
                                                 double exponent_left,
                                                 double amplitude_right,
                                                 double exponent_right,
                                                 int32_t domain_kind,
                                                 double a,
                                                 double b,
                                                 struct Degen1dCoefficient **out);

/**
 * Build a tabulated coefficient from parallel arrays of length `len`
 * (strictly increasing xs, non-negative values, monotone-cubic interpolated).
 *
 * # Safety
 * `xs` and `cs` must point to `len` readable doubles; `out` must be valid.
 */
enum Degen1dStatus degen1d_coefficient_tabulated(const double *xs,
                                                 const double *cs,
                                                 uintptr_t len,
                                                 int32_t domain_kind,
                                                 double a,
                                                 double b,
                                                 struct Degen1dCoefficient **out);

/**
 * # Safety
 * `c` must be a live handle from a constructor, or null.
 */
void degen1d_coefficient_free(struct Degen1dCoefficient *c);

/**
 * Evaluate c(x).
 *
 * # Safety
 * `c` must be a live coefficient handle and `out` a valid pointer.
 */
enum Degen1dStatus degen1d_coefficient_eval(const struct Degen1dCoefficient *c,
                                            double x,
                                            double *out);

/**
 * The harmonic integral nu(x) = int_x^1 ds / c on the chosen side.
 *
 * # Safety
 * `c` must be a live coefficient handle and `out` a valid pointer.
 */
enum Degen1dStatus degen1d_nu(const struct Degen1dCoefficient *c,
                              int32_t side,
                              double x,
                              double *out);

/**
 * The growth integral mu(x) = int_1^x s ds / c(s) on the chosen side.
 *
 * # Safety
 * `c` must be a live coefficient handle and `out` a valid pointer.
 */
enum Degen1dStatus degen1d_mu(const struct Degen1dCoefficient *c,
                              int32_t side,
                              double x,
                              double *out);

/**
 * Classify the coefficient; the report is freed with `degen1d_report_free`.
 *
 * # Safety
 * `c` must be a live coefficient handle and `out` a valid pointer.
 */
enum Degen1dStatus degen1d_classify(const struct Degen1dCoefficient *c, struct Degen1dReport **out);

/**
 * # Safety
 * `r` must be a live report handle, or null.
 */
void degen1d_report_free(struct Degen1dReport *r);

/**
 * Trichotomy case of a report: 1, 2 or 3; 0 for a null handle.
 *
 * # Safety
 * `r` must be a live report handle, or null.
 */
int32_t degen1d_report_case(const struct Degen1dReport *r);

/**
 * Common deficiency index n+ = n- of the report; -1 for a null handle.
 *
 * # Safety
 * `r` must be a live report handle, or null.
 */
int32_t degen1d_report_deficiency_index(const struct Degen1dReport *r);

/**
 * 1 when the coefficient admits a unique submarkovian extension, 0 when a
 * one-parameter submarkovian subfamily exists; -1 for a null handle.
 *
 * # Safety
 * `r` must be a live report handle, or null.
 */
int32_t degen1d_report_unique_submarkovian(const struct Degen1dReport *r);

/**
 * Full classification report as JSON; free with `degen1d_string_free`.
 *
 * # Safety
 * `r` must be a live report handle and `out` a valid pointer.
 */
enum Degen1dStatus degen1d_report_to_json(const struct Degen1dReport *r, char **out);

/**
 * Deficiency index of the half-line operator on one side by shooting.
 *
 * # Safety
 * `c` must be a live coefficient handle and `out` a valid pointer.
 */
enum Degen1dStatus degen1d_deficiency_index(const struct Degen1dCoefficient *c,
                                            int32_t side,
                                            double gamma,
                                            int32_t *out);

/**
 * Run a scenario file and return the report JSON (and optionally write all
 * artifacts into `out_dir`, which may be null). The JSON is freed with
 * `degen1d_string_free`.
 *
 * # Safety
 * `path` (and `out_dir` when non-null) must be NUL-terminated strings;
 * `out_json` must be a valid pointer.
 */
enum Degen1dStatus degen1d_run_scenario(const char *path, const char *out_dir, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

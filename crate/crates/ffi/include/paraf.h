#ifndef PARAF_H
#define PARAF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum ParafStatus {
  PARAF_STATUS_OK = 0,
  PARAF_STATUS_NULL_ARGUMENT = 1,
  PARAF_STATUS_INVALID_UTF8 = 2,
  PARAF_STATUS_UNKNOWN_KEY = 3,
  PARAF_STATUS_CONFIG = 4,
  PARAF_STATUS_PARSE = 5,
  PARAF_STATUS_CONSTRUCTION = 6,
  PARAF_STATUS_AXIOMS_FAILED = 7,
  PARAF_STATUS_NUMERICAL = 8,
  PARAF_STATUS_IO = 9,
  PARAF_STATUS_PANIC = 10,
} ParafStatus;

/**
 * Opaque structure bundle.
 */
typedef struct ParafBundle ParafBundle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a catalog entry. `params` is `NULL` or a comma-separated list of
 * `name=value` pairs.
 *
 * # Safety
 * `key` and `params` are NUL-terminated strings or `NULL`; `out` is writable.
 */
enum ParafStatus paraf_bundle_from_catalog(const char *key,
                                           const char *params,
                                           struct ParafBundle **out);

/**
 * Parse a bundle description.
 *
 * # Safety
 * `source` is a NUL-terminated string; `out` is writable.
 */
enum ParafStatus paraf_bundle_from_text(const char *source, struct ParafBundle **out);

/**
 * # Safety
 * `bundle` comes from `paraf_bundle_from_*` and is not used afterwards.
 */
void paraf_bundle_free(struct ParafBundle *bundle);

/**
 * Manifold dimension, 0 for a null handle.
 *
 * # Safety
 * `bundle` is a live handle or `NULL`.
 */
size_t paraf_bundle_dim(const struct ParafBundle *bundle);

/**
 * Number of characteristic fields, 0 for a null handle.
 *
 * # Safety
 * `bundle` is a live handle or `NULL`.
 */
size_t paraf_bundle_p(const struct ParafBundle *bundle);

/**
 * The bundle in description-file form.
 *
 * # Safety
 * `bundle` is a live handle; `out` is writable.
 */
enum ParafStatus paraf_bundle_describe(const struct ParafBundle *bundle, char **out);

/**
 * Most specific class name, e.g. `weak_para_C`. Fails with
 * `AXIOMS_FAILED` if the bundle violates an axiom at some sample.
 *
 * # Safety
 * `bundle` is a live handle; `out` is writable.
 */
enum ParafStatus paraf_classify(const struct ParafBundle *bundle,
                                size_t samples,
                                uint64_t seed,
                                char **out);

/**
 * Run check suites and return the JSON report. `checks` is `NULL` for all
 * suites or a comma-separated list. `exit_code` receives 0 when every
 * non-vacuous check passes and 1 otherwise.
 *
 * # Safety
 * `bundle` is a live handle; `checks` is `NULL` or a NUL-terminated string;
 * `out` and `exit_code` are writable.
 */
enum ParafStatus paraf_report_json(const struct ParafBundle *bundle,
                                   size_t samples,
                                   uint64_t seed,
                                   const char *checks,
                                   char **out,
                                   int *exit_code);

/**
 * Sectional curvature of the plane spanned by `x` and `y` at `point`; all
 * three arrays have `len` = dimension entries.
 *
 * # Safety
 * `bundle` is a live handle; the arrays hold `len` doubles; `out` is writable.
 */
enum ParafStatus paraf_sectional_curvature(const struct ParafBundle *bundle,
                                           const double *x,
                                           const double *y,
                                           const double *point,
                                           size_t len,
                                           double *out);

/**
 * # Safety
 * `s` comes from this library and is not used afterwards.
 */
void paraf_string_free(char *s);

/**
 * Message for the last failed call on this thread, or `NULL`. Valid until
 * the next call into the library from the same thread.
 */
const char *paraf_last_error(void);

/**
 * Engine and catalog version, static storage.
 */
const char *paraf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARAF_H */

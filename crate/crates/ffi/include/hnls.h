#ifndef HNLS_H
#define HNLS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum HnlsStatus {
  HnlsStatus_Ok = 0,
  HnlsStatus_NullPointer = 1,
  HnlsStatus_InvalidUtf8 = 2,
  HnlsStatus_BadConfig = 3,
  HnlsStatus_NumericalFailure = 4,
  HnlsStatus_OutOfBounds = 5,
  HnlsStatus_BufferTooSmall = 6,
  HnlsStatus_Panic = 7,
} HnlsStatus;

/**
 * Opaque run configuration.
 */
typedef struct HnlsConfig HnlsConfig;

/**
 * Opaque space-time solution field, stored time-major.
 */
typedef struct HnlsField HnlsField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` as a
 * NUL-terminated string, truncating if needed. Returns the full message
 * length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t hnls_last_error(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hnls_version(void);

/**
 * Default configuration. Never null.
 */
struct HnlsConfig *hnls_config_default(void);

/**
 * Parses a JSON configuration and validates it. Relative CSV paths in
 * profiles resolve against the working directory.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HnlsStatus hnls_config_from_json(const char *json, struct HnlsConfig **out);

/**
 * Releases a configuration. Null is ignored.
 *
 * # Safety
 * `cfg` must come from this library and not be used afterwards.
 */
void hnls_config_free(struct HnlsConfig *cfg);

/**
 * Solves the linear problem (`κ` ignored) on `[0, L] × [0, T]`.
 *
 * # Safety
 * `cfg` must be a live configuration handle; `out` must be writable.
 */
enum HnlsStatus hnls_solve_linear(const struct HnlsConfig *cfg, struct HnlsField **out);

/**
 * Solves the nonlinear problem by Picard iteration. `iterations` may be
 * null; otherwise it receives the total iteration count.
 *
 * # Safety
 * `cfg` must be a live configuration handle; `out` must be writable;
 * `iterations` must be null or writable.
 */
enum HnlsStatus hnls_solve_nonlinear(const struct HnlsConfig *cfg,
                                     struct HnlsField **out,
                                     uintptr_t *iterations);

/**
 * Runs the spectral verification suite; `passed` receives 1 when every
 * check holds and 0 otherwise.
 *
 * # Safety
 * `cfg` must be a live configuration handle; `passed` must be writable.
 */
enum HnlsStatus hnls_verify_spectral(const struct HnlsConfig *cfg, int32_t *passed);

/**
 * Number of spatial points. Returns 0 for null.
 *
 * # Safety
 * `field` must be null or a live field handle.
 */
uintptr_t hnls_field_nx(const struct HnlsField *field);

/**
 * Number of time levels. Returns 0 for null.
 *
 * # Safety
 * `field` must be null or a live field handle.
 */
uintptr_t hnls_field_nt(const struct HnlsField *field);

/**
 * Value at spatial index `i` and time index `n`.
 *
 * # Safety
 * `field` must be a live field handle; `re` and `im` must be writable.
 */
enum HnlsStatus hnls_field_value(const struct HnlsField *field,
                                 uintptr_t i,
                                 uintptr_t n,
                                 double *re,
                                 double *im);

/**
 * Copies all values, time-major (`n * nx + i`), into separate real and
 * imaginary buffers of `len` entries each.
 *
 * # Safety
 * `re` and `im` must point to `len` writable doubles.
 */
enum HnlsStatus hnls_field_copy(const struct HnlsField *field,
                                double *re,
                                double *im,
                                uintptr_t len);

/**
 * Releases a field. Null is ignored.
 *
 * # Safety
 * `field` must come from this library and not be used afterwards.
 */
void hnls_field_free(struct HnlsField *field);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HNLS_H */

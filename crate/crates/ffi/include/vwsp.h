#ifndef VWSP_H
#define VWSP_H

/* Generated by cbindgen from vwsp-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status of an FFI call.
typedef enum VwspStatus {
  VWSP_STATUS_OK = 0,
  // A required pointer argument was NULL.
  VWSP_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  VWSP_STATUS_INVALID_UTF8 = 2,
  // The instance text could not be parsed or validated.
  VWSP_STATUS_PARSE_ERROR = 3,
  // Generator or solver parameters were invalid.
  VWSP_STATUS_INVALID_PARAMS = 4,
  // The operation does not support this instance (e.g. MIP export of
  // table-form authorisations).
  VWSP_STATUS_UNSUPPORTED = 5,
  // An exhaustive computation exceeded its size guard.
  VWSP_STATUS_TOO_LARGE = 6,
  // An output buffer was too small.
  VWSP_STATUS_BUFFER_TOO_SMALL = 7,
} VwspStatus;

// How a solve ended.
typedef enum VwspTermination {
  VWSP_TERMINATION_OPTIMAL = 0,
  VWSP_TERMINATION_BOUND_MET = 1,
  VWSP_TERMINATION_TIME_LIMIT = 2,
} VwspTermination;

// Opaque instance handle.
typedef struct VwspInstance VwspInstance;

// Opaque solve-report handle.
typedef struct VwspReport VwspReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failed call on this thread, or NULL when
// the latest fallible call succeeded. Free with `vwsp_string_free`.
char *vwsp_last_error_message(void);

// Release a string returned by this library.
//
// # Safety
// `s` must be NULL or a pointer previously returned by a `vwsp_*`
// function, not yet freed.
void vwsp_string_free(char *s);

// Parse an instance from its JSON text.
//
// # Safety
// `json` must point to a NUL-terminated string and `out` must be a valid
// destination for one pointer.
enum VwspStatus vwsp_instance_from_json(const char *json, struct VwspInstance **out);

// Generate a benchmark instance (see the `generate` CLI subcommand).
//
// # Safety
// `out` must be a valid destination for one pointer.
enum VwspStatus vwsp_instance_generate(uint32_t k,
                                       double d,
                                       double alpha,
                                       uint64_t seed,
                                       struct VwspInstance **out);

// Canonical JSON text of an instance. Free with `vwsp_string_free`.
//
// # Safety
// `instance` must be a live handle from this library.
char *vwsp_instance_to_json(const struct VwspInstance *instance);

// # Safety
// `instance` must be a live handle from this library.
uint32_t vwsp_instance_step_count(const struct VwspInstance *instance);

// # Safety
// `instance` must be a live handle from this library.
uint32_t vwsp_instance_user_count(const struct VwspInstance *instance);

// # Safety
// `instance` must be a live handle from this library.
size_t vwsp_instance_constraint_count(const struct VwspInstance *instance);

// Release an instance handle.
//
// # Safety
// `instance` must be NULL or a live handle from this library, not yet
// freed.
void vwsp_instance_free(struct VwspInstance *instance);

// Solve an instance to optimality. `time_limit_ms` of zero means no
// limit.
//
// # Safety
// `instance` must be a live handle and `out` a valid destination for one
// pointer.
enum VwspStatus vwsp_solve(const struct VwspInstance *instance,
                           uint64_t time_limit_ms,
                           struct VwspReport **out);

// # Safety
// `report` must be a live handle from this library.
int64_t vwsp_report_weight(const struct VwspReport *report);

// # Safety
// `report` must be a live handle from this library.
int64_t vwsp_report_constraint_weight(const struct VwspReport *report);

// # Safety
// `report` must be a live handle from this library.
int64_t vwsp_report_authorisation_weight(const struct VwspReport *report);

// # Safety
// `report` must be a live handle from this library.
uint64_t vwsp_report_nodes(const struct VwspReport *report);

// # Safety
// `report` must be a live handle from this library.
enum VwspTermination vwsp_report_termination(const struct VwspReport *report);

// Copy the plan into `buffer`: `buffer[s]` becomes the user index of step
// `s`. `len` must be at least the step count.
//
// # Safety
// `report` must be a live handle and `buffer` must point to `len`
// writable `uint32_t`s.
enum VwspStatus vwsp_report_plan(const struct VwspReport *report, uint32_t *buffer, size_t len);

// Release a report handle.
//
// # Safety
// `report` must be NULL or a live handle from this library, not yet
// freed.
void vwsp_report_free(struct VwspReport *report);

// Export the instance as an LP-format MIP model. Free the returned string
// with `vwsp_string_free`.
//
// # Safety
// `instance` must be a live handle and `out` a valid destination for one
// pointer.
enum VwspStatus vwsp_export_mip(const struct VwspInstance *instance, char **out);

// Optimal weight by exhaustive pattern enumeration (guarded; only small
// instances are accepted).
//
// # Safety
// `instance` must be a live handle and `weight_out` a valid destination
// for one `int64_t`.
enum VwspStatus vwsp_oracle_weight(const struct VwspInstance *instance, int64_t *weight_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VWSP_H */

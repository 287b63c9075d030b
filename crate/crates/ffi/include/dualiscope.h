#ifndef DUALISCOPE_H
#define DUALISCOPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call. `DS_CHECK_FAILED` means the computation ran and the
 * checked property did not hold; codes from 2 up are errors.
 */
typedef enum ds_status {
  DS_OK = 0,
  DS_CHECK_FAILED = 1,
  DS_NULL_POINTER = 2,
  DS_INVALID_UTF8 = 3,
  DS_PARSE = 4,
  DS_INVALID_ARGUMENT = 5,
  DS_INVALID_PAIRING = 6,
  DS_PRECONDITION = 7,
  DS_RESOURCE = 8,
  DS_IO = 9,
  DS_PANIC = 10,
} ds_status;

/**
 * Opaque process bound to its graph.
 */
typedef struct ds_process ds_process;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ds_version(void);

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *ds_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 */
void ds_string_free(char *s);

/**
 * Builds a process from a JSON process spec (e.g. `{"variant":"SIP","m":"1"}`)
 * and a JSON graph spec (e.g. `{"kind":"path","sites":3}`).
 */
enum ds_status ds_process_new(const char *process_json,
                              const char *graph_json,
                              struct ds_process **out);

/**
 * Releases a process handle. Null is ignored.
 */
void ds_process_free(struct ds_process *process);

/**
 * Number of sites of the process graph, or 0 for a null handle.
 */
size_t ds_process_sites(const struct ds_process *process);

/**
 * Duality function `D(xi, eta)` of a SIP or SEP handle, rounded to a double.
 */
enum ds_status ds_process_duality(const struct ds_process *process,
                                  const uint32_t *xi,
                                  const uint32_t *eta,
                                  size_t len,
                                  double *out);

/**
 * Exhaustive duality sweep for a SIP, SEP or boundary-driven SIP handle.
 * Writes the report as JSON; returns `DS_CHECK_FAILED` on a nonzero residual.
 */
enum ds_status ds_process_verify_duality(const struct ds_process *process,
                                         uint32_t max_dual,
                                         uint32_t max_occupancy,
                                         char **out_json);

/**
 * Runs one experiment from a JSON config without writing files. `jobs` of 0
 * uses every core. Writes `{"report": ..., "cases": <csv>}`.
 */
enum ds_status ds_run_config(const char *config_json, uint32_t jobs, char **out_json);

/**
 * Runs a battery preset (`paper-exact`, `paper-stochastic` or `all`) and
 * writes its report as JSON.
 */
enum ds_status ds_run_suite(const char *preset, uint32_t jobs, char **out_json);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DUALISCOPE_H */

#ifndef STREL_H
#define STREL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which semantics a monitor evaluates.
 */
typedef enum {
  STREL_SEMANTICS_BOOL = 0,
  STREL_SEMANTICS_ROBUST = 1,
} StrelSemantics;

/**
 * Result of a fallible call.
 */
typedef enum {
  STREL_OK = 0,
  /**
   * A null pointer, malformed UTF-8, or an argument that violates the
   * documented contract.
   */
  STREL_INVALID_ARGUMENT = 1,
  /**
   * The specification failed to parse or elaborate.
   */
  STREL_PARSE_ERROR = 2,
  /**
   * A trace header or step record was rejected.
   */
  STREL_TRACE_ERROR = 3,
  /**
   * Anything else, including internal panics.
   */
  STREL_RUNTIME_ERROR = 4,
} StrelStatus;

/**
 * An online monitor for one specification at one ego location.
 */
typedef struct StrelMonitor StrelMonitor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *strel_last_error_message(void);

/**
 * Library version as a static string; do not free.
 */
const char *strel_version(void);

/**
 * Creates a monitor from a specification, the trace header line (JSON),
 * an ego location name, and the semantics. Returns null on error; see
 * [`strel_last_error_message`]. Free with [`strel_monitor_free`].
 *
 * # Safety
 * `spec`, `header_json` and `ego` must be valid nul-terminated strings.
 */
StrelMonitor *strel_monitor_new(const char *spec,
                                const char *header_json,
                                const char *ego,
                                StrelSemantics semantics);

/**
 * Feeds one step record (a trace JSONL line). Records must arrive in
 * order: the record's `t` must equal the number of steps consumed.
 *
 * # Safety
 * `m` is a live monitor handle; `step_json` is a valid nul-terminated
 * string.
 */
StrelStatus strel_monitor_step_json(StrelMonitor *m, const char *step_json);

/**
 * Number of steps consumed so far.
 *
 * # Safety
 * `m` is a live monitor handle.
 */
uint64_t strel_monitor_steps(StrelMonitor *m);

/**
 * True once no further input can change the verdict.
 *
 * # Safety
 * `m` is a live monitor handle.
 */
bool strel_monitor_is_conclusive(StrelMonitor *m);

/**
 * Current success verdict under either semantics: the Boolean value, or
 * strictly positive robustness.
 *
 * # Safety
 * `m` is a live monitor handle; `out` is a valid destination.
 */
StrelStatus strel_monitor_bool_value(StrelMonitor *m, bool *out);

/**
 * Current robustness value. Fails on a Boolean-semantics monitor.
 *
 * # Safety
 * `m` is a live monitor handle; `out` is a valid destination.
 */
StrelStatus strel_monitor_robust_value(StrelMonitor *m, double *out);

/**
 * Serializes the monitor state. Free the result with
 * [`strel_string_free`]. Returns null on error.
 *
 * # Safety
 * `m` is a live monitor handle.
 */
char *strel_monitor_snapshot(StrelMonitor *m);

/**
 * Restores a snapshot taken from a monitor of the same specification
 * and universe.
 *
 * # Safety
 * `m` is a live monitor handle; `snapshot` is a valid nul-terminated
 * string.
 */
StrelStatus strel_monitor_restore(StrelMonitor *m, const char *snapshot);

/**
 * Frees a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must come from this library and must not be freed twice.
 */
void strel_string_free(char *s);

/**
 * Frees a monitor. Null is a no-op.
 *
 * # Safety
 * `m` must come from [`strel_monitor_new`] and must not be freed twice.
 */
void strel_monitor_free(StrelMonitor *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STREL_H */

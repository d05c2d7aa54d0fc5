#ifndef SYMTOP_H
#define SYMTOP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
enum SymtopStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  SymtopStatus_Ok = 0,
  SymtopStatus_NullPointer = 1,
  SymtopStatus_InvalidUtf8 = 2,
  SymtopStatus_ConfigError = 3,
  SymtopStatus_ExecutionError = 4,
  SymtopStatus_Panic = 5,
};
#ifndef __cplusplus
typedef int32_t SymtopStatus;
#endif // __cplusplus

/**
 * Opaque result handle owning the report JSON and any CSV side files.
 */
typedef struct SymtopReport SymtopReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *symtop_last_error_message(void);

/**
 * Toolkit version as a static NUL-terminated string.
 */
const char *symtop_version(void);

/**
 * Run the task described by a JSON experiment configuration. On success
 * writes a handle to `out_report` and returns `Ok`; on failure returns an
 * error code and leaves a message for `symtop_last_error_message`.
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string and `out_report` a
 * valid writable pointer.
 */
SymtopStatus symtop_run(const char *config_json, struct SymtopReport **out_report);

/**
 * JSON report owned by the handle; valid until `symtop_report_free`.
 *
 * # Safety
 * `report` must be a live handle returned by `symtop_run`.
 */
const char *symtop_report_json(const struct SymtopReport *report);

/**
 * Number of CSV side files produced by the run.
 *
 * # Safety
 * `report` must be a live handle returned by `symtop_run`.
 */
uintptr_t symtop_report_file_count(const struct SymtopReport *report);

/**
 * Name of side file `index`, or NULL if out of range.
 *
 * # Safety
 * `report` must be a live handle returned by `symtop_run`.
 */
const char *symtop_report_file_name(const struct SymtopReport *report, uintptr_t index);

/**
 * Contents of side file `index`, or NULL if out of range.
 *
 * # Safety
 * `report` must be a live handle returned by `symtop_run`.
 */
const char *symtop_report_file_contents(const struct SymtopReport *report, uintptr_t index);

/**
 * Release a handle returned by `symtop_run`. Passing NULL is a no-op.
 *
 * # Safety
 * `report` must be NULL or a live handle; it must not be used afterwards.
 */
void symtop_report_free(struct SymtopReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYMTOP_H */

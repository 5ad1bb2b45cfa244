#ifndef VALEX_H
#define VALEX_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ValexStatus {
  VALEX_STATUS_OK = 0,
  VALEX_STATUS_NOT_FOUND = 1,
  VALEX_STATUS_NULL_POINTER = 2,
  VALEX_STATUS_INVALID_UTF8 = 3,
  VALEX_STATUS_PARSE_ERROR = 4,
  VALEX_STATUS_USAGE_ERROR = 5,
  VALEX_STATUS_INTERNAL_ERROR = 6,
} ValexStatus;

/**
 * A parsed model.
 */
typedef struct ValexModel ValexModel;

/**
 * A complete search tree with its explanations.
 */
typedef struct ValexSolve ValexSolve;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses model text; on success `*out` receives a new handle.
 *
 * # Safety
 *
 * `text` must be null or a NUL-terminated string; `out` must be null or writable.
 */
enum ValexStatus valex_model_parse(const char *text, struct ValexModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 *
 * `model` must be null or a handle from [`valex_model_parse`] not yet freed.
 */
void valex_model_free(struct ValexModel *model);

/**
 * Builds the complete search tree of `model` and its proof trees.
 *
 * # Safety
 *
 * `model` must be null or a live model handle; `out` must be null or writable.
 */
enum ValexStatus valex_solve(const struct ValexModel *model, struct ValexSolve **out);

/**
 * Releases a solve; null is ignored.
 *
 * # Safety
 *
 * `solve` must be null or a handle from [`valex_solve`] not yet freed.
 */
void valex_solve_free(struct ValexSolve *solve);

/**
 * # Safety
 *
 * `solve` must be null or a live handle; `out` must be null or writable.
 */
enum ValexStatus valex_solve_solution_count(const struct ValexSolve *solve, size_t *out);

/**
 * Number of leaves of the search tree.
 *
 * # Safety
 *
 * `solve` must be null or a live handle; `out` must be null or writable.
 */
enum ValexStatus valex_solve_branch_count(const struct ValexSolve *solve, size_t *out);

/**
 * # Safety
 *
 * `solve` must be null or a live handle; `out` must be null or writable.
 */
enum ValexStatus valex_solve_failure_count(const struct ValexSolve *solve, size_t *out);

/**
 * The JSON bundle of the solve.
 *
 * # Safety
 *
 * `solve` must be null or a live handle; `out` must be null or writable.
 */
enum ValexStatus valex_solve_export_json(const struct ValexSolve *solve, char **out);

/**
 * Renders the maximal proof tree for `(var, value)`.
 *
 * Returns `VALEX_STATUS_NOT_FOUND` if the element is unknown or never removed.
 *
 * # Safety
 *
 * `solve` must be null or a live handle, `var` null or NUL-terminated, `out` null or writable.
 */
enum ValexStatus valex_solve_explain(const struct ValexSolve *solve,
                                     const char *var,
                                     int64_t value,
                                     char **out);

/**
 * Retracts `constraint` from the closure of `model`; `*out` receives the
 * repaired domains and `*verified` whether they match a fresh closure.
 *
 * # Safety
 *
 * `model` must be null or a live handle, `constraint` null or NUL-terminated, `verified` and `out` null or writable.
 */
enum ValexStatus valex_model_retract(const struct ValexModel *model,
                                     const char *constraint,
                                     bool *verified,
                                     char **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 *
 * `s` must be null or a string returned by this library, not yet freed.
 */
void valex_string_free(char *s);

/**
 * Message for the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *valex_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VALEX_H */

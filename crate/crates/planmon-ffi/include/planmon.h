/* C ABI for the planmon precondition-monitoring toolkit. */

#ifndef PLANMON_H
#define PLANMON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Combiner selector for decision and evaluation calls.
 */
typedef enum PmCombiner {
  PM_COMBINER_NPC = 0,
  PM_COMBINER_VAPC = 1,
} PmCombiner;

/**
 * Joint continue/abandon decision.
 */
typedef enum PmObjectAction {
  PM_OBJECT_ACTION_CONTINUE = 0,
  PM_OBJECT_ACTION_ABANDON = 1,
} PmObjectAction;

/**
 * Status code returned by every fallible `pm_` function.
 */
typedef enum PmStatus {
  /**
   * Success.
   */
  PM_STATUS_OK = 0,
  /**
   * Null pointer, bad enum value, out-of-range stage, or malformed belief.
   */
  PM_STATUS_INVALID_ARGUMENT = 1,
  /**
   * File could not be read or written.
   */
  PM_STATUS_IO = 2,
  /**
   * Instance or policy JSON failed to parse.
   */
  PM_STATUS_PARSE = 3,
  /**
   * Instance violated a model invariant.
   */
  PM_STATUS_VALIDATION = 4,
  /**
   * Internal contract violation (e.g. impossible observation).
   */
  PM_STATUS_CONTRACT = 5,
  /**
   * Oracle horizon exceeds the depth guard; raise the guard to override.
   */
  PM_STATUS_DEPTH_GUARD = 6,
  /**
   * Exact evaluation exceeded the node budget; raise it to override.
   */
  PM_STATUS_NODE_BUDGET = 7,
  /**
   * Panic or other unexpected failure inside the library.
   */
  PM_STATUS_INTERNAL = 8,
} PmStatus;

/**
 * Opaque handle to a validated monitoring instance.
 */
typedef struct PmInstance PmInstance;

/**
 * Opaque handle to a solved policy bundle (owns a copy of its instance).
 */
typedef struct PmPolicy PmPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread.
 *
 * The pointer stays valid until the next failing `pm_` call on the same
 * thread; callers must not free it.
 */
const char *pm_last_error_message(void);

/**
 * Loads and validates an instance from a JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PmStatus pm_instance_load(const char *path, struct PmInstance **out);

/**
 * Parses and validates an instance from a JSON string.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum PmStatus pm_instance_from_json(const char *json, struct PmInstance **out);

/**
 * Number of plan stages (and preconditions); 0 if `instance` is null.
 *
 * # Safety
 * `instance` must be null or a live handle from `pm_instance_load`/`_from_json`.
 */
size_t pm_instance_stage_count(const struct PmInstance *instance);

/**
 * Frees an instance handle; null is a no-op.
 *
 * # Safety
 * `instance` must be null or a handle not freed before.
 */
void pm_instance_free(struct PmInstance *instance);

/**
 * Solves every single-failure subproblem, producing a policy handle.
 *
 * # Safety
 * `instance` must be a live handle; `out` must be writable.
 */
enum PmStatus pm_solve(const struct PmInstance *instance, struct PmPolicy **out);

/**
 * Loads a policy bundle previously serialized with `pm_policy_to_json`
 * or the CLI's `solve` command.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PmStatus pm_policy_load(const char *path, struct PmPolicy **out);

/**
 * Serializes a policy bundle to JSON. The returned string must be
 * released with `pm_string_free`.
 *
 * # Safety
 * `policy` must be a live handle; `out` must be writable.
 */
enum PmStatus pm_policy_to_json(const struct PmPolicy *policy, char **out);

/**
 * Frees a string returned by this library; null is a no-op.
 *
 * # Safety
 * `s` must be null or a string from `pm_policy_to_json` not freed before.
 */
void pm_string_free(char *s);

/**
 * Number of plan stages covered by a policy; 0 if `policy` is null.
 *
 * # Safety
 * `policy` must be null or a live handle.
 */
size_t pm_policy_stage_count(const struct PmPolicy *policy);

/**
 * Frees a policy handle; null is a no-op.
 *
 * # Safety
 * `policy` must be null or a handle not freed before.
 */
void pm_policy_free(struct PmPolicy *policy);

/**
 * One combined decision at `belief` (length `belief_len`, which must
 * equal the stage count) and 1-based `stage`. Writes a 0/1 monitor flag
 * per precondition into `monitor_out` (length `belief_len`) and the
 * continue/abandon choice into `action_out`.
 *
 * # Safety
 * Pointer arguments must be valid for the stated lengths.
 */
enum PmStatus pm_decide(const struct PmPolicy *policy,
                        size_t stage,
                        const double *belief,
                        size_t belief_len,
                        enum PmCombiner combiner,
                        uint8_t *monitor_out,
                        enum PmObjectAction *action_out);

/**
 * Exact joint expectimax value at `belief` and 1-based `stage`.
 * Refuses with `PM_STATUS_DEPTH_GUARD` when the remaining horizon
 * exceeds `depth_guard`.
 *
 * # Safety
 * Pointer arguments must be valid for the stated lengths.
 */
enum PmStatus pm_oracle_value(const struct PmInstance *instance,
                              const double *belief,
                              size_t belief_len,
                              size_t stage,
                              size_t depth_guard,
                              double *value_out);

/**
 * Exact expected value of the chosen combiner's policy at `belief` and
 * 1-based `stage`. Refuses with `PM_STATUS_NODE_BUDGET` when the
 * evaluation tree exceeds `node_budget` nodes.
 *
 * # Safety
 * Pointer arguments must be valid for the stated lengths.
 */
enum PmStatus pm_policy_value(const struct PmPolicy *policy,
                              const double *belief,
                              size_t belief_len,
                              size_t stage,
                              enum PmCombiner combiner,
                              uint64_t node_budget,
                              double *value_out);

/**
 * Seeded Monte Carlo estimate of a combiner's value from stage 1.
 * Deterministic for a fixed (`episodes`, `seed`) pair.
 *
 * # Safety
 * Pointer arguments must be valid for the stated lengths; the out
 * pointers may be null to skip that output.
 */
enum PmStatus pm_simulate(const struct PmPolicy *policy,
                          const double *belief,
                          size_t belief_len,
                          enum PmCombiner combiner,
                          uint64_t episodes,
                          uint64_t seed,
                          double *mean_out,
                          double *std_error_out);

/**
 * Numeric value of a status code's exit-code convention: 0 for success,
 * 1 for errors, 2 for refusals (depth guard / node budget).
 */
int pm_status_exit_code(enum PmStatus status);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PLANMON_H */

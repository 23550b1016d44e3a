#ifndef FLYQ_H
#define FLYQ_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which series of a schedule to copy.
 */
typedef enum FlyqSeries {
  FLYQ_SERIES_GAMMA = 0,
  FLYQ_SERIES_EPSILON = 1,
} FlyqSeries;

typedef enum FlyqStatus {
  FLYQ_STATUS_OK = 0,
  FLYQ_STATUS_NULL_POINTER = 1,
  FLYQ_STATUS_INVALID_UTF8 = 2,
  FLYQ_STATUS_CONFIG = 3,
  FLYQ_STATUS_INVALID_PARAMETER = 4,
  FLYQ_STATUS_PHASE_MISMATCH = 5,
  FLYQ_STATUS_NOT_REALIZABLE = 6,
  FLYQ_STATUS_NUMERICAL = 7,
  FLYQ_STATUS_STRUCTURAL = 8,
  FLYQ_STATUS_IO = 9,
  FLYQ_STATUS_OUT_OF_RANGE = 10,
  FLYQ_STATUS_PANIC = 11,
} FlyqStatus;

/**
 * The scored result of simulating a task.
 */
typedef struct FlyqReport FlyqReport;

/**
 * A synthesized control schedule.
 */
typedef struct FlyqSchedule FlyqSchedule;

/**
 * A parsed task config.
 */
typedef struct FlyqTask FlyqTask;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on this thread.
 */
const char *flyq_last_error(void);

/**
 * Parses a JSON task config. `n_points` overrides the grid size when non-zero.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FlyqStatus flyq_task_from_json(const char *json, size_t n_points, struct FlyqTask **out);

/**
 * # Safety
 * `task` must come from [`flyq_task_from_json`] and not be used afterwards.
 */
void flyq_task_free(struct FlyqTask *task);

/**
 * Grid size of a task.
 *
 * # Safety
 * `task` must be a live handle or null (returns 0).
 */
size_t flyq_task_len(const struct FlyqTask *task);

/**
 * Synthesizes the control schedule of `task`.
 *
 * # Safety
 * `task` must be a live handle and `out` a valid pointer.
 */
enum FlyqStatus flyq_synthesize(const struct FlyqTask *task, struct FlyqSchedule **out);

/**
 * # Safety
 * `schedule` must come from [`flyq_synthesize`] and not be used afterwards.
 */
void flyq_schedule_free(struct FlyqSchedule *schedule);

/**
 * # Safety
 * `schedule` must be a live handle or null (returns 0).
 */
size_t flyq_schedule_len(const struct FlyqSchedule *schedule);

/**
 * # Safety
 * `schedule` must be a live handle or null (returns 0).
 */
size_t flyq_schedule_channels(const struct FlyqSchedule *schedule);

/**
 * Copies the grid times (μs) into `buf`, which holds `len` values.
 *
 * # Safety
 * `schedule` must be a live handle and `buf` valid for `len` writes.
 */
enum FlyqStatus flyq_schedule_times(const struct FlyqSchedule *schedule, double *buf, size_t len);

/**
 * Copies one series of channel `channel` (0-based) into `buf`.
 * Rates are in rad/μs.
 *
 * # Safety
 * `schedule` must be a live handle and `buf` valid for `len` writes.
 */
enum FlyqStatus flyq_schedule_series(const struct FlyqSchedule *schedule,
                                     size_t channel,
                                     enum FlyqSeries series,
                                     double *buf,
                                     size_t len);

/**
 * Synthesizes, simulates and scores `task`.
 *
 * # Safety
 * `task` must be a live handle and `out` a valid pointer.
 */
enum FlyqStatus flyq_simulate(const struct FlyqTask *task, struct FlyqReport **out);

/**
 * # Safety
 * `report` must come from [`flyq_simulate`] and not be used afterwards.
 */
void flyq_report_free(struct FlyqReport *report);

/**
 * Whether the scores meet the thresholds of the task config.
 *
 * # Safety
 * `report` must be a live handle and `passed` a valid pointer.
 */
enum FlyqStatus flyq_report_passed(const struct FlyqReport *report, bool *passed);

/**
 * Score `name` from the fidelity table, e.g. `"branch1"` or `"absorbed"`.
 *
 * # Safety
 * `report` must be a live handle, `name` NUL-terminated and `value` valid.
 */
enum FlyqStatus flyq_report_fidelity(const struct FlyqReport *report,
                                     const char *name,
                                     double *value);

/**
 * The full report as JSON. Release the string with [`flyq_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum FlyqStatus flyq_report_json(const struct FlyqReport *report, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void flyq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLYQ_H */

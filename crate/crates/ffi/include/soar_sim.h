#ifndef SOAR_SIM_H
#define SOAR_SIM_H

#pragma once

#include <stdint.h>
#include <stdbool.h>
#include <stddef.h>

/**
 * Result code of every fallible call.
 */
typedef enum SoarStatus {
  SOAR_STATUS_OK = 0,
  SOAR_STATUS_NULL_POINTER = 1,
  SOAR_STATUS_INVALID_UTF8 = 2,
  SOAR_STATUS_PARSE = 3,
  SOAR_STATUS_VALIDATION = 4,
  SOAR_STATUS_IO = 5,
  SOAR_STATUS_STEERING = 6,
  SOAR_STATUS_PERCEPTION = 7,
  SOAR_STATUS_OUT_OF_RANGE = 8,
  SOAR_STATUS_PANIC = 99,
} SoarStatus;

typedef enum SoarMode {
  SOAR_MODE_SOAR = 0,
  SOAR_MODE_NON_SOAR = 1,
} SoarMode;

typedef enum SoarOutcome {
  SOAR_OUTCOME_GOAL_REACHED = 0,
  SOAR_OUTCOME_TIMEOUT = 1,
  SOAR_OUTCOME_WRONG_DIRECTION = 2,
  SOAR_OUTCOME_STUCK = 3,
  SOAR_OUTCOME_COLLISION = 4,
} SoarOutcome;

/**
 * Parsed, validated scenario.
 */
typedef struct SoarScenario SoarScenario;

/**
 * Outcome and trajectory of one trial.
 */
typedef struct SoarTrialResult SoarTrialResult;

typedef struct SoarVec2 {
  double x;
  double y;
} SoarVec2;

typedef struct SoarTrajectoryPoint {
  double time;
  struct SoarVec2 position;
  double heading;
  double speed;
} SoarTrajectoryPoint;

/**
 * Obstacle the steering law should react to.
 */
typedef struct SoarActiveObstacle {
  uint32_t id;
  struct SoarVec2 position;
  /**
   * Distance from the robot to the obstacle boundary, meters.
   */
  double surface_distance;
  double d0;
} SoarActiveObstacle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread, or NULL. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *soar_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *soar_version(void);

/**
 * Parses and validates a scenario document.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be writable.
 */
enum SoarStatus soar_scenario_from_str(const char *text, struct SoarScenario **out);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum SoarStatus soar_scenario_from_file(const char *path, struct SoarScenario **out);

/**
 * Serializes a scenario back to its document form. Free the string with
 * [`soar_string_free`].
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_scenario_to_string(const struct SoarScenario *scenario, char **out);

/**
 * Number of obstacles in the scenario; 0 for NULL.
 *
 * # Safety
 * `scenario` must be NULL or a live handle.
 */
uintptr_t soar_scenario_obstacle_count(const struct SoarScenario *scenario);

/**
 * # Safety
 * `scenario` must be NULL or a handle not yet freed.
 */
void soar_scenario_free(struct SoarScenario *scenario);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void soar_string_free(char *s);

/**
 * Runs one trial.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_run_trial(const struct SoarScenario *scenario,
                               enum SoarMode mode,
                               uint64_t seed,
                               struct SoarTrialResult **out);

/**
 * # Safety
 * `result` must be NULL or a handle not yet freed.
 */
void soar_trial_result_free(struct SoarTrialResult *result);

/**
 * # Safety
 * `result` must be a live handle.
 */
enum SoarOutcome soar_trial_outcome(const struct SoarTrialResult *result);

/**
 * Seconds until the trial ended.
 *
 * # Safety
 * `result` must be a live handle.
 */
double soar_trial_travel_time(const struct SoarTrialResult *result);

/**
 * Meters driven.
 *
 * # Safety
 * `result` must be a live handle.
 */
double soar_trial_path_length(const struct SoarTrialResult *result);

/**
 * Number of trajectory samples, including the start pose.
 *
 * # Safety
 * `result` must be a live handle.
 */
uintptr_t soar_trial_len(const struct SoarTrialResult *result);

/**
 * Copies trajectory sample `index` into `out`.
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_trial_point(const struct SoarTrialResult *result,
                                 uintptr_t index,
                                 struct SoarTrajectoryPoint *out);

/**
 * Commanded unit direction for a robot at `robot` heading for `goal`.
 * `active` may be NULL when no obstacle is within its clearance. `b` is the
 * maximum repulsion gain (> 1).
 *
 * # Safety
 * `active` must be NULL or readable; `out` must be writable.
 */
enum SoarStatus soar_steering_direction(struct SoarVec2 robot,
                                        struct SoarVec2 goal,
                                        const struct SoarActiveObstacle *active,
                                        double b,
                                        struct SoarVec2 *out);

/**
 * Depth in meters of a point seen with `disparity` pixels by an ideal
 * rectified rig with focal length `focal_px` and baseline `baseline_m`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SoarStatus soar_depth_from_disparity(double disparity,
                                          double focal_px,
                                          double baseline_m,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOAR_SIM_H */

#ifndef RELCON_H
#define RELCON_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RelconStatus {
  RELCON_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  RELCON_STATUS_NULL_POINTER = 1,
  /**
   * Invalid argument, configuration or file contents.
   */
  RELCON_STATUS_INVALID_INPUT = 2,
  /**
   * File could not be read or written.
   */
  RELCON_STATUS_IO = 3,
  /**
   * Synthesis infeasible, simulation diverged or another numerical failure.
   */
  RELCON_STATUS_NUMERICAL = 4,
  /**
   * Caller-provided buffer is too small.
   */
  RELCON_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * Internal panic caught at the boundary.
   */
  RELCON_STATUS_PANIC = 6,
} RelconStatus;

/**
 * Control mode selector.
 */
typedef enum RelconMode {
  RELCON_MODE_PERFORMANCE_ORIENTED = 0,
  RELCON_MODE_RELIABILITY_AWARE = 1,
} RelconMode;

/**
 * Log columns readable with [`relcon_log_column`].
 */
typedef enum RelconColumn {
  RELCON_COLUMN_TIME = 0,
  RELCON_COLUMN_OMEGA_REF = 1,
  RELCON_COLUMN_OMEGA_M = 2,
  RELCON_COLUMN_ID = 3,
  RELCON_COLUMN_IQ = 4,
  RELCON_COLUMN_UD = 5,
  RELCON_COLUMN_UQ = 6,
  RELCON_COLUMN_TAU_L = 7,
  RELCON_COLUMN_P_LOSS = 8,
  RELCON_COLUMN_TJ = 9,
} RelconColumn;

/**
 * Opaque toolkit configuration.
 */
typedef struct RelconConfig RelconConfig;

/**
 * Opaque synthesized controller.
 */
typedef struct RelconController RelconController;

/**
 * Opaque drive cycle.
 */
typedef struct RelconCycle RelconCycle;

/**
 * Opaque simulation log.
 */
typedef struct RelconLog RelconLog;

/**
 * Damage analysis of one log. Projections are `INFINITY` when no damage
 * accrued.
 */
typedef struct RelconDamage {
  double damage;
  double cycle_count;
  double projected_cycles;
  double projected_years;
} RelconDamage;

/**
 * Scalar results of one mode in a comparison.
 */
typedef struct RelconModeSummary {
  double gamma_achieved;
  double rmse_kmh;
  double energy_loss_j;
  double peak_tj;
  double damage;
  double projected_years;
} RelconModeSummary;

typedef struct RelconComparison {
  struct RelconModeSummary performance;
  struct RelconModeSummary reliability;
  double damage_reduction_percent;
} RelconComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *relcon_version(void);

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next relcon call on this thread.
 */
const char *relcon_last_error(void);

/**
 * Creates the default configuration.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RelconStatus relcon_config_default(struct RelconConfig **out);

/**
 * Parses a configuration from a JSON string.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RelconStatus relcon_config_from_json(const char *json, struct RelconConfig **out);

/**
 * Loads a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RelconStatus relcon_config_from_file(const char *path, struct RelconConfig **out);

/**
 * # Safety
 * `cfg` must be null or a handle from this library, not yet freed.
 */
void relcon_config_free(struct RelconConfig *cfg);

/**
 * The bundled WLTC class 3b speed profile.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RelconStatus relcon_cycle_wltc(struct RelconCycle **out);

/**
 * Loads a speed profile CSV (`t_s,v_kmh`).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RelconStatus relcon_cycle_from_file(const char *path, struct RelconCycle **out);

/**
 * Builds a cycle from `n` samples of time (s) and speed (km/h).
 *
 * # Safety
 * `t` and `v_kmh` must point to `n` doubles and `out` must be valid.
 */
enum RelconStatus relcon_cycle_from_samples(const double *t,
                                            const double *v_kmh,
                                            size_t n,
                                            struct RelconCycle **out);

/**
 * Cycle length in seconds.
 *
 * # Safety
 * `cycle` must be a live handle and `out` a valid pointer.
 */
enum RelconStatus relcon_cycle_duration(const struct RelconCycle *cycle, double *out);

/**
 * # Safety
 * `cycle` must be null or a handle from this library, not yet freed.
 */
void relcon_cycle_free(struct RelconCycle *cycle);

/**
 * Synthesizes and verifies the controller for `mode`, a [`RelconMode`].
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum RelconStatus relcon_synthesize(const struct RelconConfig *cfg,
                                    int mode,
                                    struct RelconController **out);

/**
 * Reads a controller file written by `relcon synthesize`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RelconStatus relcon_controller_from_file(const char *path, struct RelconController **out);

/**
 * Achieved H∞ level of the controller.
 *
 * # Safety
 * `ctrl` must be a live handle and `out` a valid pointer.
 */
enum RelconStatus relcon_controller_gamma(const struct RelconController *ctrl, double *out);

/**
 * Number of controller states.
 *
 * # Safety
 * `ctrl` must be a live handle and `out` a valid pointer.
 */
enum RelconStatus relcon_controller_order(const struct RelconController *ctrl, size_t *out);

/**
 * # Safety
 * `ctrl` must be null or a handle from this library, not yet freed.
 */
void relcon_controller_free(struct RelconController *ctrl);

/**
 * Simulates `cycle` in closed loop with `ctrl`.
 *
 * # Safety
 * All handles must be live and `out` a valid pointer.
 */
enum RelconStatus relcon_simulate(const struct RelconConfig *cfg,
                                  const struct RelconController *ctrl,
                                  const struct RelconCycle *cycle,
                                  struct RelconLog **out);

/**
 * Number of logged rows.
 *
 * # Safety
 * `log` must be a live handle and `out` a valid pointer.
 */
enum RelconStatus relcon_log_len(const struct RelconLog *log, size_t *out);

/**
 * Copies one log column, a [`RelconColumn`], into `buf`, which must hold
 * `relcon_log_len` values.
 *
 * # Safety
 * `log` must be a live handle and `buf` must point to `cap` doubles.
 */
enum RelconStatus relcon_log_column(const struct RelconLog *log,
                                    int column,
                                    double *buf,
                                    size_t cap);

/**
 * Speed-tracking RMSE of the log in km/h.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum RelconStatus relcon_log_rmse_kmh(const struct RelconConfig *cfg,
                                      const struct RelconLog *log,
                                      double *out);

/**
 * Writes the log as CSV.
 *
 * # Safety
 * `log` must be a live handle and `path` a NUL-terminated string.
 */
enum RelconStatus relcon_log_write_csv(const struct RelconLog *log, const char *path);

/**
 * # Safety
 * `log` must be null or a handle from this library, not yet freed.
 */
void relcon_log_free(struct RelconLog *log);

/**
 * Rainflow-counts the log's junction temperature and applies Miner's rule.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum RelconStatus relcon_analyze(const struct RelconConfig *cfg,
                                 const struct RelconLog *log,
                                 struct RelconDamage *out);

/**
 * Cycles to failure for one thermal cycle under the configured lifetime
 * model. `t_j` is the mean junction temperature (°C), `t_on` the heating
 * time (s).
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum RelconStatus relcon_cycles_to_failure(const struct RelconConfig *cfg,
                                           double delta_t,
                                           double t_j,
                                           double t_on,
                                           double *out);

/**
 * Runs synthesis, simulation and analysis for both modes.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum RelconStatus relcon_compare(const struct RelconConfig *cfg,
                                 const struct RelconCycle *cycle,
                                 struct RelconComparison *out);

/**
 * Maps a mode name (`performance_oriented`, `reliability_aware`) to a
 * [`RelconMode`].
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RelconStatus relcon_mode_from_name(const char *name, enum RelconMode *out);

/**
 * Short description of a status code.
 */
const char *relcon_status_name(int status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELCON_H */

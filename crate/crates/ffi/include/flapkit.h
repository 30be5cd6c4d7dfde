/* C interface to the flapkit actuator design and simulation library. */

#ifndef FLAPKIT_H
#define FLAPKIT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FlapkitStatus {
  FLAPKIT_STATUS_OK = 0,
  FLAPKIT_STATUS_NULL_POINTER = 1,
  FLAPKIT_STATUS_INVALID_ARGUMENT = 2,
  FLAPKIT_STATUS_CONFIG_ERROR = 3,
  FLAPKIT_STATUS_INFEASIBLE = 4,
  FLAPKIT_STATUS_NUMERICAL_ERROR = 5,
  FLAPKIT_STATUS_BUFFER_TOO_SMALL = 6,
  FLAPKIT_STATUS_PANIC = 7,
} FlapkitStatus;

typedef enum FlapkitWaveform {
  FLAPKIT_WAVEFORM_SQUARE = 0,
  FLAPKIT_WAVEFORM_SINE = 1,
} FlapkitWaveform;

/**
 * Loaded project configuration.
 */
typedef struct FlapkitProject FlapkitProject;

/**
 * Result of a time-domain run.
 */
typedef struct FlapkitSimulation FlapkitSimulation;

/**
 * One integration step, SI units.
 */
typedef struct FlapkitSample {
  double t;
  double stroke_angle;
  double stroke_rate;
  double pitch_angle;
  double pitch_rate;
  double lift;
  double drag;
  double tau_drive;
  double p_elec;
  double p_aero;
} FlapkitSample;

/**
 * Description of the last simulated cycle, SI units.
 */
typedef struct FlapkitSummary {
  double torque_constant;
  double frequency;
  double stroke_amplitude;
  double pitch_max;
  double pitch_min;
  double pitch_at_stroke_extremes;
  uint32_t pitch_reversals;
  bool settled;
  double mean_lift;
  double mean_electrical_power;
  double mean_joule_power;
  double mean_aero_power;
  double energy_relative_error;
} FlapkitSummary;

typedef struct FlapkitSweepPoint {
  double frequency;
  double stroke_amplitude;
  double mean_lift;
  double mean_electrical_power;
  double mean_aero_power;
  bool settled;
  /**
   * False when this point failed; the other fields are then NaN.
   */
  bool ok;
} FlapkitSweepPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *flapkit_last_error(void);

/**
 * Load the built-in configuration of the device as built.
 *
 * # Safety
 * `out_project` must be a valid pointer to writable storage for a handle.
 */
enum FlapkitStatus flapkit_project_load_device(struct FlapkitProject **out_project);

/**
 * Parse a configuration from NUL-terminated UTF-8 JSON.
 *
 * # Safety
 * `json` must be a valid C string; `out_project` must be writable.
 */
enum FlapkitStatus flapkit_project_from_json(const char *json, struct FlapkitProject **out_project);

/**
 * # Safety
 * `project` must come from a `flapkit_project_*` constructor and not be
 * used afterwards. Null is ignored.
 */
void flapkit_project_free(struct FlapkitProject *project);

/**
 * Spring stiffness (N·m/rad) placing a point mass (kg) on an arc of radius
 * (m) at resonance frequency (Hz).
 *
 * # Safety
 * `out_stiffness` must be writable.
 */
enum FlapkitStatus flapkit_required_stiffness(double point_mass,
                                              double arc_radius,
                                              double frequency,
                                              double *out_stiffness);

/**
 * Inertia (kg·m²) implied by a stiffness (N·m/rad) and observed resonance
 * (Hz).
 *
 * # Safety
 * `out_inertia` must be writable.
 */
enum FlapkitStatus flapkit_effective_inertia(double stiffness,
                                             double observed_frequency,
                                             double *out_inertia);

/**
 * Mean resistive loss (W) of a bipolar drive of `amplitude` volts.
 *
 * # Safety
 * `out_power` must be writable.
 */
enum FlapkitStatus flapkit_joule_power(enum FlapkitWaveform waveform,
                                       double amplitude,
                                       double resistance,
                                       double *out_power);

/**
 * Geometric coil resistance (Ω) of the project's coil.
 *
 * # Safety
 * `project` must be a live handle; `out_ohms` must be writable.
 */
enum FlapkitStatus flapkit_coil_resistance(const struct FlapkitProject *project, double *out_ohms);

/**
 * Total flexure width (m) for the project's flexure material, thickness and
 * length under `max_torque` (N·m) at `max_deflection` (rad).
 *
 * # Safety
 * `project` must be a live handle; `out_width` must be writable.
 */
enum FlapkitStatus flapkit_flexure_width(const struct FlapkitProject *project,
                                         double max_torque,
                                         double max_deflection,
                                         double *out_width);

/**
 * Torque constant (N·m/A) that gives the project's target stroke.
 *
 * # Safety
 * `project` must be a live handle; `out_kt` must be writable.
 */
enum FlapkitStatus flapkit_calibrate(const struct FlapkitProject *project, double *out_kt);

/**
 * Simulate `cycles` drive periods from rest. Pass NaN as `torque_constant`
 * to use the configured value, or calibrate when none is configured.
 *
 * # Safety
 * `project` must be a live handle; `out_sim` must be writable.
 */
enum FlapkitStatus flapkit_simulate(const struct FlapkitProject *project,
                                    double torque_constant,
                                    uint32_t cycles,
                                    struct FlapkitSimulation **out_sim);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
size_t flapkit_simulation_len(const struct FlapkitSimulation *sim);

/**
 * # Safety
 * `sim` must be a live handle; `out_sample` must be writable.
 */
enum FlapkitStatus flapkit_simulation_sample(const struct FlapkitSimulation *sim,
                                             size_t index,
                                             struct FlapkitSample *out_sample);

/**
 * # Safety
 * `sim` must be a live handle; `out_summary` must be writable.
 */
enum FlapkitStatus flapkit_simulation_summary(const struct FlapkitSimulation *sim,
                                              struct FlapkitSummary *out_summary);

/**
 * # Safety
 * `sim` must come from [`flapkit_simulate`] and not be used afterwards.
 * Null is ignored.
 */
void flapkit_simulation_free(struct FlapkitSimulation *sim);

/**
 * Steady response at `n_points` frequencies from `f_min` to `f_max` (Hz)
 * into a caller buffer of `capacity` points. With a null buffer or too
 * small a capacity, `*out_written` receives the needed count and
 * `BufferTooSmall` is returned. `torque_constant` follows
 * [`flapkit_simulate`]; `threads` of 0 uses every core.
 *
 * # Safety
 * `project` must be a live handle; `buffer` must hold `capacity` points or
 * be null; `out_written` must be writable.
 */
enum FlapkitStatus flapkit_sweep(const struct FlapkitProject *project,
                                 double torque_constant,
                                 double f_min,
                                 double f_max,
                                 size_t n_points,
                                 size_t threads,
                                 struct FlapkitSweepPoint *buffer,
                                 size_t capacity,
                                 size_t *out_written);

/**
 * Design report as a JSON string, with simulation results when `sim` is
 * not null. Release the string with [`flapkit_string_free`].
 *
 * # Safety
 * `project` must be a live handle, `sim` null or a live handle, and
 * `out_json` writable.
 */
enum FlapkitStatus flapkit_report_json(const struct FlapkitProject *project,
                                       const struct FlapkitSimulation *sim,
                                       char **out_json);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void flapkit_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLAPKIT_H */

#ifndef SCREWDYN_H
#define SCREWDYN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Rotation representations accepted by the conversion call.
 */
typedef enum {
  /**
   * Three angles of the x-y-z factorization.
   */
  SCREWDYN_ROTATION_REP_EULER = 0,
  /**
   * Cayley vector-parameter.
   */
  SCREWDYN_ROTATION_REP_FEDOROV = 1,
  /**
   * Unit quaternion, scalar first.
   */
  SCREWDYN_ROTATION_REP_QUATERNION = 2,
  /**
   * 3×3 rotation matrix, row-major.
   */
  SCREWDYN_ROTATION_REP_MATRIX = 3,
} ScrewdynRotationRep;

/**
 * Outcome of a fallible call.
 */
typedef enum {
  SCREWDYN_STATUS_OK = 0,
  /**
   * Bad arguments, unparsable config, or a violated precondition.
   */
  SCREWDYN_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Numerical failure (divergence, singular matrix, chart singularity).
   */
  SCREWDYN_STATUS_NUMERICAL = 2,
} ScrewdynStatus;

/**
 * Opaque parsed scenario.
 */
typedef struct ScrewdynScenario ScrewdynScenario;

/**
 * Opaque finished trajectory.
 */
typedef struct ScrewdynTrajectory ScrewdynTrajectory;

/**
 * One body sample of a trajectory record.
 */
typedef struct {
  double time;
  /**
   * Scalar-first unit quaternion of the world pose.
   */
  double quat[4];
  double displacement[3];
  /**
   * Body-frame linear velocity.
   */
  double linear[3];
  /**
   * Body-frame angular velocity.
   */
  double angular[3];
  double e_kin;
  double e_pot;
} ScrewdynBodySample;

/**
 * Run summary of a finished trajectory.
 */
typedef struct {
  size_t records;
  double final_time;
  double energy_drift;
  double max_constraint_residual;
} ScrewdynSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (truncated,
 * always NUL-terminated when `cap > 0`) and returns the full message
 * length in bytes.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null with `cap = 0`.
 */
size_t screwdyn_last_error_message(char *buf, size_t cap);

/**
 * Number of components of a representation (3, 3, 4 or 9).
 */
size_t screwdyn_rotation_rep_len(ScrewdynRotationRep rep);

/**
 * Converts between rotation representations. `input` holds
 * `screwdyn_rotation_rep_len(from)` values, `output` receives
 * `screwdyn_rotation_rep_len(to)` values.
 *
 * # Safety
 * `input` and `output` must point to arrays of the documented lengths.
 */
ScrewdynStatus screwdyn_convert_rotation(ScrewdynRotationRep from,
                                         ScrewdynRotationRep to,
                                         const double *input,
                                         double *output);

/**
 * Stress from strain: `matrix_in`/`matrix_out` are `dim × dim`
 * row-major with `dim` 2 or 3.
 *
 * # Safety
 * Pointers must reference arrays of `dim * dim` doubles.
 */
ScrewdynStatus screwdyn_constitutive_apply(const double *coeffs,
                                           uint32_t dim,
                                           bool transpose_basis,
                                           const double *matrix_in,
                                           double *matrix_out);

/**
 * Strain from stress for correct continua; fails with
 * `SCREWDYN_STATUS_NUMERICAL` when `(r1 trI + r2) r2 r3 = 0`.
 *
 * # Safety
 * Pointers must reference arrays of `dim * dim` doubles.
 */
ScrewdynStatus screwdyn_constitutive_invert(const double *coeffs,
                                            uint32_t dim,
                                            bool transpose_basis,
                                            const double *matrix_in,
                                            double *matrix_out);

/**
 * Young modulus, shear modulus and Poisson ratio into `out[3]`.
 *
 * # Safety
 * `coeffs` points to 4 doubles, `out` to 3.
 */
ScrewdynStatus screwdyn_moduli(const double *coeffs,
                               uint32_t dim,
                               bool transpose_basis,
                               double *out);

/**
 * Parses a single-scenario JSON config into an opaque handle.
 *
 * # Safety
 * `json` must be a NUL-terminated UTF-8 string; `out` a valid pointer.
 */
ScrewdynStatus screwdyn_scenario_parse(const char *json, ScrewdynScenario **out);

/**
 * Frees a scenario handle (null is ignored).
 *
 * # Safety
 * `scenario` must come from [`screwdyn_scenario_parse`] and not be freed
 * twice.
 */
void screwdyn_scenario_free(ScrewdynScenario *scenario);

/**
 * Integrates a scenario to completion.
 *
 * # Safety
 * `scenario` must be a live handle; `out` a valid pointer.
 */
ScrewdynStatus screwdyn_scenario_run(const ScrewdynScenario *scenario, ScrewdynTrajectory **out);

/**
 * Frees a trajectory handle (null is ignored).
 *
 * # Safety
 * `trajectory` must come from [`screwdyn_scenario_run`] and not be freed
 * twice.
 */
void screwdyn_trajectory_free(ScrewdynTrajectory *trajectory);

/**
 * Number of emitted records.
 *
 * # Safety
 * `trajectory` must be a live handle.
 */
size_t screwdyn_trajectory_records(const ScrewdynTrajectory *trajectory);

/**
 * Number of bodies per record.
 *
 * # Safety
 * `trajectory` must be a live handle.
 */
size_t screwdyn_trajectory_bodies(const ScrewdynTrajectory *trajectory);

/**
 * Copies one body sample of one record.
 *
 * # Safety
 * `trajectory` must be a live handle and `out` a valid pointer.
 */
ScrewdynStatus screwdyn_trajectory_sample(const ScrewdynTrajectory *trajectory,
                                          size_t record,
                                          size_t body,
                                          ScrewdynBodySample *out);

/**
 * Copies the body label (truncated, NUL-terminated when `cap > 0`) and
 * returns its full length.
 *
 * # Safety
 * `trajectory` must be a live handle; `buf` must point to `cap` writable
 * bytes, or be null with `cap = 0`.
 */
size_t screwdyn_trajectory_body_label(const ScrewdynTrajectory *trajectory,
                                      size_t body,
                                      char *buf,
                                      size_t cap);

/**
 * Copies the run summary.
 *
 * # Safety
 * `trajectory` must be a live handle and `out` a valid pointer.
 */
ScrewdynStatus screwdyn_trajectory_summary(const ScrewdynTrajectory *trajectory,
                                           ScrewdynSummary *out);

/**
 * Renders the trajectory as CSV into `buf` (truncated, NUL-terminated
 * when `cap > 0`) and returns the full length in bytes; call with
 * `cap = 0` to size the buffer.
 *
 * # Safety
 * `trajectory` must be a live handle; `buf` must point to `cap` writable
 * bytes, or be null with `cap = 0`.
 */
size_t screwdyn_trajectory_csv(const ScrewdynTrajectory *trajectory, char *buf, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCREWDYN_H */

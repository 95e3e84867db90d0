#ifndef QWBC_H
#define QWBC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Selector value meaning "every level" in [`qwbc_run_new`].
#define QWBC_ALL -1

#define QWBC_MASS_LOW 0

#define QWBC_MASS_NOMINAL 1

#define QWBC_MASS_HIGH 2

typedef enum QwbcStatus {
  QWBC_STATUS_OK = 0,
  QWBC_STATUS_NULL_POINTER = 1,
  QWBC_STATUS_INVALID_ARGUMENT = 2,
  QWBC_STATUS_MODEL = 3,
  QWBC_STATUS_CONTROLLER = 4,
  QWBC_STATUS_SIMULATION = 5,
  QWBC_STATUS_IO = 6,
  QWBC_STATUS_PANIC = 7,
} QwbcStatus;

typedef struct QwbcController QwbcController;

typedef struct QwbcModel QwbcModel;

typedef struct QwbcRun QwbcRun;

// Solver outcome of one control tick.
typedef struct QwbcStepInfo {
  // 1 when the QP was solved to tolerance.
  uint8_t optimal;
  // 1 when the previous torques were reused.
  uint8_t held;
  size_t iterations;
  double max_residual;
} QwbcStepInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Description of the last failure on this thread; empty when none. The
// pointer stays valid until the next failing call on the same thread.
const char *qwbc_last_error(void);

// Loads the bundled quadruped-with-arm model (`path == NULL`) or a model
// description file.
//
// # Safety
// `path` is null or a NUL-terminated string; `out` is a valid pointer.
enum QwbcStatus qwbc_model_new(const char *path, struct QwbcModel **out);

// # Safety
// `model` is null or a handle from [`qwbc_model_new`] not yet freed.
void qwbc_model_free(struct QwbcModel *model);

// Actuated joints (legs then arm); 0 for a null handle.
//
// # Safety
// `model` is null or a live handle.
size_t qwbc_model_n_joints(const struct QwbcModel *model);

// Total mass in kg; 0 for a null handle.
//
// # Safety
// `model` is null or a live handle.
double qwbc_model_total_mass(const struct QwbcModel *model);

// Home posture resting on the default ground. `q` holds `7 + n_joints`
// values, `u` holds `6 + n_joints`.
//
// # Safety
// `model` is a live handle; `q` and `u` point to buffers of the given lengths.
enum QwbcStatus qwbc_model_standing_state(const struct QwbcModel *model,
                                          double *q,
                                          size_t q_len,
                                          double *u,
                                          size_t u_len);

// Controller with the preset impedance of the given base and arm mass
// levels ([`QWBC_MASS_LOW`], [`QWBC_MASS_NOMINAL`] or [`QWBC_MASS_HIGH`])
// and default weights. The desired pose is the model's standing state until
// [`qwbc_controller_hold`] is called.
//
// # Safety
// `model` is a live handle and `out` a valid pointer. The controller keeps
// its own copy of the model.
enum QwbcStatus qwbc_controller_new(const struct QwbcModel *model,
                                    int32_t base_mass,
                                    int32_t arm_mass,
                                    struct QwbcController **out);

// # Safety
// `ctrl` is null or a handle from [`qwbc_controller_new`] not yet freed.
void qwbc_controller_free(struct QwbcController *ctrl);

// Makes the pose of the given state the impedance rest pose.
//
// # Safety
// `ctrl` is a live handle; `q` and `u` point to buffers of the given lengths.
enum QwbcStatus qwbc_controller_hold(struct QwbcController *ctrl,
                                     const double *q,
                                     size_t q_len,
                                     const double *u,
                                     size_t u_len);

// One control tick.
//
// `stance` holds 4 flags in LF, RF, LH, RH order; `swing_accel` holds 12
// base-frame foot accelerations read for swing legs; `fe` is the measured
// end-effector force and `base_accel` the measured trunk acceleration
// (either may be null for zero). Joint torques go to `tau`
// (`n_joints` values). An unsolved QP is not an error: the previous torques
// are returned and `info->held` is set.
//
// # Safety
// `ctrl` is a live handle, array arguments point to buffers of the stated
// sizes and `info` is null or valid.
enum QwbcStatus qwbc_controller_step(struct QwbcController *ctrl,
                                     const double *q,
                                     size_t q_len,
                                     const double *u,
                                     size_t u_len,
                                     const uint8_t *stance,
                                     const double *swing_accel,
                                     const double *fe,
                                     const double *base_accel,
                                     double *tau,
                                     size_t tau_len,
                                     struct QwbcStepInfo *info);

// Runs a scenario family (`stand-step-base-inertia`, `stand-step-arm-inertia`,
// `stand-chirp` or `trot`). Selectors take a mass level or [`QWBC_ALL`];
// `gp` is 1..=4 or [`QWBC_ALL`]. `config_path` (TOML) and `out_dir` (per-run
// CSV logs) may be null.
//
// # Safety
// String arguments are null or NUL-terminated; `out` is a valid pointer.
enum QwbcStatus qwbc_run_new(const char *scenario,
                             int32_t mass,
                             int32_t gp,
                             int32_t ee_inertia,
                             const char *config_path,
                             const char *out_dir,
                             struct QwbcRun **out);

// # Safety
// `run` is null or a handle from [`qwbc_run_new`] not yet freed.
void qwbc_run_free(struct QwbcRun *run);

// Number of scenarios in the run; 0 for a null handle.
//
// # Safety
// `run` is null or a live handle.
size_t qwbc_run_len(const struct QwbcRun *run);

// Name of scenario `index`, or null when out of range. Owned by the handle.
//
// # Safety
// `run` is null or a live handle.
const char *qwbc_run_name(const struct QwbcRun *run, size_t index);

// Summary table as CSV text, one row per scenario. Owned by the handle.
//
// # Safety
// `run` is null or a live handle.
const char *qwbc_run_summary_csv(const struct QwbcRun *run);

// Template-relative RMS tracking errors (m) of scenario `index`, plus the
// count of ticks violating a hard constraint.
//
// # Safety
// `run` is a live handle; output pointers are null or valid.
enum QwbcStatus qwbc_run_tracking(const struct QwbcRun *run,
                                  size_t index,
                                  double *rms_base,
                                  double *rms_ee,
                                  size_t *violations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWBC_H */

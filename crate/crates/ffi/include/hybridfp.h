/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef HYBRIDFP_H
#define HYBRIDFP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum HfpStatus {
  HFP_STATUS_OK = 0,
  HFP_STATUS_NULL_POINTER = 1,
  HFP_STATUS_INVALID_ARGUMENT = 2,
  /*
   Rejected configuration, CFL violation or other validation failure.
   */
  HFP_STATUS_VALIDATION = 3,
  /*
   Numerical failure during a run.
   */
  HFP_STATUS_RUNTIME = 4,
  HFP_STATUS_IO = 5,
  HFP_STATUS_PANIC = 6,
} HfpStatus;

/*
 Opaque scenario handle.
 */
typedef struct HfpScenario HfpScenario;

/*
 Opaque stepping solver handle.
 */
typedef struct HfpSolver HfpSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *hfp_version(void);

/*
 Copy the calling thread's last error message into `buf`, truncating to
 `len - 1` bytes. Returns the full message length excluding the NUL, or 0
 when the last call succeeded.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t hfp_last_error_message(char *buf, size_t len);

/*
 Load and validate a scenario file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HfpStatus hfp_scenario_load(const char *path, struct HfpScenario **out);

/*
 Build the reference scenario with all parameters at their defaults.

 # Safety
 `out` must be writable.
 */
enum HfpStatus hfp_scenario_default(struct HfpScenario **out);

/*
 # Safety
 `scenario` must be null or a handle from this library, freed once.
 */
void hfp_scenario_free(struct HfpScenario *scenario);

/*
 Number of modes, or 0 for a null handle.

 # Safety
 `scenario` must be null or a live handle.
 */
size_t hfp_scenario_n_modes(const struct HfpScenario *scenario);

/*
 Cell count of mode `mode` (0-based), including inactive cells.

 # Safety
 `scenario` must be a live handle; `out` must be writable.
 */
enum HfpStatus hfp_scenario_n_cells(const struct HfpScenario *scenario, size_t mode, size_t *out);

/*
 Time step and step count of the scenario.

 # Safety
 `scenario` must be a live handle; `dt` and `n_steps` must be writable.
 */
enum HfpStatus hfp_scenario_time_grid(const struct HfpScenario *scenario,
                                      double *dt,
                                      size_t *n_steps);

/*
 Create a solver at the initial density. The scenario is copied, so the
 scenario handle may be freed afterwards.

 # Safety
 `scenario` must be a live handle; `out` must be writable.
 */
enum HfpStatus hfp_solver_new(const struct HfpScenario *scenario, struct HfpSolver **out);

/*
 # Safety
 `solver` must be null or a handle from this library, freed once.
 */
void hfp_solver_free(struct HfpSolver *solver);

/*
 Advance by up to `n` steps, stopping at the final time. The number of
 steps actually taken is written to `taken` when it is non-null.

 # Safety
 `solver` must be a live handle; `taken` must be null or writable.
 */
enum HfpStatus hfp_solver_step(struct HfpSolver *solver, size_t n, size_t *taken);

/*
 Whether the solver has reached the final time.

 # Safety
 `solver` must be null or a live handle.
 */
bool hfp_solver_is_finished(const struct HfpSolver *solver);

/*
 Current time of the solver.

 # Safety
 `solver` must be a live handle; `out` must be writable.
 */
enum HfpStatus hfp_solver_time(const struct HfpSolver *solver, double *out);

/*
 Probability mass currently held by mode `mode` (0-based).

 # Safety
 `solver` must be a live handle; `out` must be writable.
 */
enum HfpStatus hfp_solver_mode_mass(const struct HfpSolver *solver, size_t mode, double *out);

/*
 Copy the cell densities of mode `mode` into `buf`, which must hold
 exactly the mode's cell count (see [`hfp_scenario_n_cells`]). Cells are
 ordered with the first axis fastest.

 # Safety
 `solver` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum HfpStatus hfp_solver_copy_density(const struct HfpSolver *solver,
                                       size_t mode,
                                       double *buf,
                                       size_t len);

/*
 Run the full integration and write the mass series and snapshots into
 directory `dir`.

 # Safety
 `scenario` must be a live handle; `dir` a NUL-terminated string.
 */
enum HfpStatus hfp_run_to_dir(const struct HfpScenario *scenario, const char *dir);

/*
 Run the particle simulation with `n_particles` particles and write its
 outputs into `dir`.

 # Safety
 `scenario` must be a live handle; `dir` a NUL-terminated string.
 */
enum HfpStatus hfp_mc_to_dir(const struct HfpScenario *scenario,
                             size_t n_particles,
                             uint64_t seed,
                             const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRIDFP_H */

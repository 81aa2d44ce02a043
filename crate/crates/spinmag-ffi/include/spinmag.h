#ifndef SPINMAG_H
#define SPINMAG_H

/* Generated by cbindgen from the spinmag-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes returned by every fallible `spinmag_*` call.
 */
typedef enum SpinmagStatus {
  SPINMAG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SPINMAG_STATUS_NULL_POINTER = 1,
  /**
   * Parameters or actions were out of their documented ranges.
   */
  SPINMAG_STATUS_INVALID_ARGUMENT = 2,
  /**
   * `step` was called on a finished episode.
   */
  SPINMAG_STATUS_EPISODE_DONE = 3,
  /**
   * The master-equation integrator or the QFI evaluation failed.
   */
  SPINMAG_STATUS_SIMULATION_FAILURE = 4,
  /**
   * A caller-provided buffer is too small.
   */
  SPINMAG_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * A panic was caught at the FFI boundary.
   */
  SPINMAG_STATUS_INTERNAL_PANIC = 6,
} SpinmagStatus;

/**
 * Opaque environment handle; create with [`spinmag_env_new`], destroy with
 * [`spinmag_env_free`].
 */
typedef struct SpinmagEnv SpinmagEnv;

/**
 * Plain-old-data environment parameters.
 *
 * `two_j` is twice the spin quantum number (1 for j = 1/2, 2 for j = 1, ...).
 * Non-finite or non-positive `omega`/`t_pulse`, negative `gamma`, or zero
 * `n_pulses` select the reference working point for that field.
 */
typedef struct SpinmagEnvParams {
  uint32_t two_j;
  double omega;
  double gamma;
  uint32_t n_pulses;
  double t_pulse;
  /**
   * Nonzero: append normalized episode time to the observation.
   */
  int32_t include_time_obs;
  /**
   * Nonzero: divide rewards by the ideal ceiling 4 j^2 T^2.
   */
  int32_t normalize_reward;
} SpinmagEnvParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Fills `out` with the reference parameters for the given spin.
 *
 * # Safety
 * `out` must be a valid pointer to a `SpinmagEnvParams`.
 */
enum SpinmagStatus spinmag_env_params_default(uint32_t two_j, struct SpinmagEnvParams *out);

/**
 * Creates an environment; on success `*out` owns the handle.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum SpinmagStatus spinmag_env_new(const struct SpinmagEnvParams *params, struct SpinmagEnv **out);

/**
 * Destroys a handle created by [`spinmag_env_new`]. Null is a no-op.
 *
 * # Safety
 * `env` must be null or a pointer returned by [`spinmag_env_new`] that has
 * not been freed yet.
 */
void spinmag_env_free(struct SpinmagEnv *env);

/**
 * Observation length for this environment (2 d^2, plus 1 with the time
 * entry). Returns 0 for a null handle.
 *
 * # Safety
 * `env` must be null or a live handle.
 */
size_t spinmag_env_observation_len(const struct SpinmagEnv *env);

/**
 * Starts a fresh episode and writes the initial observation.
 *
 * # Safety
 * `env` must be a live handle; `obs_out` must point to at least `obs_cap`
 * doubles.
 */
enum SpinmagStatus spinmag_env_reset(struct SpinmagEnv *env, double *obs_out, size_t obs_cap);

/**
 * Applies one pulse from a raw action in [-1, 1]^3, writing the next
 * observation, the reward, and the done flag.
 *
 * # Safety
 * `env` must be a live handle; `action` must point to 3 doubles; `obs_out`
 * must point to at least `obs_cap` doubles; `reward_out` and `done_out`
 * must be valid pointers.
 */
enum SpinmagStatus spinmag_env_step(struct SpinmagEnv *env,
                                    const double *action,
                                    double *obs_out,
                                    size_t obs_cap,
                                    double *reward_out,
                                    int32_t *done_out);

/**
 * Quantum Fisher information of the current state.
 *
 * # Safety
 * `env` must be a live handle and `q_out` a valid pointer.
 */
enum SpinmagStatus spinmag_env_qfi(const struct SpinmagEnv *env, double *q_out);

/**
 * Final QFI of the freely evolved optimal probe state for these parameters.
 *
 * # Safety
 * `params` and `q_out` must be valid pointers.
 */
enum SpinmagStatus spinmag_optimal_probe_qfi(const struct SpinmagEnvParams *params, double *q_out);

/**
 * Final QFI of the single resonant pi/2-pulse strategy for these parameters.
 *
 * # Safety
 * `params` and `q_out` must be valid pointers.
 */
enum SpinmagStatus spinmag_pi_half_qfi(const struct SpinmagEnvParams *params, double *q_out);

/**
 * Copies the last error message (UTF-8, NUL-terminated) for the calling
 * thread into `buf` and returns the full message length in bytes; the
 * message is truncated when `cap` is too small. A zero return means no
 * error has been recorded.
 *
 * # Safety
 * `buf` must be null or point to at least `cap` bytes.
 */
size_t spinmag_last_error(char *buf, size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINMAG_H */

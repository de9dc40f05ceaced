#ifndef RMBSA_H
#define RMBSA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Values accepted by `rmbsa_env_heuristic_action`.
 */
typedef enum RmbsaHeuristic {
  RMBSA_HEURISTIC_FIRST_BAND_FIRST_FIT = 0,
  RMBSA_HEURISTIC_DISTANCE_ADAPTIVE_FIRST_FIT = 1,
  RMBSA_HEURISTIC_BIT_RATE_ADAPTIVE_FIRST_FIT = 2,
} RmbsaHeuristic;

/**
 * Status code returned by every entry point.
 */
typedef enum RmbsaStatus {
  RMBSA_STATUS_OK = 0,
  RMBSA_STATUS_NULL_POINTER = 1,
  RMBSA_STATUS_INVALID_ARGUMENT = 2,
  RMBSA_STATUS_CONFIG = 3,
  RMBSA_STATUS_EPISODE_DONE = 4,
  RMBSA_STATUS_ACTION_OUT_OF_RANGE = 5,
  RMBSA_STATUS_BUFFER_TOO_SMALL = 6,
  RMBSA_STATUS_INTERNAL = 7,
} RmbsaStatus;

/**
 * Opaque environment handle.
 */
typedef struct RmbsaEnv RmbsaEnv;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *rmbsa_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rmbsa_version(void);

/**
 * Creates an environment from a TOML experiment config (NULL for the
 * built-in defaults) at offered load `load_erlang`; a non-positive load
 * selects the first load of the config. Relative paths in the config are
 * taken relative to the working directory.
 *
 * # Safety
 * `config_toml` must be NULL or a valid NUL-terminated string; `out` must
 * be a valid pointer.
 */
enum RmbsaStatus rmbsa_env_new(const char *config_toml, double load_erlang, struct RmbsaEnv **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `env` must be NULL or a handle from `rmbsa_env_new` not yet freed.
 */
void rmbsa_env_free(struct RmbsaEnv *env);

/**
 * Observation length K x (|E| + 5B); 0 for a NULL handle.
 *
 * # Safety
 * `env` must be NULL or a live handle.
 */
size_t rmbsa_env_observation_len(const struct RmbsaEnv *env);

/**
 * Number of actions K x B + 1 (the last one rejects); 0 for a NULL handle.
 *
 * # Safety
 * `env` must be NULL or a live handle.
 */
size_t rmbsa_env_num_actions(const struct RmbsaEnv *env);

/**
 * Starts an episode and writes the first observation into `obs`.
 *
 * # Safety
 * `env` must be a live handle and `obs` must hold `obs_len` doubles.
 */
enum RmbsaStatus rmbsa_env_reset(struct RmbsaEnv *env, uint64_t seed, double *obs, size_t obs_len);

/**
 * Applies `action`; writes the next observation, the reward (+1 or -1) and
 * whether the episode ended. `reward` and `done` may be NULL.
 *
 * # Safety
 * `env` must be a live handle, `obs` must hold `obs_len` doubles, and
 * `reward` / `done` must be NULL or valid.
 */
enum RmbsaStatus rmbsa_env_step(struct RmbsaEnv *env,
                                size_t action,
                                double *obs,
                                size_t obs_len,
                                double *reward,
                                bool *done);

/**
 * Writes the action mask (1 = valid) for the pending request.
 *
 * # Safety
 * `env` must be a live handle and `mask` must hold `mask_len` bytes.
 */
enum RmbsaStatus rmbsa_env_action_mask(struct RmbsaEnv *env, uint8_t *mask, size_t mask_len);

/**
 * Action a baseline heuristic would take for the pending request; `kind`
 * is one of the `RmbsaHeuristic` values.
 *
 * # Safety
 * `env` must be a live handle and `action` a valid pointer.
 */
enum RmbsaStatus rmbsa_env_heuristic_action(struct RmbsaEnv *env, uint32_t kind, size_t *action);

/**
 * Blocking probability of the steps taken so far in the current episode.
 *
 * # Safety
 * `env` must be a live handle and `bp` a valid pointer.
 */
enum RmbsaStatus rmbsa_env_blocking_probability(struct RmbsaEnv *env, double *bp);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RMBSA_H */

#ifndef POPCAST_H
#define POPCAST_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. 2, 3 and 4 share meaning with the command line exit codes.
 */
typedef enum PopcastStatus {
  POPCAST_STATUS_OK = 0,
  POPCAST_STATUS_INTERNAL = 1,
  POPCAST_STATUS_INFEASIBLE = 2,
  POPCAST_STATUS_INVALID_INPUT = 3,
  POPCAST_STATUS_NULL_POINTER = 5,
  POPCAST_STATUS_EMPTY_SESSION = 6,
  POPCAST_STATUS_DUPLICATE_SESSION = 7,
  POPCAST_STATUS_UNKNOWN_SESSION = 8,
  POPCAST_STATUS_OUT_OF_RANGE = 9,
} PopcastStatus;

typedef enum PopcastRegime {
  POPCAST_REGIME_SATURATED = 0,
  POPCAST_REGIME_CONSTRAINED = 1,
  POPCAST_REGIME_INFEASIBLE = 2,
} PopcastRegime;

/**
 * Audience under construction.
 */
typedef struct PopcastCensus PopcastCensus;

/**
 * Allocation outcome for one census.
 */
typedef struct PopcastResult PopcastResult;

/**
 * Live simulator state.
 */
typedef struct PopcastSim PopcastSim;

/**
 * System and layer parameters, all in Mbps.
 */
typedef struct PopcastParams {
  double capacity_mbps;
  double beta_max_mbps;
  double beta_min_mbps;
  double base_layer_mbps;
  double enh_layer_mbps;
} PopcastParams;

typedef struct PopcastSummary {
  enum PopcastRegime regime;
  size_t session_count;
  uint64_t total_users;
  double avg_satisfaction_popularity;
  double avg_satisfaction_equal;
  uint64_t improved_users;
  uint64_t degraded_users;
  uint64_t unchanged_users;
} PopcastSummary;

/**
 * One session of a result, in rank order.
 */
typedef struct PopcastSessionInfo {
  size_t rank;
  uint64_t users;
  double rate_mbps;
  double equal_share_rate_mbps;
  double satisfaction;
  uint32_t enhancement_layers;
  double granted_mbps;
  double residual_mbps;
} PopcastSessionInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *popcast_last_error_message(void);

/**
 * Parameters of the reference setup: 30 Mbps, 2 Mbps cap, 0.6 Mbps floor,
 * 0.6 Mbps base layer and 0.25 Mbps enhancement layers.
 */
struct PopcastParams popcast_params_default(void);

struct PopcastCensus *popcast_census_new(void);

/**
 * # Safety
 * `census` must come from `popcast_census_new` and not be freed yet, or be NULL.
 */
void popcast_census_free(struct PopcastCensus *census);

/**
 * Adds a session. Ids must be unique NUL-terminated UTF-8 strings.
 *
 * # Safety
 * `census` must be a live handle and `id` a valid C string.
 */
enum PopcastStatus popcast_census_add(struct PopcastCensus *census, const char *id, uint64_t users);

/**
 * Allocates both schemes for `census` and stores a new result in `*out`.
 *
 * # Safety
 * All pointers must be valid; `*out` receives a handle to free with
 * `popcast_result_free`.
 */
enum PopcastStatus popcast_allocate(const struct PopcastParams *params,
                                    const struct PopcastCensus *census,
                                    struct PopcastResult **out);

/**
 * # Safety
 * `result` must come from this library and not be freed yet, or be NULL.
 */
void popcast_result_free(struct PopcastResult *result);

/**
 * # Safety
 * `result` must be a live handle and `out` writable.
 */
enum PopcastStatus popcast_result_summary(const struct PopcastResult *result,
                                          struct PopcastSummary *out);

/**
 * Session at rank `index + 1`.
 *
 * # Safety
 * `result` must be a live handle and `out` writable.
 */
enum PopcastStatus popcast_result_session(const struct PopcastResult *result,
                                          size_t index,
                                          struct PopcastSessionInfo *out);

/**
 * Id of the session at rank `index + 1`, or NULL when out of range.
 * Borrowed from `result`; valid until it is freed.
 *
 * # Safety
 * `result` must be a live handle.
 */
const char *popcast_result_session_id(const struct PopcastResult *result, size_t index);

/**
 * Starts a simulator at the given census.
 *
 * # Safety
 * All pointers must be valid; `*out` receives a handle to free with
 * `popcast_sim_free`.
 */
enum PopcastStatus popcast_sim_new(const struct PopcastParams *params,
                                   const struct PopcastCensus *census,
                                   struct PopcastSim **out);

/**
 * # Safety
 * `sim` must come from `popcast_sim_new` and not be freed yet, or be NULL.
 */
void popcast_sim_free(struct PopcastSim *sim);

/**
 * One user joins `session`.
 *
 * # Safety
 * `sim` must be a live handle and `session` a valid C string.
 */
enum PopcastStatus popcast_sim_join(struct PopcastSim *sim, double time, const char *session);

/**
 * One user leaves `session`.
 *
 * # Safety
 * `sim` must be a live handle and `session` a valid C string.
 */
enum PopcastStatus popcast_sim_leave(struct PopcastSim *sim, double time, const char *session);

/**
 * Opens `session` with no users.
 *
 * # Safety
 * `sim` must be a live handle and `session` a valid C string.
 */
enum PopcastStatus popcast_sim_start(struct PopcastSim *sim, double time, const char *session);

/**
 * Closes `session`; its users leave the system.
 *
 * # Safety
 * `sim` must be a live handle and `session` a valid C string.
 */
enum PopcastStatus popcast_sim_stop(struct PopcastSim *sim, double time, const char *session);

/**
 * One user moves from `from` to `to`.
 *
 * # Safety
 * `sim` must be a live handle and both ids valid C strings.
 */
enum PopcastStatus popcast_sim_switch(struct PopcastSim *sim,
                                      double time,
                                      const char *from,
                                      const char *to);

/**
 * Current allocation of the simulator as a new result handle.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum PopcastStatus popcast_sim_result(const struct PopcastSim *sim, struct PopcastResult **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POPCAST_H */

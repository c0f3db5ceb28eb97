#ifndef MCS_HYBRID_H
#define MCS_HYBRID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MCS_METRIC_SERVICE_QUALITY = 0,
  MCS_METRIC_ROSQ = 1,
  MCS_METRIC_FODSQ = 2,
  MCS_METRIC_WORKER_UTILITY = 3,
  MCS_METRIC_NI = 4,
  MCS_METRIC_DIP = 5,
  MCS_METRIC_ECIP = 6,
  MCS_METRIC_RUNNING_TIME_MS = 7,
} McsMetric;

typedef enum {
  MCS_STATUS_OK = 0,
  MCS_STATUS_NULL_POINTER = 1,
  MCS_STATUS_INVALID_ARGUMENT = 2,
  MCS_STATUS_INVALID_MARKET = 3,
  MCS_STATUS_ENGINE_FAILURE = 4,
  MCS_STATUS_OUT_OF_RANGE = 5,
  MCS_STATUS_BUFFER_TOO_SMALL = 6,
  MCS_STATUS_PANIC = 7,
} McsStatus;

/**
 * A finished Monte Carlo experiment.
 */
typedef struct McsExperiment McsExperiment;

/**
 * A futures contract book.
 */
typedef struct McsFutures McsFutures;

/**
 * A validated market.
 */
typedef struct McsMarket McsMarket;

typedef struct {
  double overbooking_rate;
  double payment_step;
  double risk_tolerance;
  int64_t money_scale;
  uintptr_t max_rounds_cap;
} McsConfig;

typedef struct {
  double budget;
  double desired_quality;
  double risk_scale;
  double tx_power;
} McsTaskData;

typedef struct {
  double participation_prob;
  double tx_power;
} McsWorkerData;

typedef struct {
  double quality;
  double cost;
  double desired_payment;
  double uplink_latency;
  double downlink_latency;
} McsPairData;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *mcs_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mcs_version(void);

/**
 * Fills `out` with the default configuration.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `McsConfig`.
 */
McsStatus mcs_config_default(McsConfig *out);

/**
 * Builds a market from flat arrays. `pairs` is row-major, `n_tasks * n_workers` long.
 *
 * # Safety
 * Each array pointer must be valid for its stated length (it may be null
 * when that length is zero); `config` and `out` must be valid pointers.
 */
McsStatus mcs_market_new(const McsTaskData *tasks,
                         uintptr_t n_tasks,
                         const McsWorkerData *workers,
                         uintptr_t n_workers,
                         const McsPairData *pairs,
                         const McsConfig *config,
                         McsMarket **out);

/**
 * Samples a market from scenario text (the CLI's key-value format).
 *
 * # Safety
 * `spec_text` must be a NUL-terminated string; `out` must be a valid pointer.
 */
McsStatus mcs_market_generate(const char *spec_text, uint64_t seed, McsMarket **out);

/**
 * # Safety
 * `market` must be null or a handle from this library that has not been freed.
 */
void mcs_market_free(McsMarket *market);

/**
 * # Safety
 * `market` must be null or a live handle.
 */
uintptr_t mcs_market_n_tasks(const McsMarket *market);

/**
 * # Safety
 * `market` must be null or a live handle.
 */
uintptr_t mcs_market_n_workers(const McsMarket *market);

/**
 * Runs the futures-market matching.
 *
 * # Safety
 * `market` must be a live handle and `out` a valid pointer.
 */
McsStatus mcs_futures_run(const McsMarket *market, McsFutures **out);

/**
 * # Safety
 * `futures` must be null or a live handle.
 */
void mcs_futures_free(McsFutures *futures);

/**
 * # Safety
 * `futures` must be null or a live handle.
 */
uintptr_t mcs_futures_rounds(const McsFutures *futures);

/**
 * # Safety
 * `futures` must be null or a live handle.
 */
uintptr_t mcs_futures_total_contracts(const McsFutures *futures);

/**
 * Copies the workers contracted to `task` into `buf` (ascending) and stores
 * their count in `len`. With a short buffer, `len` still receives the count
 * and the call returns `BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `futures` must be a live handle, `len` a valid pointer, and `buf` valid for `cap` elements.
 */
McsStatus mcs_futures_task_contracts(const McsFutures *futures,
                                     uintptr_t task,
                                     uintptr_t *buf,
                                     uintptr_t cap,
                                     uintptr_t *len);

/**
 * Locked payment of a contract, in currency. Returns `OUT_OF_RANGE` if the pair has no contract.
 *
 * # Safety
 * `futures` must be a live handle and `out` a valid pointer.
 */
McsStatus mcs_futures_payment(const McsFutures *futures,
                              uintptr_t task,
                              uintptr_t worker,
                              double *out);

/**
 * Runs a full experiment described by scenario text.
 *
 * # Safety
 * `spec_text` must be a NUL-terminated string and `out` a valid pointer.
 */
McsStatus mcs_experiment_run(const char *spec_text, McsExperiment **out);

/**
 * Mean of `metric` for the method named `method` (e.g. `"hybrid"`).
 * RoSQ is NaN when it was undefined on every trial.
 *
 * # Safety
 * `experiment` must be a live handle, `method` a NUL-terminated string and `out` a valid pointer.
 */
McsStatus mcs_experiment_mean(const McsExperiment *experiment,
                              const char *method,
                              McsMetric metric,
                              double *out);

/**
 * Writes `results.csv` and `aggregate.json` into directory `dir`.
 *
 * # Safety
 * `experiment` must be a live handle and `dir` a NUL-terminated string.
 */
McsStatus mcs_experiment_write(const McsExperiment *experiment, const char *dir);

/**
 * # Safety
 * `experiment` must be null or a live handle.
 */
void mcs_experiment_free(McsExperiment *experiment);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCS_HYBRID_H */

#ifndef YCHANNEL_H
#define YCHANNEL_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every call.
typedef enum YchStatus {
  YCH_STATUS_OK = 0,
  YCH_STATUS_NULL_POINTER = 1,
  YCH_STATUS_INVALID_ARGUMENT = 2,
  // The channel draw violates a genericity condition of the scheme.
  YCH_STATUS_DEGENERATE_CHANNEL = 3,
  // A Rust panic was caught at the boundary.
  YCH_STATUS_INTERNAL = 4,
} YchStatus;

typedef enum YchCase {
  YCH_CASE_A = 0,
  YCH_CASE_B = 1,
  YCH_CASE_C = 2,
} YchCase;

// Opaque scenario handle.
typedef struct YchScenario YchScenario;

typedef struct YchBounds {
  uint32_t theorem_sum;
  // Cut-set bound per user, in the caller's labelling.
  uint32_t cutset_per_user[3];
  uint32_t cutset_sum;
  uint32_t genie_sum;
  enum YchCase binding_case;
} YchBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Sum-DoF bounds for antenna counts given in any order.
//
// # Safety
// `out` must be null or point to writable memory for one `YchBounds`.
enum YchStatus ych_bounds(int64_t m1, int64_t m2, int64_t m3, int64_t n, struct YchBounds *out);

// Draws a seeded channel and builds the plan on it.
//
// # Safety
// `out` must be null or point to writable storage for one pointer. On
// success the handle written there must be released with
// [`ych_scenario_free`].
enum YchStatus ych_scenario_new(int64_t m1,
                                int64_t m2,
                                int64_t m3,
                                int64_t n,
                                uint64_t seed,
                                bool reciprocal,
                                struct YchScenario **out);

// Releases a scenario. Null is ignored.
//
// # Safety
// `scenario` must be null or a handle from [`ych_scenario_new`] that has
// not been freed yet.
void ych_scenario_free(struct YchScenario *scenario);

// Sum-DoF predicted for the scenario's configuration.
//
// # Safety
// `scenario` must be null or a live handle; `out` must be null or writable.
enum YchStatus ych_scenario_theorem_sum(const struct YchScenario *scenario, uint32_t *out);

// Checks every plan invariant; `passed` receives the verdict.
//
// # Safety
// `scenario` must be null or a live handle; `passed` must be null or writable.
enum YchStatus ych_scenario_validate(const struct YchScenario *scenario, bool *passed);

// Per-message rates (six values) and their sum at `snr_db`, in bits per
// channel use.
//
// # Safety
// `scenario` must be null or a live handle; `rates` must be null or point
// to six writable doubles; `sum_rate` must be null or writable.
enum YchStatus ych_scenario_rates(const struct YchScenario *scenario,
                                  double snr_db,
                                  double *rates,
                                  double *sum_rate);

// Rate slope between the extreme points of an increasing SNR grid (dB).
//
// # Safety
// `scenario` must be null or a live handle; `snr_db` must be null or point
// to `len` readable doubles; `slope` must be null or writable.
enum YchStatus ych_scenario_estimate_dof(const struct YchScenario *scenario,
                                         const double *snr_db,
                                         size_t len,
                                         double *slope);

// Message of the last failed call on this thread, or null. The string is
// owned by the library and stays valid until the next call on the thread.
const char *ych_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* YCHANNEL_H */

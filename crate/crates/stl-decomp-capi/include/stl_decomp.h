#ifndef STL_DECOMP_H
#define STL_DECOMP_H

/* Generated from the Rust sources by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/* Parsed and validated scenario; create with stldec_scenario_parse. */
typedef struct StldecScenario StldecScenario;
/* Outcome of one decomposition solve; create with stldec_decompose. */
typedef struct StldecResult StldecResult;

// The call succeeded.
#define STLDEC_OK 0

// A required pointer argument was null.
#define STLDEC_ERR_NULL_ARGUMENT -1

// A string argument was not valid UTF-8.
#define STLDEC_ERR_UTF8 -2

// A scenario, params, or trajectory document failed to parse or validate.
#define STLDEC_ERR_PARSE -3

// The tasks are provably unsatisfiable before solving (fixed-region
// conflict).
#define STLDEC_ERR_UNSATISFIABLE -4

// Decomposition failed or produced no single-edge tasks to evaluate.
#define STLDEC_ERR_SOLVE -5

// Robustness evaluation failed (for example, the trajectory ends before a
// task horizon).
#define STLDEC_ERR_MONITOR -6

// A panic was caught at the boundary; state may be inconsistent.
#define STLDEC_ERR_INTERNAL -7

// Solver reached the duality-gap target.
#define STLDEC_STATUS_OPTIMAL 0

// Strictly feasible point found, gap target not reached.
#define STLDEC_STATUS_FEASIBLE 1

// Certified infeasible.
#define STLDEC_STATUS_INFEASIBLE 2

// Iteration budget exhausted without a verdict.
#define STLDEC_STATUS_ITER_LIMIT 3

// Evaluate the scenario's original tasks.
#define STLDEC_TASKS_ORIGINAL 0

// Evaluate the single-edge tasks produced by decomposition.
#define STLDEC_TASKS_REWRITTEN 1

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; do not free.
const char *stldec_version(void);

// Message describing the most recent failure on this thread, empty when
// no failure has occurred. Owned by the library; do not free.
const char *stldec_last_error(void);

// Parse and validate a scenario document. Returns null on failure.
//
// # Safety
// `text` must be null or point to a nul-terminated string.
StldecScenario *stldec_scenario_parse(const char *text);

// Release a scenario handle. Null is ignored.
//
// # Safety
// `scenario` must be null or a pointer returned by
// [`stldec_scenario_parse`] that has not been freed.
void stldec_scenario_free(StldecScenario *scenario);

// Number of agents, or a negative error code.
//
// # Safety
// `scenario` must be null or a live scenario handle.
int32_t stldec_scenario_agents(const StldecScenario *scenario);

// State dimension per agent, or a negative error code.
//
// # Safety
// `scenario` must be null or a live scenario handle.
int32_t stldec_scenario_state_dim(const StldecScenario *scenario);

// Decompose the scenario's tasks into single-edge rectangles.
//
// Infeasibility is not an error: the returned handle reports it through
// [`stldec_result_status`]. Null is returned only when the inputs are
// unusable or the tasks are provably unsatisfiable before solving.
//
// # Safety
// `scenario` must be null or a live scenario handle.
StldecResult *stldec_decompose(const StldecScenario *scenario);

// Release a result handle. Null is ignored.
//
// # Safety
// `result` must be null or a pointer returned by [`stldec_decompose`]
// that has not been freed.
void stldec_result_free(StldecResult *result);

// One of the `STLDEC_STATUS_*` values, or a negative error code.
//
// # Safety
// `result` must be null or a live result handle.
int32_t stldec_result_status(const StldecResult *result);

// Volume objective at the final iterate; NaN on a null handle.
//
// # Safety
// `result` must be null or a live result handle.
double stldec_result_objective(const StldecResult *result);

// Smallest constraint margin in distance units; NaN on a null handle or
// when the scenario produced no constraints.
//
// # Safety
// `result` must be null or a live result handle.
double stldec_result_min_margin(const StldecResult *result);

// Number of decomposed multi-hop tasks, or a negative error code.
//
// # Safety
// `result` must be null or a live result handle.
int32_t stldec_result_task_count(const StldecResult *result);

// Machine-readable JSON report. Free with [`stldec_string_free`].
//
// # Safety
// `result` must be null or a live result handle.
char *stldec_result_report_json(const StldecResult *result);

// Human-readable report table. Free with [`stldec_string_free`].
//
// # Safety
// `result` must be null or a live result handle.
char *stldec_result_report_table(const StldecResult *result);

// Evaluate trajectory robustness against the original tasks
// (`STLDEC_TASKS_ORIGINAL`) or against a fresh decomposition's
// single-edge tasks (`STLDEC_TASKS_REWRITTEN`).
//
// `trajectory_csv` uses the header `t,x1_1,...,x1_n,...,xN_n`. On success
// writes the robustness value to `out_robustness` and returns
// `STLDEC_OK`.
//
// # Safety
// `scenario` must be null or a live scenario handle; `trajectory_csv`
// must be null or nul-terminated; `out_robustness` must be null or
// writable.
int32_t stldec_robustness(const StldecScenario *scenario,
                          const char *trajectory_csv,
                          int32_t which,
                          double *out_robustness);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string pointer returned by this library that has
// not been freed.
void stldec_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STL_DECOMP_H */

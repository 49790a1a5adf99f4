#ifndef MIS_PORTFOLIO_H
#define MIS_PORTFOLIO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MpStatus {
  MP_STATUS_OK = 0,
  MP_STATUS_NULL_POINTER = 1,
  MP_STATUS_INVALID_ARGUMENT = 2,
  MP_STATUS_IO = 3,
  MP_STATUS_PARSE = 4,
  MP_STATUS_INSUFFICIENT_DATA = 5,
  MP_STATUS_SIZE_LIMIT = 6,
  MP_STATUS_TIMEOUT = 7,
  MP_STATUS_NO_FEASIBLE_SOLUTION = 8,
  MP_STATUS_NUMERICAL = 9,
  MP_STATUS_DATA = 10,
  MP_STATUS_PANIC = 11,
} MpStatus;

typedef enum MpSolver {
  MP_SOLVER_SB = 0,
  MP_SOLVER_GREEDY = 1,
  MP_SOLVER_EXACT = 2,
} MpSolver;

typedef enum MpWeighting {
  MP_WEIGHTING_EW = 0,
  MP_WEIGHTING_IVW = 1,
} MpWeighting;

/**
 * Market graph handle.
 */
typedef struct MpGraph MpGraph;

/**
 * Price panel handle.
 */
typedef struct MpPanel MpPanel;

/**
 * Backtest report handle.
 */
typedef struct MpReport MpReport;

/**
 * Independent-set handle.
 */
typedef struct MpSolution MpSolution;

/**
 * SB parameters. `coupling_scale <= 0` selects the default.
 */
typedef struct MpSbParams {
  size_t n_steps;
  double dt;
  double eta;
  double alpha0;
  double coupling_scale;
  size_t restarts;
  uint64_t seed;
} MpSbParams;

/**
 * Backtest settings; the SB dynamics use their defaults.
 */
typedef struct MpBacktestConfig {
  double theta;
  enum MpWeighting weighting;
  double cost_rate;
  size_t lookback_days;
  enum MpSolver solver;
  size_t restarts;
  uint64_t seed;
  bool repair;
} MpBacktestConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mp_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void mp_string_free(char *s);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MpStatus mp_panel_load(const char *path, struct MpPanel **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum MpStatus mp_panel_synth(size_t n_stocks,
                             size_t n_days,
                             size_t n_factors,
                             uint64_t seed,
                             struct MpPanel **out);

/**
 * # Safety
 * `panel` must be a live handle or NULL.
 */
size_t mp_panel_n_tickers(const struct MpPanel *panel);

/**
 * # Safety
 * `panel` must be a live handle or NULL.
 */
size_t mp_panel_n_dates(const struct MpPanel *panel);

/**
 * # Safety
 * `panel` must come from this library and not be freed twice.
 */
void mp_panel_free(struct MpPanel *panel);

/**
 * Graph over the trailing `window_days` returns of `panel`; `window_days = 0`
 * uses the default lookback.
 *
 * # Safety
 * `panel` must be a live handle; `out` must be writable.
 */
enum MpStatus mp_graph_build(const struct MpPanel *panel,
                             double theta,
                             size_t window_days,
                             struct MpGraph **out);

/**
 * Graph from `n_edges` pairs stored flat in `edges` (`2 * n_edges` entries).
 *
 * # Safety
 * `edges` must point to `2 * n_edges` values (or be NULL when `n_edges` is 0);
 * `out` must be writable.
 */
enum MpStatus mp_graph_from_edges(size_t n_nodes,
                                  const size_t *edges,
                                  size_t n_edges,
                                  struct MpGraph **out);

/**
 * # Safety
 * `graph` must be a live handle or NULL.
 */
size_t mp_graph_n_nodes(const struct MpGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle or NULL.
 */
size_t mp_graph_n_edges(const struct MpGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
enum MpStatus mp_graph_density(const struct MpGraph *graph, double *out);

/**
 * # Safety
 * `graph` must come from this library and not be freed twice.
 */
void mp_graph_free(struct MpGraph *graph);

struct MpSbParams mp_sb_params_default(void);

/**
 * Solves `graph` for an independent set. `params` is used by the SB solver
 * and may be NULL for defaults.
 *
 * # Safety
 * `graph` must be a live handle, `params` NULL or valid, `out` writable.
 */
enum MpStatus mp_solve(const struct MpGraph *graph,
                       enum MpSolver solver,
                       const struct MpSbParams *params,
                       struct MpSolution **out);

/**
 * # Safety
 * `solution` must be a live handle or NULL.
 */
size_t mp_solution_size(const struct MpSolution *solution);

/**
 * # Safety
 * `solution` must be a live handle or NULL.
 */
bool mp_solution_feasible(const struct MpSolution *solution);

/**
 * Copies up to `capacity` node indices into `buffer` and stores the full
 * count in `written`. A short buffer is not an error; compare the counts.
 *
 * # Safety
 * `buffer` must hold `capacity` values (or be NULL when `capacity` is 0).
 */
enum MpStatus mp_solution_nodes(const struct MpSolution *solution,
                                size_t *buffer,
                                size_t capacity,
                                size_t *written);

/**
 * JSON form of the solution; release with [`mp_string_free`]. NULL on error.
 *
 * # Safety
 * `solution` must be a live handle or NULL.
 */
char *mp_solution_to_json(const struct MpSolution *solution);

/**
 * # Safety
 * `solution` must come from this library and not be freed twice.
 */
void mp_solution_free(struct MpSolution *solution);

struct MpBacktestConfig mp_backtest_config_default(void);

/**
 * # Safety
 * `panel` must be a live handle, `config` valid, `out` writable.
 */
enum MpStatus mp_backtest_run(const struct MpPanel *panel,
                              const struct MpBacktestConfig *config,
                              struct MpReport **out);

/**
 * # Safety
 * `report` must be a live handle or NULL.
 */
size_t mp_report_n_months(const struct MpReport *report);

/**
 * Annualized return, risk and Sharpe ratio. Sharpe markers map to +inf,
 * -inf and NaN. Fails with `MP_STATUS_INSUFFICIENT_DATA` when the report
 * is too short to summarize.
 *
 * # Safety
 * `report` must be a live handle; output pointers may be NULL.
 */
enum MpStatus mp_report_summary(const struct MpReport *report,
                                double *annual_return,
                                double *annual_risk,
                                double *sharpe);

/**
 * Report JSON; release with [`mp_string_free`]. NULL on error.
 *
 * # Safety
 * `report` must be a live handle or NULL.
 */
char *mp_report_to_json(const struct MpReport *report);

/**
 * # Safety
 * `report` must come from this library and not be freed twice.
 */
void mp_report_free(struct MpReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIS_PORTFOLIO_H */

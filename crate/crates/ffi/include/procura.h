#ifndef PROCURA_H
#define PROCURA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

/**
 * Result codes.
 */
typedef enum ProcuraStatus {
  PROCURA_STATUS_OK = 0,
  PROCURA_STATUS_NULL_POINTER = 1,
  PROCURA_STATUS_INVALID_ARGUMENT = 2,
  PROCURA_STATUS_DIMENSION_MISMATCH = 3,
  PROCURA_STATUS_DOMAIN = 4,
  PROCURA_STATUS_UNBOUNDED = 5,
  PROCURA_STATUS_NON_CONVERGENCE = 6,
  PROCURA_STATUS_INFEASIBLE = 7,
  PROCURA_STATUS_BUFFER_TOO_SMALL = 8,
  PROCURA_STATUS_PARSE = 9,
  PROCURA_STATUS_IO = 10,
  PROCURA_STATUS_PANIC = 11,
} ProcuraStatus;

/**
 * Analyzed engine variants.
 */
typedef enum ProcuraVariant {
  PROCURA_VARIANT_SIM = 0,
  PROCURA_VARIANT_SEQ0 = 1,
  PROCURA_VARIANT_SEQ1 = 2,
} ProcuraVariant;

/**
 * Opaque cost function.
 */
typedef struct ProcuraCost ProcuraCost;

/**
 * Opaque arrival instance.
 */
typedef struct ProcuraInstance ProcuraInstance;

/**
 * Opaque online run trace.
 */
typedef struct ProcuraRun ProcuraRun;

/**
 * Opaque surrogate design.
 */
typedef struct ProcuraSurrogate ProcuraSurrogate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *procura_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *procura_version(void);

void procura_string_free(char *s);

/**
 * Parses `{"dimension", "terms", "basis"?}`.
 */
enum ProcuraStatus procura_cost_from_json(const char *json, struct ProcuraCost **out);

void procura_cost_free(struct ProcuraCost *cost);

/**
 * Dimension `D`, or 0 for a null handle.
 */
size_t procura_cost_dimension(const struct ProcuraCost *cost);

enum ProcuraStatus procura_cost_eval(const struct ProcuraCost *cost,
                                     const double *u,
                                     size_t len,
                                     double *out);

/**
 * Writes `D` gradient entries into `out`.
 */
enum ProcuraStatus procura_cost_gradient(const struct ProcuraCost *cost,
                                         const double *u,
                                         size_t len,
                                         double *out,
                                         size_t out_len);

/**
 * Convex conjugate `f*(lambda)` under default solver settings.
 */
enum ProcuraStatus procura_cost_conjugate(const struct ProcuraCost *cost,
                                          const double *lambda,
                                          size_t len,
                                          double *out);

/**
 * Parses `{"D", "T", "valuations"}`.
 */
enum ProcuraStatus procura_instance_from_json(const char *json, struct ProcuraInstance **out);

enum ProcuraStatus procura_instance_to_json(const struct ProcuraInstance *inst, char **out);

void procura_instance_free(struct ProcuraInstance *inst);

size_t procura_instance_horizon(const struct ProcuraInstance *inst);

size_t procura_instance_dimension(const struct ProcuraInstance *inst);

/**
 * Scalar instance `c_t = 2t`; `horizon` must be even.
 */
enum ProcuraStatus procura_instance_adversarial_scalar(size_t horizon,
                                                       struct ProcuraInstance **out);

enum ProcuraStatus procura_instance_adversarial_gradient(const struct ProcuraCost *cost,
                                                         size_t horizon,
                                                         struct ProcuraInstance **out);

enum ProcuraStatus procura_instance_random_linear(size_t horizon,
                                                  size_t dimension,
                                                  double lo,
                                                  double hi,
                                                  uint64_t seed,
                                                  struct ProcuraInstance **out);

enum ProcuraStatus procura_surrogate_identity(const struct ProcuraCost *cost,
                                              struct ProcuraSurrogate **out);

/**
 * Scaled design for the largest degree; `bound` may be null.
 */
enum ProcuraStatus procura_surrogate_poly(const struct ProcuraCost *cost,
                                          struct ProcuraSurrogate **out,
                                          double *bound);

/**
 * Scaled design for the smallest degree.
 */
enum ProcuraStatus procura_surrogate_chan(const struct ProcuraCost *cost,
                                          struct ProcuraSurrogate **out);

/**
 * Weight design by bisection on the grid `{0, step, ..}` up to the variant's
 * region for `horizon`. A NaN `alpha_upper` selects the default. `bound` may
 * be null.
 */
enum ProcuraStatus procura_surrogate_quasiconvex(const struct ProcuraCost *cost,
                                                 enum ProcuraVariant variant,
                                                 size_t horizon,
                                                 double grid_step,
                                                 double epsilon,
                                                 double alpha_upper,
                                                 struct ProcuraSurrogate **out,
                                                 double *bound);

/**
 * Parses `{"base": <cost>, "mode": ...}`.
 */
enum ProcuraStatus procura_surrogate_from_json(const char *json, struct ProcuraSurrogate **out);

enum ProcuraStatus procura_surrogate_to_json(const struct ProcuraSurrogate *surrogate, char **out);

/**
 * The expanded surrogate cost as a new cost handle.
 */
enum ProcuraStatus procura_surrogate_expand(const struct ProcuraSurrogate *surrogate,
                                            struct ProcuraCost **out);

void procura_surrogate_free(struct ProcuraSurrogate *surrogate);

/**
 * Grid ratio `alpha` of the surrogate against its base cost; infinite
 * values are reported as `INFINITY`.
 */
enum ProcuraStatus procura_alpha_ratio(const struct ProcuraSurrogate *surrogate,
                                       enum ProcuraVariant variant,
                                       size_t horizon,
                                       double grid_step,
                                       double *out);

/**
 * Simultaneous engine driven by the surrogate; objective measured with its base cost.
 */
enum ProcuraStatus procura_run_simultaneous(const struct ProcuraInstance *inst,
                                            const struct ProcuraSurrogate *surrogate,
                                            struct ProcuraRun **out);

/**
 * Posted-pricing engine with the same offset in every coordinate.
 */
enum ProcuraStatus procura_run_sequential(const struct ProcuraInstance *inst,
                                          const struct ProcuraSurrogate *surrogate,
                                          double offset,
                                          struct ProcuraRun **out);

void procura_run_free(struct ProcuraRun *run);

/**
 * Number of steps, or 0 for a null handle.
 */
size_t procura_run_horizon(const struct ProcuraRun *run);

/**
 * `sum_t v_t(x_t) - f(sum_t x_t)`; NaN for a null handle.
 */
double procura_run_objective(const struct ProcuraRun *run);

/**
 * Allocation `x_t`, `t` counted from 1.
 */
enum ProcuraStatus procura_run_allocation(const struct ProcuraRun *run,
                                          size_t t,
                                          double *out,
                                          size_t out_len);

/**
 * Price seen at step `t`, counted from 1.
 */
enum ProcuraStatus procura_run_price(const struct ProcuraRun *run,
                                     size_t t,
                                     double *out,
                                     size_t out_len);

/**
 * Per-step table `t, x_*, lambda_*, cumulative_objective` as CSV.
 */
enum ProcuraStatus procura_run_to_csv(const struct ProcuraRun *run, char **out);

/**
 * Offline optimum; when `allocations` is non-null it receives `T * D`
 * values, row-major by step.
 */
enum ProcuraStatus procura_offline(const struct ProcuraInstance *inst,
                                   const struct ProcuraCost *cost,
                                   double *objective,
                                   double *allocations,
                                   size_t allocations_len);

/**
 * Runs an experiment config given as JSON. `report_json` receives the full
 * report; `all_passed` (may be null) whether every strategy passed.
 */
enum ProcuraStatus procura_experiment_run(const char *config_json,
                                          char **report_json,
                                          bool *all_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROCURA_H */

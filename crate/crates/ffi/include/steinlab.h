#ifndef STEINLAB_H
#define STEINLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SteinlabStatus {
  STEINLAB_STATUS_OK = 0,
  STEINLAB_STATUS_INVALID_PARAMS = 1,
  STEINLAB_STATUS_NUMERICAL = 2,
  STEINLAB_STATUS_DIVERGENT = 3,
  STEINLAB_STATUS_NULL_POINTER = 4,
  STEINLAB_STATUS_PANIC = 5,
} SteinlabStatus;

typedef enum SteinlabEstimatorKind {
  STEINLAB_ESTIMATOR_KIND_IDENTITY = 0,
  STEINLAB_ESTIMATOR_KIND_JAMES_STEIN = 1,
  /**
   * Proper Bayes rule `g/(g+1) x`; the scale is the `g` argument.
   */
  STEINLAB_ESTIMATOR_KIND_POINT_PRIOR = 2,
  STEINLAB_ESTIMATOR_KIND_GENERALIZED_BAYES = 3,
  STEINLAB_ESTIMATOR_KIND_IMPROVED_AVERAGE = 4,
  STEINLAB_ESTIMATOR_KIND_IMPROVED_COMPANION = 5,
  STEINLAB_ESTIMATOR_KIND_POSITIVE_PART_AVERAGE = 6,
} SteinlabEstimatorKind;

typedef enum SteinlabAdmissibility {
  STEINLAB_ADMISSIBILITY_INADMISSIBLE = 0,
  STEINLAB_ADMISSIBILITY_ADMISSIBLE = 1,
  STEINLAB_ADMISSIBILITY_ADMISSIBLE_BOUNDARY = 2,
  STEINLAB_ADMISSIBILITY_ADMISSIBLE_BROWN_ONLY = 3,
} SteinlabAdmissibility;

/**
 * Radial shrinkage estimator.
 */
typedef struct SteinlabEstimator SteinlabEstimator;

/**
 * Quadrature-backed marginal evaluator.
 */
typedef struct SteinlabMarginal SteinlabMarginal;

typedef struct SteinlabVerdict {
  int32_t admissibility;
  bool minimax;
  bool integral_diverges;
} SteinlabVerdict;

typedef struct SteinlabRiskPoint {
  double risk;
  double se;
  double mean_sure;
  /**
   * Standard error of the paired difference between loss and SURE.
   */
  double diff_se;
} SteinlabRiskPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *steinlab_last_error(void);

/**
 * Creates a marginal evaluator for `π(g; a, b, c)` in dimension `d`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SteinlabStatus steinlab_marginal_new(uint32_t d,
                                          double a,
                                          double b,
                                          double c,
                                          struct SteinlabMarginal **out);

/**
 * `M_k(w) = ∫ (g+1)^{-d/2-k} exp(-w/(2(g+1))) π(g) dg`.
 *
 * # Safety
 * `m` must come from [`steinlab_marginal_new`]; `out` must be writable.
 */
enum SteinlabStatus steinlab_marginal_eval(const struct SteinlabMarginal *m,
                                           double w,
                                           uint32_t k,
                                           double *out);

/**
 * `t^{d/2-1} m(t)/π(t)`.
 *
 * # Safety
 * As for [`steinlab_marginal_eval`].
 */
enum SteinlabStatus steinlab_marginal_tauberian_ratio(const struct SteinlabMarginal *m,
                                                      double t,
                                                      double *out);

/**
 * # Safety
 * `m` must be NULL or a handle from [`steinlab_marginal_new`] that has not
 * been freed.
 */
void steinlab_marginal_free(struct SteinlabMarginal *m);

/**
 * # Safety
 * `out` must be writable.
 */
enum SteinlabStatus steinlab_classify(uint32_t d,
                                      double a,
                                      double b,
                                      double c,
                                      struct SteinlabVerdict *out);

/**
 * Creates an estimator. `kind` is a [`SteinlabEstimatorKind`] value; `g`
 * is used only by the point-prior kind.
 *
 * # Safety
 * `out` must be writable.
 */
enum SteinlabStatus steinlab_estimator_new(int32_t kind,
                                           uint32_t d,
                                           double a,
                                           double b,
                                           double c,
                                           double g,
                                           struct SteinlabEstimator **out);

/**
 * Shrinkage multiplier `φ(w)` with `δ(x) = φ(‖x‖²) x`.
 *
 * # Safety
 * `e` must come from [`steinlab_estimator_new`]; `out` must be writable.
 */
enum SteinlabStatus steinlab_estimator_multiplier(const struct SteinlabEstimator *e,
                                                  double w,
                                                  double *out);

/**
 * Writes `δ(x)` for the `len`-vector `x` into `out`.
 *
 * # Safety
 * `x` and `out` must each point to `len` doubles; they may alias.
 */
enum SteinlabStatus steinlab_estimator_apply(const struct SteinlabEstimator *e,
                                             const double *x,
                                             size_t len,
                                             double *out);

/**
 * Pointwise SURE at `w`; `at_kink` is set for a positive-part multiplier
 * that is exactly zero.
 *
 * # Safety
 * `e` must come from [`steinlab_estimator_new`]; `out` and `at_kink` must
 * be writable.
 */
enum SteinlabStatus steinlab_estimator_sure(const struct SteinlabEstimator *e,
                                            double w,
                                            double *out,
                                            bool *at_kink);

/**
 * Monte Carlo risk at `‖μ‖ = mu_norm` with `n ≥ 1000` draws.
 *
 * # Safety
 * `e` must come from [`steinlab_estimator_new`]; `out` must be writable.
 */
enum SteinlabStatus steinlab_mc_risk(const struct SteinlabEstimator *e,
                                     double mu_norm,
                                     size_t n,
                                     uint64_t seed,
                                     struct SteinlabRiskPoint *out);

/**
 * # Safety
 * `e` must be NULL or a handle from [`steinlab_estimator_new`] that has not
 * been freed.
 */
void steinlab_estimator_free(struct SteinlabEstimator *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEINLAB_H */

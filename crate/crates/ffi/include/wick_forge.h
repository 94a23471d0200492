#ifndef WICK_FORGE_H
#define WICK_FORGE_H

/* Generated by cbindgen from wick-forge-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum WfStatus {
  WF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  WF_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument was outside its documented domain.
   */
  WF_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A basis index exceeded the coordinate count.
   */
  WF_STATUS_INDEX_RANGE = 3,
  /**
   * A product would exceed the algebra's degree cap.
   */
  WF_STATUS_DEGREE_CAP = 4,
  /**
   * Operands live on different coordinate counts.
   */
  WF_STATUS_MIXED_K = 5,
  /**
   * A spectral rescaling overflowed the double range.
   */
  WF_STATUS_OVERFLOW = 6,
  /**
   * Quadrature refinement failed to converge.
   */
  WF_STATUS_QUADRATURE_STALL = 7,
  /**
   * A time fell outside the cached grid.
   */
  WF_STATUS_GRID_RANGE = 8,
  /**
   * A moment was requested past its blow-up time.
   */
  WF_STATUS_BEYOND_LIFE_TIME = 9,
  /**
   * A cache or serialization payload was rejected.
   */
  WF_STATUS_CACHE_FORMAT = 10,
  /**
   * An I/O or encoding failure.
   */
  WF_STATUS_IO = 11,
  /**
   * The caller-supplied buffer was too small.
   */
  WF_STATUS_BUFFER_TOO_SMALL = 12,
  /**
   * An internal panic was caught at the boundary.
   */
  WF_STATUS_PANIC = 13,
} WfStatus;

/**
 * Opaque handle: product driver with a fixed coordinate count and degree cap.
 */
typedef struct WfAlgebra WfAlgebra;

/**
 * Opaque handle: finite chaos expansion.
 */
typedef struct WfChaos WfChaos;

/**
 * Opaque handle: dense Gram table of pairing integrals on a fixed grid.
 */
typedef struct WfGram WfGram;

/**
 * Flattened blow-up scan. `t_star` is negative when the second-moment
 * threshold is not reached on the scanned grid.
 */
typedef struct WfLifetime {
  double p;
  size_t k;
  /**
   * Existence horizon with the spectral tail included.
   */
  double life_time;
  /**
   * Same horizon from the truncated sum only.
   */
  double life_time_truncated;
  /**
   * Where the scan attained its supremum.
   */
  double sup_argmax;
  double t_star;
  /**
   * Largest Gram eigenvalue at the end of the grid, for context.
   */
  double lambda_max_end;
  /**
   * life_time <= t_star whenever the threshold was reached.
   */
  bool ordering_ok;
} WfLifetime;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying engine as a static NUL-terminated string.
 */
const char *wf_version(void);

/**
 * Copies the message of the most recent failure on this thread into `buf`
 * (NUL-terminated, truncated to fit) and returns the message's full byte
 * length, 0 when the last call on this thread succeeded.
 */
size_t wf_last_error_message(char *buf, size_t cap);

/**
 * Tail-corrected squared norm of the order-(-p) smoothed point mass at `t`,
 * computed from `k` explicit coordinates.
 */
enum WfStatus wf_delta_norm_sq(size_t k, double t, double p, double *out);

/**
 * Existence horizon 1 / (4 sup_t |A^{-p} d_t|^2), the sup scanned on
 * `points` equispaced times in [0, t_scan] with the spectral tail included.
 */
enum WfStatus wf_life_time(size_t k, double p, double t_scan, size_t points, double *out);

/**
 * Builds the dense table of pairing integrals for `k` coordinates on the
 * uniform grid (t_max, dt). On success stores a new handle in `out`.
 */
enum WfStatus wf_gram_build(size_t k,
                            double t_max,
                            double dt,
                            size_t quad_order,
                            struct WfGram **out);

void wf_gram_free(struct WfGram *gram);

/**
 * Coordinate count of the table.
 */
enum WfStatus wf_gram_k(const struct WfGram *gram, size_t *out);

/**
 * Hex digest identifying the table's exact contents. `cap` must be at
 * least 65 (64 hex digits plus the terminating NUL).
 */
enum WfStatus wf_gram_content_hash(const struct WfGram *gram, char *buf, size_t cap);

/**
 * Scans the table's grid for the second-moment blow-up threshold and fills
 * a flattened report.
 */
enum WfStatus wf_lifetime_scan(const struct WfGram *gram, double p, struct WfLifetime *out);

/**
 * Closed-form exponential moment E[exp(2 zeta_t)] at a grid node, valid
 * strictly below the blow-up threshold.
 */
enum WfStatus wf_exp_moment(const struct WfGram *gram, double t, double p, double *out);

/**
 * Closed form for E[f(t) X_t] under linear drift `kappa x`, with `f` given
 * by its `f_len` leading basis coefficients.
 */
enum WfStatus wf_linear_closed_form(const struct WfGram *gram,
                                    double x0,
                                    double p,
                                    double t,
                                    const double *f_coeffs,
                                    size_t f_len,
                                    double kappa,
                                    double *out);

/**
 * Renormalized square of the smoothed noise at time `t`, integrated over
 * [0, t] on the table's grid; stores a new expansion handle in `out`.
 */
enum WfStatus wf_x_process(const struct WfGram *gram, double t, struct WfChaos **out);

/**
 * Constant expansion `c` on `k` coordinates.
 */
enum WfStatus wf_chaos_constant(size_t k, double c, struct WfChaos **out);

/**
 * First-order expansion with the given `len <= k` leading coefficients.
 */
enum WfStatus wf_chaos_first_order(size_t k,
                                   const double *coeffs,
                                   size_t len,
                                   struct WfChaos **out);

enum WfStatus wf_chaos_clone(const struct WfChaos *x, struct WfChaos **out);

void wf_chaos_free(struct WfChaos *x);

/**
 * Coordinate count the expansion lives on.
 */
enum WfStatus wf_chaos_k(const struct WfChaos *x, size_t *out);

/**
 * Number of stored (index, coefficient) terms.
 */
enum WfStatus wf_chaos_len(const struct WfChaos *x, size_t *out);

/**
 * Largest total degree among the stored terms (0 for the zero expansion).
 */
enum WfStatus wf_chaos_max_degree(const struct WfChaos *x, size_t *out);

/**
 * Graded norm with smoothing exponent `q` (negative q weights down high
 * degrees; q = 0 is the plain L2 norm of the coefficients).
 */
enum WfStatus wf_chaos_norm(const struct WfChaos *x, double q, double *out);

enum WfStatus wf_chaos_scale(struct WfChaos *x, double s);

/**
 * In-place sum `x += y`; both operands must share the coordinate count.
 */
enum WfStatus wf_chaos_add_assign(struct WfChaos *x, const struct WfChaos *y);

/**
 * Drops terms with |coefficient| <= eps.
 */
enum WfStatus wf_chaos_prune(struct WfChaos *x, double eps);

/**
 * Product driver for `k` coordinates; results are truncated at total
 * degree `max_degree`.
 */
enum WfStatus wf_algebra_new(size_t k, size_t max_degree, struct WfAlgebra **out);

void wf_algebra_free(struct WfAlgebra *algebra);

/**
 * Pointwise product of two expansions.
 */
enum WfStatus wf_multiply(const struct WfAlgebra *algebra,
                          const struct WfChaos *x,
                          const struct WfChaos *y,
                          struct WfChaos **out);

/**
 * Wick product of two expansions.
 */
enum WfStatus wf_wick(const struct WfAlgebra *algebra,
                      const struct WfChaos *x,
                      const struct WfChaos *y,
                      struct WfChaos **out);

/**
 * Interpolating product: p = 0 is the pointwise product and large p
 * approaches the Wick product.
 */
enum WfStatus wf_star(const struct WfAlgebra *algebra,
                      const struct WfChaos *x,
                      const struct WfChaos *y,
                      double p,
                      struct WfChaos **out);

/**
 * Second-quantized scaling by the spectral weights to the power `-p`.
 */
enum WfStatus wf_gamma(const struct WfAlgebra *algebra,
                       const struct WfChaos *x,
                       double p,
                       struct WfChaos **out);

/**
 * n-fold Wick power of an expansion.
 */
enum WfStatus wf_wick_power(const struct WfAlgebra *algebra,
                            const struct WfChaos *x,
                            size_t n,
                            struct WfChaos **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WICK_FORGE_H */

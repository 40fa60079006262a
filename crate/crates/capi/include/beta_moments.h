/* C interface to the beta-moments library. */

#ifndef BETA_MOMENTS_H
#define BETA_MOMENTS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every entry point.
 */
typedef enum BmStatus {
  BM_STATUS_OK = 0,
  /**
   * Parameter outside the domain of the requested quantity.
   */
  BM_STATUS_DOMAIN = 1,
  /**
   * Evaluation at a pole of a gamma-type factor.
   */
  BM_STATUS_POLE = 2,
  /**
   * Adaptive quadrature failed to reach the requested tolerance.
   */
  BM_STATUS_NON_CONVERGENCE = 3,
  /**
   * Structurally invalid argument (bad length, non-positive beta, ...).
   */
  BM_STATUS_INVALID_ARGUMENT = 4,
  /**
   * A required pointer was null.
   */
  BM_STATUS_NULL_POINTER = 5,
  /**
   * Internal panic caught at the boundary.
   */
  BM_STATUS_INTERNAL = 6,
} BmStatus;

/**
 * Normalization convention for the Laguerre-type moment formulas.
 */
typedef enum BmNormalization {
  /**
   * Literal transcription of the published formula.
   */
  BM_NORMALIZATION_AS_PRINTED = 0,
  /**
   * Convention reconciled against the density (quadrature-checked).
   */
  BM_NORMALIZATION_CALIBRATED = 1,
} BmNormalization;

/**
 * Opaque handle owning a tridiagonal-model sampler and its RNG state.
 */
typedef struct BmSampler BmSampler;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message of the most recent error on this thread into `buf`
 * (NUL-terminated, truncated to `len` bytes) and returns the full message
 * length in bytes, excluding the NUL. `buf` may be null to query the length.
 */
uintptr_t bm_last_error_message(char *buf, uintptr_t len);

/**
 * Limiting moment E[X_{beta,tau}^{2h}] of the centered microscopic overlap.
 */
enum BmStatus bm_x_moment_limit(double beta, double tau, uintptr_t h, double *out);

/**
 * Closed form beta / ((2 tau - 1)(4 tau + beta)) for the h = 1 case.
 */
enum BmStatus bm_x_second_moment_closed(double beta, double tau, double *out);

/**
 * Leading-order constant f0(beta, delta, s) of the joint moment asymptotics.
 */
enum BmStatus bm_f0_limit(double beta, double delta_re, double delta_im, double s, double *out);

/**
 * Finite-N moment ratio for the circular Jacobi ensemble via Morris integrals.
 */
enum BmStatus bm_cjbe_finite_f0(uintptr_t n,
                                double beta,
                                double delta_re,
                                double delta_im,
                                double s,
                                double *out);

/**
 * Joint moment limit at delta = 0 and integer s, for half-integer-avoiding h.
 */
enum BmStatus bm_forrester_joint_moment(double beta, uintptr_t s, double h, double *out);

/**
 * r-th moment of the limiting row-sum variable Y_beta(nu).
 */
enum BmStatus bm_y_moment_limit(double beta,
                                double nu,
                                uintptr_t r,
                                enum BmNormalization mode,
                                double *out);

/**
 * Finite-N inverse-Laguerre moment of (sum x)^r.
 */
enum BmStatus bm_laguerre_finite_moment(double beta,
                                        double nu,
                                        uintptr_t n,
                                        uintptr_t r,
                                        enum BmNormalization mode,
                                        double *out);

/**
 * Finite-N Jacobi-type inverse moment (literal published evaluation).
 */
enum BmStatus bm_jacobi_inverse_moment(double beta,
                                       double nu,
                                       double mu,
                                       uintptr_t n,
                                       uintptr_t r,
                                       double *out);

/**
 * Binomial alternating sum turning the finite moments
 * E_k[(sum x)^{2h}], k = 1..2h (passed in that order), into the centered
 * limit moment E[X^{2h}].
 *
 * # Safety
 * `finite_moments` must point to `len` readable doubles.
 */
enum BmStatus bm_moments_connection(double beta,
                                    double tau,
                                    uintptr_t h,
                                    const double *finite_moments,
                                    uintptr_t len,
                                    double *out);

/**
 * Creates a Laguerre sampler (weight x^nu e^{-x}) with a seeded RNG.
 */
enum BmStatus bm_sampler_new_laguerre(uintptr_t n,
                                      double beta,
                                      double nu,
                                      uint64_t seed,
                                      struct BmSampler **out);

/**
 * Creates an inverse-Laguerre sampler (image of Laguerre under x -> 2/x).
 */
enum BmStatus bm_sampler_new_inverse_laguerre(uintptr_t n,
                                              double beta,
                                              double nu,
                                              uint64_t seed,
                                              struct BmSampler **out);

/**
 * Number of particles in one draw from this sampler.
 */
uintptr_t bm_sampler_dim(const struct BmSampler *sampler);

/**
 * Draws one ordered configuration into `out`, which must hold
 * `bm_sampler_dim` doubles; `len` is checked against that.
 *
 * # Safety
 * `sampler` must come from a `bm_sampler_new_*` call and `out` must point to
 * `len` writable doubles.
 */
enum BmStatus bm_sampler_draw(struct BmSampler *sampler, double *out, uintptr_t len);

/**
 * Releases a sampler handle. A null pointer is a no-op.
 *
 * # Safety
 * `sampler` must come from a `bm_sampler_new_*` call and must not be used
 * afterwards.
 */
void bm_sampler_free(struct BmSampler *sampler);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BETA_MOMENTS_H */

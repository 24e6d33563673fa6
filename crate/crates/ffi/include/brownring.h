#ifndef BROWNRING_H
#define BROWNRING_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BrStatus {
  BR_STATUS_OK = 0,
  BR_STATUS_NULL_POINTER = 1,
  BR_STATUS_INVALID_ARGUMENT = 2,
  BR_STATUS_NUMERICAL_FAILURE = 3,
  BR_STATUS_PANIC = 4,
} BrStatus;

/**
 * Opaque Stieltjes evaluator.
 */
typedef struct BrEvaluator BrEvaluator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *br_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *br_version(void);

/**
 * Evaluator of the symmetrized singular-value law of `u_1 + ... + u_d - v`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one pointer.
 */
enum BrStatus br_evaluator_theta(size_t d, double v_re, double v_im, struct BrEvaluator **out);

/**
 * New evaluator for `g` convolved with `(delta_rho + delta_{-rho}) / 2`.
 * `g` is not consumed.
 *
 * # Safety
 * `g` must come from this library and not be freed; `out` must be writable.
 */
enum BrStatus br_evaluator_convolve(const struct BrEvaluator *g,
                                    double rho,
                                    struct BrEvaluator **out);

/**
 * `G(z)` for `Im z > 0`.
 *
 * # Safety
 * `g` must be a live evaluator; `re`, `im` must be writable.
 */
enum BrStatus br_evaluator_eval(const struct BrEvaluator *g,
                                double z_re,
                                double z_im,
                                double *re,
                                double *im);

/**
 * Density on `grid[0..len]` by Stieltjes inversion at height `eta`. Writes
 * `len` values to `density` and the renormalization factor to
 * `renormalization` (may be null).
 *
 * # Safety
 * `grid` and `density` must point to `len` doubles; `g` must be live.
 */
enum BrStatus br_evaluator_invert(const struct BrEvaluator *g,
                                  const double *grid,
                                  size_t len,
                                  double eta,
                                  bool strict,
                                  double *density,
                                  double *renormalization);

/**
 * Releases an evaluator. Null is ignored.
 *
 * # Safety
 * `g` must be null or a pointer obtained from this library, freed once.
 */
void br_evaluator_free(struct BrEvaluator *g);

/**
 * Draws `S = U_1 + ... + U_{d'} + O_{d'+1} + ... + O_d` into `out`
 * (`2 n^2` doubles).
 *
 * # Safety
 * `out` must point to `2 n^2` writable doubles.
 */
enum BrStatus br_sample_sum(size_t n, size_t d, size_t d_prime, uint64_t seed, double *out);

/**
 * Singular values in descending order; writes `min(rows, cols)` doubles.
 *
 * # Safety
 * `data` must hold `2 rows cols` doubles and `out` `min(rows, cols)`.
 */
enum BrStatus br_singular_values(size_t rows, size_t cols, const double *data, double *out);

/**
 * Eigenvalues of a square matrix as `n` interleaved `(re, im)` pairs.
 *
 * # Safety
 * `data` must hold `2 n^2` doubles and `out` `2 n`.
 */
enum BrStatus br_general_eigenvalues(size_t n, const double *data, double *out);

/**
 * Brown density of a sum of `d >= 2` free Haar unitaries at `v`.
 *
 * # Safety
 * `out` must be writable.
 */
enum BrStatus br_brown_density(size_t d, double v_re, double v_im, double *out);

/**
 * `int log|x| dTheta^{d,v}` for `|v| = r`.
 *
 * # Safety
 * `out` must be writable.
 */
enum BrStatus br_log_potential(size_t d, double r, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BROWNRING_H */

#ifndef COVLAB_H
#define COVLAB_H

/* Generated by cbindgen from the covlab-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Call outcome. Zero is success; anything else leaves an explanation in
// [`covlab_last_error_message`].
typedef enum CovlabStatus {
  COVLAB_STATUS_OK = 0,
  // A required pointer argument was null.
  COVLAB_STATUS_NULL_ARGUMENT = 1,
  // An argument failed validation (dimension, domain, parse).
  COVLAB_STATUS_INVALID_ARGUMENT = 2,
  // A matrix that must be symmetric positive definite is not.
  COVLAB_STATUS_NOT_POSITIVE_DEFINITE = 3,
  // The requested combination exists but has no defined value here.
  COVLAB_STATUS_UNSUPPORTED = 4,
  // The computation started but could not finish (non-convergence,
  // exhausted sampling, non-finite intermediate).
  COVLAB_STATUS_NUMERICAL_FAILURE = 5,
  // An output buffer is shorter than the result.
  COVLAB_STATUS_BUFFER_TOO_SMALL = 6,
  // An internal invariant was violated; the library state is still
  // sound but the call produced nothing.
  COVLAB_STATUS_PANIC = 7,
} CovlabStatus;

// Loss families evaluable through [`covlab_loss_evaluate`] and
// [`covlab_exact_prisk`].
typedef enum CovlabLossFamily {
  // Largest |eigenvalue| of the difference, to the requested power.
  COVLAB_LOSS_FAMILY_SQ_SPECTRAL = 0,
  // Entrywise L2 norm of the difference, to the requested power.
  COVLAB_LOSS_FAMILY_SQ_FROBENIUS = 1,
  // Squared difference of log-determinants.
  COVLAB_LOSS_FAMILY_SQ_LOG_DET = 2,
  // Spectral loss of the inverses, to the requested power.
  COVLAB_LOSS_FAMILY_SQ_SPECTRAL_PRECISION = 3,
  // Bregman divergence generated by the squared-Euclid potential.
  COVLAB_LOSS_FAMILY_BREGMAN_SQ_EUCLID = 4,
  // Bregman divergence generated by the von Neumann entropy.
  COVLAB_LOSS_FAMILY_BREGMAN_VON_NEUMANN = 5,
  // Bregman divergence generated by Stein's potential (KL geometry).
  COVLAB_LOSS_FAMILY_BREGMAN_STEIN = 6,
} CovlabLossFamily;

// Opaque symmetric-positive-definite matrix handle.
typedef struct CovlabSpd CovlabSpd;

// Opaque deterministic random stream handle.
typedef struct CovlabStream CovlabStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version of the library as a static C string.
const char *covlab_version(void);

// Stable name of a status code, as a static C string.
const char *covlab_status_name(enum CovlabStatus status);

// Message of the most recent failing call on the current thread, empty
// until something fails. The pointer stays valid until this thread's
// next failing covlab call.
const char *covlab_last_error_message(void);

// Builds an SPD matrix handle from a row-major `dim × dim` buffer.
//
// # Safety
// `entries` must point to at least `dim * dim` readable doubles and
// `out` to a writable pointer slot. On success `*out` owns the handle.
enum CovlabStatus covlab_spd_new(size_t dim, const double *entries, struct CovlabSpd **out);

// Builds the `dim × dim` identity matrix handle.
//
// # Safety
// `out` must point to a writable pointer slot; on success `*out` owns
// the handle.
enum CovlabStatus covlab_spd_identity(size_t dim, struct CovlabSpd **out);

// Releases a matrix handle. Null is a no-op.
//
// # Safety
// `m` must be a handle produced by this library that has not been freed.
void covlab_spd_free(struct CovlabSpd *m);

// Dimension of a matrix handle; 0 for null.
//
// # Safety
// `m` must be null or a live handle produced by this library.
size_t covlab_spd_dim(const struct CovlabSpd *m);

// Copies the matrix entries row-major into `buf`.
//
// # Safety
// `buf` must point to at least `len` writable doubles; `len` must be at
// least `dim * dim`.
enum CovlabStatus covlab_spd_entries(const struct CovlabSpd *m, double *buf, size_t len);

// Log-determinant of an SPD handle.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum CovlabStatus covlab_spd_log_det(const struct CovlabSpd *m, double *out);

// Creates a deterministic random stream for `(base_seed, tag, index)`;
// the same triple always reproduces the same draws.
//
// # Safety
// `out` must point to a writable pointer slot. On success `*out` owns
// the handle; release it with [`covlab_stream_free`].
enum CovlabStatus covlab_stream_new(uint64_t base_seed,
                                    uint64_t tag,
                                    uint64_t index,
                                    struct CovlabStream **out);

// Releases a stream handle. Null is a no-op.
//
// # Safety
// `s` must be a handle produced by this library that has not been freed.
void covlab_stream_free(struct CovlabStream *s);

// Draws a Wishart matrix with the given degrees of freedom and scale
// (mean = df · scale), advancing the stream.
//
// # Safety
// `stream` and `scale` must be live handles; `out` must be writable and
// on success owns a new matrix handle.
enum CovlabStatus covlab_sample_wishart(struct CovlabStream *stream,
                                        double df,
                                        const struct CovlabSpd *scale,
                                        struct CovlabSpd **out);

// Draws an inverse-Wishart matrix (proper parameters required),
// advancing the stream.
//
// # Safety
// `stream` and `scale` must be live handles; `out` must be writable and
// on success owns a new matrix handle.
enum CovlabStatus covlab_sample_inverse_wishart(struct CovlabStream *stream,
                                                double df,
                                                const struct CovlabSpd *scale,
                                                struct CovlabSpd **out);

// Fills `buf` with `n` rows of zero-mean Gaussian data with covariance
// `sigma`, row-major `n × dim`, advancing the stream.
//
// # Safety
// `stream` and `sigma` must be live handles; `buf` must point to at
// least `len` writable doubles with `len ≥ n * dim`.
enum CovlabStatus covlab_sample_gaussian_data(struct CovlabStream *stream,
                                              const struct CovlabSpd *sigma,
                                              size_t n,
                                              double *buf,
                                              size_t len);

// Evaluates a loss `d(a, b)` between two SPD matrices.
//
// `power` must be 1 or 2 and applies only to the norm-based families;
// pass 2 for the others. `scale` multiplies the result.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum CovlabStatus covlab_loss_evaluate(enum CovlabLossFamily family,
                                       uint32_t power,
                                       double scale,
                                       const struct CovlabSpd *a,
                                       const struct CovlabSpd *b,
                                       double *out);

// Posterior mean of the covariance under an inverse-Wishart prior
// `IW(prior_df, prior_scale)` after `n` observations with sample
// covariance `sample_cov`. A null `prior_scale` means the zero matrix.
//
// # Safety
// `sample_cov` must be a live handle and `prior_scale` null or live;
// `out` must be writable and on success owns a new matrix handle.
enum CovlabStatus covlab_posterior_mean(double prior_df,
                                        const struct CovlabSpd *prior_scale,
                                        size_t n,
                                        const struct CovlabSpd *sample_cov,
                                        struct CovlabSpd **out);

// Closed-form replicate-averaged posterior risk at the given truth for
// the squared Frobenius and squared log-determinant families. A null
// `prior_scale` means the zero matrix (required for the log-det form).
//
// # Safety
// `truth` must be a live handle and `prior_scale` null or live; `out`
// must be writable.
enum CovlabStatus covlab_exact_prisk(enum CovlabLossFamily family,
                                     uint32_t power,
                                     double scale,
                                     const struct CovlabSpd *truth,
                                     size_t n,
                                     double prior_df,
                                     const struct CovlabSpd *prior_scale,
                                     double *out);

// Exact affinity statistic ξ of the sign-hypercube mixture.
//
// # Safety
// `out` must be writable.
enum CovlabStatus covlab_xi_exact(size_t p, size_t n, double eps, double *out);

// Spectral-norm minimax lower bound over the bounded-eigenvalue class.
//
// # Safety
// `out` must be writable.
enum CovlabStatus covlab_spectral_lower_bound(size_t p,
                                              size_t n,
                                              double tau1,
                                              double tau2,
                                              double c,
                                              double *out);

// Assouad hypercube lower bound for the squared Frobenius risk.
//
// # Safety
// `out` must be writable.
enum CovlabStatus covlab_assouad_frobenius_bound(size_t p,
                                                 size_t n,
                                                 double tau,
                                                 double c1,
                                                 double *out);

// Runs a named self-verification suite (or "all") with the given seed
// and reports how many checks failed. Returns Ok even when checks fail;
// inspect `*out_failed`.
//
// # Safety
// `suite` must be a NUL-terminated string; `out_failed` must be
// writable.
enum CovlabStatus covlab_verify(const char *suite, uint64_t seed, size_t *out_failed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COVLAB_H */

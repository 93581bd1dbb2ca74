#ifndef CGGM_H
#define CGGM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible call.
typedef enum CggmStatus {
  CGGM_STATUS_OK = 0,
  CGGM_STATUS_NULL_POINTER = 1,
  CGGM_STATUS_INVALID_ARGUMENT = 2,
  CGGM_STATUS_DIMENSION_MISMATCH = 3,
  CGGM_STATUS_NOT_POSITIVE_DEFINITE = 4,
  CGGM_STATUS_SINGULAR_INPUT = 5,
  CGGM_STATUS_NOT_CONVERGED = 6,
  CGGM_STATUS_DEGENERATE_DATA = 7,
  CGGM_STATUS_TOO_FEW_SAMPLES = 8,
  CGGM_STATUS_NON_FINITE_INPUT = 9,
  CGGM_STATUS_BUFFER_TOO_SMALL = 10,
  CGGM_STATUS_INTERNAL = 98,
  CGGM_STATUS_PANIC = 99,
} CggmStatus;

// Which matrix a result holds.
typedef enum CggmEstimateKind {
  CGGM_ESTIMATE_KIND_PRECISION = 0,
  CGGM_ESTIMATE_KIND_COVARIANCE = 1,
} CggmEstimateKind;

// Opaque symmetric matrix.
typedef struct CggmMatrix CggmMatrix;

// Opaque solver result.
typedef struct CggmResult CggmResult;

// Solver tuning; obtain defaults from [`cggm_solver_config_default`].
typedef struct CggmSolverConfig {
  double lambda;
  size_t max_outer_iters;
  double tol;
  double delta;
  double step_shrink;
} CggmSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Human-readable name of a status code, or "unknown status". The string
// is static. Takes a plain integer so any value is safe to pass.
const char *cggm_status_name(int32_t status);

// Message of the last failed call on this thread, or null if none.
// Valid until the next failing call on the same thread.
const char *cggm_last_error_message(void);

struct CggmSolverConfig cggm_solver_config_default(void);

// Builds a `p x p` matrix from row-major `data`. The two triangles are
// averaged.
//
// # Safety
// `data` must be readable for `p * p` doubles; `out` must be writable.
enum CggmStatus cggm_matrix_new(size_t p, const double *data, struct CggmMatrix **out);

// # Safety
// `m` must be null or a handle from this library that was not freed.
void cggm_matrix_free(struct CggmMatrix *m);

// Dimension of `m`, or 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t cggm_matrix_dim(const struct CggmMatrix *m);

// # Safety
// `m` must be a live handle and `out` writable.
enum CggmStatus cggm_matrix_get(const struct CggmMatrix *m, size_t i, size_t j, double *out);

// Copies `m` row-major into `buf`, which must hold `dim * dim` doubles.
//
// # Safety
// `m` must be a live handle and `buf` writable for `len` doubles.
enum CggmStatus cggm_matrix_copy(const struct CggmMatrix *m, double *buf, size_t len);

// Graphical lasso on covariance `s`.
//
// # Safety
// `s` and `cfg` must be live; `out` writable.
enum CggmStatus cggm_glasso(const struct CggmMatrix *s,
                            const struct CggmSolverConfig *cfg,
                            struct CggmResult **out);

// Sparse covariance (SPCOV) on covariance `s`.
//
// # Safety
// `s` and `cfg` must be live; `out` writable.
enum CggmStatus cggm_spcov(const struct CggmMatrix *s,
                           const struct CggmSolverConfig *cfg,
                           struct CggmResult **out);

// Ledoit-Wolf shrinkage of an `n x p` row-major sample matrix.
//
// # Safety
// `data` must be readable for `n * p` doubles; `out` writable.
enum CggmStatus cggm_ledoit_wolf(const double *data, size_t n, size_t p, struct CggmResult **out);

// # Safety
// `r` must be null or a handle from this library that was not freed.
void cggm_result_free(struct CggmResult *r);

// New matrix handle holding a copy of the estimate.
//
// # Safety
// `r` must be live; `out` writable.
enum CggmStatus cggm_result_estimate(const struct CggmResult *r, struct CggmMatrix **out);

// New matrix handle holding the covariance-scale estimate.
//
// # Safety
// `r` must be live; `out` writable.
enum CggmStatus cggm_result_covariance(const struct CggmResult *r, struct CggmMatrix **out);

// # Safety
// `r` must be live; `kind` writable.
enum CggmStatus cggm_result_kind(const struct CggmResult *r, enum CggmEstimateKind *kind);

// Summary numbers of a result. Any output pointer may be null.
// `shrinkage` is NaN for the penalized solvers.
//
// # Safety
// `r` must be live; non-null outputs must be writable.
enum CggmStatus cggm_result_summary(const struct CggmResult *r,
                                    double *objective,
                                    size_t *iterations,
                                    bool *converged,
                                    double *shrinkage);

// Copula transform of `n` samples into `out`.
//
// # Safety
// `x` must be readable and `out` writable for `n` doubles.
enum CggmStatus cggm_to_gaussian(const double *x, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CGGM_H */

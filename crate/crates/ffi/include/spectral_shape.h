#ifndef SPECTRAL_SHAPE_H
#define SPECTRAL_SHAPE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>
#include <stddef.h>

// Result codes. Zero is success.
typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_UNSUPPORTED = 3,
  SS_STATUS_SOLVER_FAILURE = 4,
  SS_STATUS_IO = 5,
  SS_STATUS_PARSE = 6,
  SS_STATUS_PANIC = 7,
} SsStatus;

// Opaque domain handle.
typedef struct SsDomain SsDomain;

// Discretization settings; get defaults from `ss_solver_options_default`.
typedef struct SsSolverOptions {
  size_t levels;
  size_t max_iter;
  double tol;
  size_t coarse_cells;
  size_t radial_points;
} SsSolverOptions;

// A computed value with its error bound.
typedef struct SsEstimate {
  double value;
  double error;
} SsEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string. The
// pointer stays valid until the next failing call on the same thread.
const char *ss_last_error(void);

struct SsSolverOptions ss_solver_options_default(void);

// `pi_p`; NaN for `p < 1`.
double ss_pi_p(double p);

// Builds a domain from an inline spec such as `"square"` or `"ball:3"`,
// or from a file path.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` valid for writes.
enum SsStatus ss_domain_from_spec(const char *spec, struct SsDomain **out);

// Convex polygon from `n` interleaved `x, y` pairs, counterclockwise.
//
// # Safety
// `xy` must point to `2 n` doubles and `out` be valid for writes.
enum SsStatus ss_domain_polygon(const double *xy, size_t n, struct SsDomain **out);

// Releases a handle; null is ignored.
//
// # Safety
// `d` must come from `ss_domain_*` and not be used afterwards.
void ss_domain_free(struct SsDomain *d);

// Inradius of a domain.
//
// # Safety
// `d` must be a live handle and `out` valid for writes.
enum SsStatus ss_inradius(const struct SsDomain *d, double *out);

// Principal eigenvalue `lambda_p` (finite `p > 1`). `opts` may be null.
//
// # Safety
// `d` must be a live handle, `opts` null or valid, `out` valid for writes.
enum SsStatus ss_eigenvalue(const struct SsDomain *d,
                            double p,
                            const struct SsSolverOptions *opts,
                            struct SsEstimate *out);

// Cheeger constant. `opts` may be null.
//
// # Safety
// `d` must be a live handle, `opts` null or valid, `out` valid for writes.
enum SsStatus ss_cheeger(const struct SsDomain *d,
                         const struct SsSolverOptions *opts,
                         struct SsEstimate *out);

// `F_{p,q} = Lambda_p / Lambda_q` for `q < p`. `opts` may be null.
//
// # Safety
// `d` must be a live handle, `opts` null or valid, `out` valid for writes.
enum SsStatus ss_ratio(const struct SsDomain *d,
                       double p,
                       double q,
                       const struct SsSolverOptions *opts,
                       struct SsEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECTRAL_SHAPE_H */

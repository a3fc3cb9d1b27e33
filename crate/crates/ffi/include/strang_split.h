#ifndef STRANG_SPLIT_H
#define STRANG_SPLIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SsKdvInitial {
  SS_KDV_INITIAL_SOLITON = 0,
  SS_KDV_INITIAL_SCHWARTZIAN = 1,
} SsKdvInitial;

typedef enum SsNorm {
  SS_NORM_INFINITY = 0,
  SS_NORM_L2 = 1,
} SsNorm;

typedef enum SsSchemeKind {
  SS_SCHEME_KIND_LIE = 0,
  SS_SCHEME_KIND_STRANG = 1,
  SS_SCHEME_KIND_ITERATED_STRANG = 2,
  SS_SCHEME_KIND_TRIPLE_JUMP = 3,
  SS_SCHEME_KIND_ITERATED_TRIPLE_JUMP = 4,
} SsSchemeKind;

// Result codes of every fallible function.
typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_NON_FINITE = 3,
  SS_STATUS_UNSTABLE = 4,
  SS_STATUS_DIVERGENCE = 5,
  SS_STATUS_FLOW_FAILURE = 6,
  SS_STATUS_REFERENCE = 7,
  SS_STATUS_IO = 8,
  SS_STATUS_BUFFER_TOO_SMALL = 9,
  SS_STATUS_PANIC = 10,
} SsStatus;

// Opaque problem handle.
typedef struct SsProblem SsProblem;

// Opaque scheme handle.
typedef struct SsScheme SsScheme;

// Opaque state handle.
typedef struct SsState SsState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates the 2-D Brusselator on `[0,1)^2` with `n` points per dimension.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SsStatus ss_brusselator_new(size_t n,
                                 double alpha,
                                 double beta,
                                 double gamma,
                                 double delta,
                                 struct SsProblem **out);

// Creates a KdV problem on the default domain of the chosen initial value.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SsStatus ss_kdv_new(enum SsKdvInitial initial,
                         size_t n,
                         double inner_tol,
                         struct SsProblem **out);

// Creates the scalar `u' = u^2` test problem.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SsStatus ss_toy_new(struct SsProblem **out);

// # Safety
// `problem` must be null or a handle from an `ss_*_new` problem constructor
// that has not been freed.
void ss_problem_free(struct SsProblem *problem);

// Copies the problem's default initial value into a new state handle.
//
// # Safety
// `problem` must be a live problem handle and `out` writable.
enum SsStatus ss_problem_initial_state(const struct SsProblem *problem, struct SsState **out);

// Builds a scheme. `iterations` applies to the iterated variants and
// `complex_coefficients` to the triple jumps.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SsStatus ss_scheme_new(enum SsSchemeKind kind,
                            size_t iterations,
                            bool complex_coefficients,
                            double inner_tol,
                            struct SsScheme **out);

// # Safety
// `scheme` must be null or a live handle from [`ss_scheme_new`].
void ss_scheme_free(struct SsScheme *scheme);

// Integrates `state` to `t_final` with step `tau` into a new state handle.
//
// # Safety
// All handles must be live and `out` writable.
enum SsStatus ss_integrate(const struct SsProblem *problem,
                           const struct SsScheme *scheme,
                           const struct SsState *state,
                           double tau,
                           double t_final,
                           struct SsState **out);

// Number of complex entries (components times grid points).
//
// # Safety
// `state` must be null or a live state handle; null yields 0.
size_t ss_state_len(const struct SsState *state);

// Copies real and imaginary parts into caller buffers of length `len`.
// Data is component-major with the x index fastest.
//
// # Safety
// `re` and `im` must each point to `len` writable doubles.
enum SsStatus ss_state_copy(const struct SsState *state, double *re, double *im, size_t len);

// # Safety
// `state` must be null or a live state handle.
void ss_state_free(struct SsState *state);

// Discrete norm of `a - b`.
//
// # Safety
// `a`, `b` must be live state handles and `out` a writable double.
enum SsStatus ss_state_distance(const struct SsState *a,
                                const struct SsState *b,
                                enum SsNorm norm,
                                double *out);

// `φ_k(z)` for `z = re + i·im`.
//
// # Safety
// `out_re` and `out_im` must be writable doubles.
enum SsStatus ss_phi(uint32_t k, double re, double im, double *out_re, double *out_im);

// Triple-jump coefficients for an order-`p` base method.
//
// # Safety
// `out_re` and `out_im` must each point to 3 writable doubles.
enum SsStatus ss_triple_jump_coefficients(uint32_t p,
                                          bool complex_coefficients,
                                          double *out_re,
                                          double *out_im);

// Copies the calling thread's last error message, NUL-terminated and
// truncated to `len` bytes. Returns the full message length (excluding NUL).
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t ss_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRANG_SPLIT_H */

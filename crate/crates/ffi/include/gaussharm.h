#ifndef GAUSSHARM_H
#define GAUSSHARM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Status codes returned by every entry point.
typedef enum GhStatus {
  GH_STATUS_OK = 0,
  GH_STATUS_NULL_POINTER = 1,
  GH_STATUS_INVALID_ARGUMENT = 2,
  GH_STATUS_DIMENSION = 3,
  GH_STATUS_BUDGET_EXHAUSTED = 4,
  GH_STATUS_CONFIG = 5,
  GH_STATUS_IO = 6,
  GH_STATUS_UTF8 = 7,
  GH_STATUS_PANIC = 8,
} GhStatus;

// Opaque handle to a closed-form test function.
typedef struct GhTestFunction GhTestFunction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next call into this library from the same thread.
const char *gh_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *gh_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void gh_string_free(char *s);

// `m(x) = min(1, 1/|x|)`.
//
// # Safety
// `x` must point to `n` doubles; `out` must be writable.
enum GhStatus gh_admissibility_m(const double *x, size_t n, double *out_value);

// γ(B(center, radius)) to absolute tolerance `tol`, with its error bound.
//
// # Safety
// `center` must point to `n` doubles; out-pointers must be writable.
enum GhStatus gh_gamma_ball(const double *center,
                            size_t n,
                            double radius,
                            double tol,
                            double *out_value,
                            double *out_error);

// γ of the box `[lo, hi]`, with its error bound.
//
// # Safety
// `lo` and `hi` must point to `n` doubles; out-pointers must be writable.
enum GhStatus gh_gamma_cube(const double *lo,
                            const double *hi,
                            size_t n,
                            double *out_value,
                            double *out_error);

// Builds a test function from its JSON description, e.g.
// `{"kind":"bump","center":[0.0],"radius":1.0,"height":1.0}`.
//
// # Safety
// `spec_json` must be a NUL-terminated string; `out_handle` must be writable.
enum GhStatus gh_test_function_new(const char *spec_json, struct GhTestFunction **out_handle);

// Dimension of a test function.
//
// # Safety
// `handle` must be a live handle; `out_dim` must be writable.
enum GhStatus gh_test_function_dim(const struct GhTestFunction *handle, size_t *out_dim);

// Releases a test function handle. NULL is ignored.
//
// # Safety
// `handle` must come from [`gh_test_function_new`] and not have been freed.
void gh_test_function_free(struct GhTestFunction *handle);

// `e^{-tL}u(x)` and, if `out_grad` is non-NULL, its gradient (`n` doubles).
// `quad_order` 0 selects the default Gauss–Hermite order.
//
// # Safety
// `handle` must be live; `x` must point to `n` doubles; `out_grad` is NULL or
// points to `n` writable doubles.
enum GhStatus gh_ou_apply(const struct GhTestFunction *handle,
                          double t,
                          const double *x,
                          size_t n,
                          size_t quad_order,
                          double *out_value,
                          double *out_grad);

// Admissible covering of `O = {0 < d(·, F) ≤ a·m}` for the finite set `F`
// given as `count` points of dimension `n`, row-major. The result is JSON.
//
// # Safety
// `points` must point to `count * n` doubles; `out_json` must be writable.
enum GhStatus gh_cover_admissible(const double *points,
                                  size_t count,
                                  size_t n,
                                  double a,
                                  double b,
                                  double c,
                                  uint64_t seed,
                                  char **out_json);

// Runs the verification suite for a JSON configuration (missing keys take
// their defaults; `"{}"` is the default one-dimensional run) and returns the
// report bundle as JSON. `out_all_pass` (nullable) receives 1 if no check failed.
//
// # Safety
// `config_json` must be NUL-terminated; `out_json` must be writable.
enum GhStatus gh_run_suite(const char *config_json, char **out_json, int32_t *out_all_pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUSSHARM_H */

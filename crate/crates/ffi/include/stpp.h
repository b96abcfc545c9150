#ifndef STPP_H
#define STPP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum StppStatus {
  STPP_STATUS_OK = 0,
  STPP_STATUS_NULL_POINTER = 1,
  STPP_STATUS_INVALID_INPUT = 2,
  /*
   A fit or optimizer failed to produce an estimate.
   */
  STPP_STATUS_NUMERICAL_FAILURE = 3,
  STPP_STATUS_IO = 4,
  STPP_STATUS_OUT_OF_RANGE = 5,
  /*
   The output buffer is shorter than required; nothing was written.
   */
  STPP_STATUS_BUFFER_TOO_SMALL = 6,
  STPP_STATUS_PANIC = 7,
} StppStatus;

/*
 Regression method of `stpp_fit_poisson`.
 */
typedef enum StppMethod {
  STPP_METHOD_GLM = 0,
  STPP_METHOD_LSR = 1,
} StppMethod;

typedef struct StppPattern StppPattern;

typedef struct StppPoissonFit StppPoissonFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next `stpp_*` call on the thread.
 */
const char *stpp_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *stpp_version(void);

/*
 Builds a planar pattern from coordinate arrays of length `n`.
 `window` is `x0, x1, y0, y1` and `interval` is `t0, t1`.

 # Safety
 `x`, `y`, `t` must point to `n` readable doubles, `window` to 4,
 `interval` to 2, and `out` must be writable.
 */
enum StppStatus stpp_pattern_new(const double *x,
                                 const double *y,
                                 const double *t,
                                 size_t n,
                                 const double *window,
                                 const double *interval,
                                 struct StppPattern **out);

/*
 Reads a pattern CSV (`x,y,t[,marks]`); the domain is the data range.

 # Safety
 `path` must be a NUL-terminated string and `out` writable.
 */
enum StppStatus stpp_pattern_read_csv(const char *path, struct StppPattern **out);

/*
 # Safety
 `pattern` must be a live handle and `path` a NUL-terminated string.
 */
enum StppStatus stpp_pattern_write_csv(const struct StppPattern *pattern, const char *path);

/*
 Number of events; 0 for a null handle.

 # Safety
 `pattern` must be null or a live handle.
 */
size_t stpp_pattern_len(const struct StppPattern *pattern);

/*
 Copies the coordinates into three buffers of at least `len` doubles.

 # Safety
 `pattern` must be a live handle; each buffer must hold `len` doubles.
 */
enum StppStatus stpp_pattern_coords(const struct StppPattern *pattern,
                                    double *x,
                                    double *y,
                                    double *t,
                                    size_t len);

/*
 # Safety
 `pattern` must be null or a handle not yet freed.
 */
void stpp_pattern_free(struct StppPattern *pattern);

/*
 Homogeneous Poisson pattern with intensity `lambda` on a box.

 # Safety
 `window` must point to 4 doubles, `interval` to 2, and `out` be writable.
 */
enum StppStatus stpp_sim_poisson(double lambda,
                                 const double *window,
                                 const double *interval,
                                 uint64_t seed,
                                 struct StppPattern **out);

/*
 Fits a log-linear Poisson model such as `"~ x + t"`.

 # Safety
 `pattern` must be a live handle, `formula` a NUL-terminated string and
 `out` writable.
 */
enum StppStatus stpp_fit_poisson(const struct StppPattern *pattern,
                                 const char *formula,
                                 enum StppMethod method,
                                 uint64_t seed,
                                 struct StppPoissonFit **out);

/*
 Number of coefficients; 0 for a null handle.

 # Safety
 `fit` must be null or a live handle.
 */
size_t stpp_fit_num_coefficients(const struct StppPoissonFit *fit);

/*
 # Safety
 `fit` must be a live handle and `buf` hold `len` doubles.
 */
enum StppStatus stpp_fit_coefficients(const struct StppPoissonFit *fit, double *buf, size_t len);

/*
 Fitted intensity at each event.

 # Safety
 `fit` must be a live handle and `buf` hold `len` doubles.
 */
enum StppStatus stpp_fit_fitted(const struct StppPoissonFit *fit, double *buf, size_t len);

/*
 Full model as JSON; release with `stpp_string_free`. Null on failure.

 # Safety
 `fit` must be null or a live handle.
 */
char *stpp_fit_to_json(const struct StppPoissonFit *fit);

/*
 # Safety
 `fit` must be null or a handle not yet freed.
 */
void stpp_fit_free(struct StppPoissonFit *fit);

/*
 # Safety
 `s` must be null or a string returned by this library, not yet freed.
 */
void stpp_string_free(char *s);

/*
 Sum of squared differences between the intensity-weighted K-function and
 its Poisson value on the default lag grid.

 # Safety
 `pattern` must be a live handle, `lambda` hold one value per event and
 `sum_sq` be writable.
 */
enum StppStatus stpp_globaldiag(const struct StppPattern *pattern,
                                const double *lambda,
                                size_t n,
                                double *sum_sq);

/*
 Local permutation test of `x` against `z` with the K-function; writes one
 p-value per event of `x`.

 # Safety
 `x` and `z` must be live handles and `p_values` hold `len` doubles.
 */
enum StppStatus stpp_localtest(const struct StppPattern *x,
                               const struct StppPattern *z,
                               size_t k,
                               double alpha,
                               uint64_t seed,
                               double *p_values,
                               size_t len);

/*
 Homogeneous LGCP fit by minimum contrast; writes `sigma, alpha, beta`.
 `family` is `"sep-exp"`, `"gneiting"` or `"iaco-cesare"`.

 # Safety
 `pattern` must be a live handle, `family` a NUL-terminated string and
 `params` hold 3 doubles.
 */
enum StppStatus stpp_fit_lgcp(const struct StppPattern *pattern,
                              const char *family,
                              uint64_t seed,
                              double *params);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STPP_H */

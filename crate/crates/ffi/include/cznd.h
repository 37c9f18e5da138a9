#ifndef CZND_H
#define CZND_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define CZND_MODEL_CON_CZND1 0

#define CZND_MODEL_CON_CZND2 1

#define CZND_MODEL_CON_CZND1_CONJ 2

/*
 Result codes of every fallible function.
 */
typedef enum CzndStatus {
  CZND_STATUS_OK = 0,
  CZND_STATUS_NULL_POINTER = 1,
  CZND_STATUS_INVALID_ARGUMENT = 2,
  CZND_STATUS_PARSE_ERROR = 3,
  CZND_STATUS_IO_ERROR = 4,
  CZND_STATUS_COMPLEX_GAIN_UNSUPPORTED = 5,
  CZND_STATUS_NUMERICAL_FAILURE = 6,
  CZND_STATUS_BUFFER_TOO_SMALL = 7,
  CZND_STATUS_NO_EXACT_SOLUTION = 8,
  CZND_STATUS_PANIC = 9,
} CzndStatus;

/*
 Opaque problem handle.
 */
typedef struct CzndProblem CzndProblem;

/*
 Opaque trajectory handle.
 */
typedef struct CzndTrajectory CzndTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message into `buf` (NUL-terminated,
 truncated to fit) and returns the full message length excluding the NUL.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t cznd_last_error(char *buf, size_t len);

/*
 Builds the built-in 2×2 benchmark problem.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum CzndStatus cznd_problem_example3(struct CzndProblem **out);

/*
 Loads a `.tvp` problem file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CzndStatus cznd_problem_load(const char *path, struct CzndProblem **out);

/*
 Parses `.tvp` text; `name` may be null.

 # Safety
 `text` and a non-null `name` must be NUL-terminated strings; `out` must be writable.
 */
enum CzndStatus cznd_problem_parse(const char *text, const char *name, struct CzndProblem **out);

/*
 Releases a problem handle. Null is ignored.

 # Safety
 `p` must be null or a handle from this library not yet freed.
 */
void cznd_problem_free(struct CzndProblem *p);

/*
 Writes `m` (rows of X) and `n` (columns of X).

 # Safety
 All pointers must be valid.
 */
enum CzndStatus cznd_problem_dims(const struct CzndProblem *p, size_t *m, size_t *n);

/*
 Writes the stacked exact state `[vec(X_r); vec(X_i)]` (length `2mn`) at `tau`.

 # Safety
 `out` must point to `len` writable doubles.
 */
enum CzndStatus cznd_problem_exact_state(const struct CzndProblem *p,
                                         double tau,
                                         double *out,
                                         size_t len);

/*
 Residual of a stacked state: distance to the exact solution when known,
 otherwise the Frobenius norm of `X F - A conj(X) - C`.

 # Safety
 `state` must point to `len` doubles; `out` must be writable.
 */
enum CzndStatus cznd_problem_residual(const struct CzndProblem *p,
                                      double tau,
                                      const double *state,
                                      size_t len,
                                      double *out);

/*
 Pointwise uniqueness check on `points` uniform instants over `[t0, t1]`.
 Any of the output pointers may be null.

 # Safety
 Non-null output pointers must be writable.
 */
enum CzndStatus cznd_check_uniqueness(const struct CzndProblem *p,
                                      double t0,
                                      double t1,
                                      size_t points,
                                      bool *unique,
                                      double *min_eigen_gap,
                                      double *min_abs_det);

/*
 Evaluates a model's state derivative at `(tau, state)`.

 # Safety
 `state` and `out` must each point to `len` doubles.
 */
enum CzndStatus cznd_vector_field(const struct CzndProblem *p,
                                  uint32_t model,
                                  double gamma_re,
                                  double gamma_im,
                                  double tau,
                                  const double *state,
                                  double *out,
                                  size_t len);

/*
 Integrates a model from `x0` over `[t0, t1]` with `samples` uniform output
 points. Non-positive tolerances select the defaults (1e-3, 1e-6).

 # Safety
 `x0` must point to `len` doubles; `out` must be writable.
 */
enum CzndStatus cznd_integrate(const struct CzndProblem *p,
                               uint32_t model,
                               double gamma_re,
                               double gamma_im,
                               const double *x0,
                               size_t len,
                               double t0,
                               double t1,
                               double rel_tol,
                               double abs_tol,
                               size_t samples,
                               struct CzndTrajectory **out);

/*
 Number of samples; 0 for a null handle.

 # Safety
 `tr` must be null or a live handle.
 */
size_t cznd_trajectory_len(const struct CzndTrajectory *tr);

/*
 State length per sample; 0 for a null handle.

 # Safety
 `tr` must be null or a live handle.
 */
size_t cznd_trajectory_dim(const struct CzndTrajectory *tr);

/*
 Reads sample `k`. `tau`, `residual` and `state` may each be null; a
 non-null `state` must hold at least `dim` doubles.

 # Safety
 Non-null pointers must be valid for writes of the stated sizes.
 */
enum CzndStatus cznd_trajectory_sample(const struct CzndTrajectory *tr,
                                       size_t k,
                                       double *tau,
                                       double *residual,
                                       double *state,
                                       size_t len);

/*
 Releases a trajectory handle. Null is ignored.

 # Safety
 `tr` must be null or a handle from this library not yet freed.
 */
void cznd_trajectory_free(struct CzndTrajectory *tr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CZND_H */

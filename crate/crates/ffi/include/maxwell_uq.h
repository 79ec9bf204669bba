#ifndef MAXWELL_UQ_H
#define MAXWELL_UQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum MxuqStatus {
  MXUQ_STATUS_OK = 0,
  MXUQ_STATUS_NULL_POINTER = 1,
  MXUQ_STATUS_INVALID_ARGUMENT = 2,
  MXUQ_STATUS_POINT_INSIDE = 3,
  MXUQ_STATUS_SINGULAR_MATRIX = 4,
  MXUQ_STATUS_CACHE = 5,
  MXUQ_STATUS_IO = 6,
  /**
   * The call needs a step that has not been run yet, e.g. a correction before the reference solve.
   */
  MXUQ_STATUS_INVALID_STATE = 7,
  MXUQ_STATUS_INTERNAL = 8,
  MXUQ_STATUS_PANIC = 9,
} MxuqStatus;

/**
 * Correlation kernel families.
 */
typedef enum MxuqKernel {
  /**
   * `Cor(x, y) = 0`; parameters unused.
   */
  MXUQ_KERNEL_ZERO = 0,
  /**
   * `Cor(x, y) = a`.
   */
  MXUQ_KERNEL_CONSTANT = 1,
  /**
   * `Cor(x, y) = a exp(-|x - y|² / (2 b²))`.
   */
  MXUQ_KERNEL_SQUARED_EXPONENTIAL = 2,
} MxuqKernel;

/**
 * Sphere discretization with factored operators and the fields computed on it.
 */
typedef struct MxuqSolver MxuqSolver;

/**
 * Incident plane wave.
 */
typedef struct MxuqWave MxuqWave;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message on this thread, excluding the terminator.
 */
size_t mxuq_last_error_length(void);

/**
 * Copies the last error message on this thread into `buf` as a NUL-terminated string,
 * truncated to `len - 1` bytes. Returns the full message length.
 */
size_t mxuq_last_error_message(char *buf, size_t len);

/**
 * Creates a plane wave `p exp(iκ d·x)`; `direction` and `polarization` hold three doubles.
 */
enum MxuqStatus mxuq_wave_new(const double *direction,
                              const double *polarization,
                              double kappa,
                              struct MxuqWave **out);

void mxuq_wave_free(struct MxuqWave *wave);

/**
 * Mie series scattered field of a sphere of `radius` at `n` points.
 */
enum MxuqStatus mxuq_mie_scattered_field(const struct MxuqWave *wave,
                                         double radius,
                                         const double *points,
                                         size_t n,
                                         double *out);

/**
 * Mean Mie field over radii `1 + ε t`, `t` uniform on `[-1, 1]`, with `n_quad` Gauss points.
 */
enum MxuqStatus mxuq_mie_random_radius_mean(const struct MxuqWave *wave,
                                            double eps,
                                            size_t n_quad,
                                            const double *points,
                                            size_t n,
                                            double *out);

/**
 * Discretizes the unit sphere at refinement `level` and assembles the operators at
 * wavenumber `kappa`. `cache_dir` may be null; otherwise operators are cached there.
 */
enum MxuqStatus mxuq_solver_new(uint32_t level,
                                double kappa,
                                const char *cache_dir,
                                struct MxuqSolver **out);

void mxuq_solver_free(struct MxuqSolver *solver);

/**
 * Number of unknowns of the discretization.
 */
enum MxuqStatus mxuq_solver_dofs(const struct MxuqSolver *solver, size_t *out);

/**
 * Solves the scattering problem on the unperturbed sphere. Discards any previous correction.
 */
enum MxuqStatus mxuq_solver_solve_reference(struct MxuqSolver *solver, const struct MxuqWave *wave);

/**
 * Builds the second-order mean correction for the given kernel. `a` and `b` are the
 * kernel parameters described in [`MxuqKernel`]; `rank` (nullable) receives the
 * low-rank factor rank.
 */
enum MxuqStatus mxuq_solver_build_correction(struct MxuqSolver *solver,
                                             enum MxuqKernel kernel,
                                             double a,
                                             double b,
                                             double tolerance,
                                             size_t *rank);

/**
 * Reference scattered field at `n` points outside the sphere.
 */
enum MxuqStatus mxuq_solver_reference_field(const struct MxuqSolver *solver,
                                            const double *points,
                                            size_t n,
                                            double *out);

/**
 * Corrected mean field `E_0 + ε²/2 w` at `n` points.
 */
enum MxuqStatus mxuq_solver_mean_field(const struct MxuqSolver *solver,
                                       double eps,
                                       const double *points,
                                       size_t n,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAXWELL_UQ_H */

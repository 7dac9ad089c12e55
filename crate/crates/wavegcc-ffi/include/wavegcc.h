#ifndef WAVEGCC_H
#define WAVEGCC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum WgStatus {
  WG_STATUS_OK = 0,
  WG_STATUS_NULL_POINTER = 1,
  WG_STATUS_INVALID_INPUT = 2,
  WG_STATUS_INVALID_REGION = 3,
  WG_STATUS_RESOLUTION = 4,
  /**
   * Integration, stability, eigensolver or conjugate-gradient failure.
   */
  WG_STATUS_NUMERICAL = 5,
  WG_STATUS_CONFIG = 6,
  WG_STATUS_IO = 7,
  WG_STATUS_PANIC = 8,
  WG_STATUS_OTHER = 9,
} WgStatus;

typedef struct WgGramian WgGramian;

typedef struct WgManifold WgManifold;

typedef struct WgRegion WgRegion;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null after a success.
 * The pointer stays valid until the next call into the library.
 */
const char *wg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wg_version(void);

/**
 * Flat torus `R^2 / (l1 Z x l2 Z)`.
 *
 * # Safety
 * `out_manifold` must be a valid pointer to writable storage.
 */
enum WgStatus wg_manifold_flat_torus(double l1, double l2, struct WgManifold **out_manifold);

/**
 * Unit round sphere in `(theta, phi)` coordinates.
 *
 * # Safety
 * `out_manifold` must be a valid pointer to writable storage.
 */
enum WgStatus wg_manifold_round_sphere(struct WgManifold **out_manifold);

/**
 * # Safety
 * `m` must be null or a handle from a `wg_manifold_*` constructor, freed once.
 */
void wg_manifold_free(struct WgManifold *m);

/**
 * Empty observation function with the given amplitude; add components
 * before use.
 *
 * # Safety
 * `out_region` must be a valid pointer to writable storage.
 */
enum WgStatus wg_region_new(double amplitude, struct WgRegion **out_region);

/**
 * Adds a bump equal to one on `d(x, c) <= r0` and zero beyond `r1`.
 *
 * # Safety
 * `r` must be a live region handle.
 */
enum WgStatus wg_region_add_ball(struct WgRegion *r, double c1, double c2, double r0, double r1);

/**
 * Adds the complement of a ball: zero on `d(x, c) <= r0`, one beyond `r1`.
 *
 * # Safety
 * `r` must be a live region handle.
 */
enum WgStatus wg_region_add_hole(struct WgRegion *r, double c1, double c2, double r0, double r1);

/**
 * Adds a band in coordinate `axis` (1 or 2) supported in `(a, a + w1)` with
 * a plateau of width `w0`.
 *
 * # Safety
 * `r` must be a live region handle.
 */
enum WgStatus wg_region_add_strip(struct WgRegion *r, uint8_t axis, double a, double w0, double w1);

/**
 * # Safety
 * `r` must be null or a handle from [`wg_region_new`], freed once.
 */
void wg_region_free(struct WgRegion *r);

/**
 * `b(x)`.
 *
 * # Safety
 * Handles must be live; `out_value` must be writable.
 */
enum WgStatus wg_region_evaluate(const struct WgManifold *m,
                                 const struct WgRegion *r,
                                 double x1,
                                 double x2,
                                 double *out_value);

/**
 * `int_0^T b^2` along the unit geodesic from `(x, xi)`.
 *
 * # Safety
 * Handles must be live; `out_value` must be writable.
 */
enum WgStatus wg_geodesic_average(const struct WgManifold *m,
                                  const struct WgRegion *r,
                                  double x1,
                                  double x2,
                                  double xi1,
                                  double xi2,
                                  double t,
                                  double *out_value);

/**
 * `K(T)` on an `nx^2 x na` cosphere grid refined by Nelder-Mead. The
 * minimizing `(x1, x2, xi1, xi2)` is written to `out_rho` when non-null.
 *
 * # Safety
 * Handles must be live; `out_value` writable; `out_rho` null or 4 writable doubles.
 */
enum WgStatus wg_k_of_t(const struct WgManifold *m,
                        const struct WgRegion *r,
                        double t,
                        size_t nx,
                        size_t na,
                        double *out_value,
                        double *out_rho);

/**
 * `T_GCC`, `+inf` when a trapped ray is certified.
 *
 * # Safety
 * Handles must be live; `out_value` must be writable.
 */
enum WgStatus wg_t_gcc(const struct WgManifold *m,
                       const struct WgRegion *r,
                       double t_max,
                       double tol,
                       size_t nx,
                       size_t na,
                       double *out_value);

/**
 * `T_UC = 2 sup_x dist(x, omega)` on a `resolution`-point grid.
 *
 * # Safety
 * Handles must be live; `out_value` must be writable.
 */
enum WgStatus wg_t_uc(const struct WgManifold *m,
                      const struct WgRegion *r,
                      size_t resolution,
                      double *out_value);

/**
 * Dense observability Gramian on the flat torus with modes `|k|_inf <= k_max`.
 *
 * # Safety
 * Handles must be live; `out_gramian` must be writable.
 */
enum WgStatus wg_gramian_assemble(const struct WgManifold *m,
                                  const struct WgRegion *r,
                                  size_t k_max,
                                  double s,
                                  double t,
                                  double tail_tol,
                                  struct WgGramian **out_gramian);

/**
 * Loads a Gramian written by [`wg_gramian_save`].
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_gramian` writable.
 */
enum WgStatus wg_gramian_load(const char *path, struct WgGramian **out_gramian);

/**
 * # Safety
 * `g` must be a live Gramian; `path` a NUL-terminated string.
 */
enum WgStatus wg_gramian_save(const struct WgGramian *g, const char *path);

/**
 * Matrix dimension, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live Gramian.
 */
size_t wg_gramian_dim(const struct WgGramian *g);

/**
 * Copies the entries, column-major, as interleaved `(re, im)` pairs into
 * `buffer`, which must hold `2 * dim * dim` doubles.
 *
 * # Safety
 * `g` must be live; `buffer` must point to `len` writable doubles.
 */
enum WgStatus wg_gramian_entries(const struct WgGramian *g, double *buffer, size_t len);

/**
 * Smallest eigenvalue, over all modes when `kappa < 0` and otherwise over
 * the shell `kappa_k > kappa`.
 *
 * # Safety
 * `g` must be live; `out_value` writable.
 */
enum WgStatus wg_gramian_min_eig(const struct WgGramian *g, double kappa, double *out_value);

/**
 * # Safety
 * `g` must be null or a Gramian handle, freed once.
 */
void wg_gramian_free(struct WgGramian *g);

/**
 * Runs the experiment in the TOML config at `config_path`, writing into
 * `out_dir`. `out_passed` receives 1 when every assertion passed.
 *
 * # Safety
 * Strings must be NUL-terminated; `out_passed` writable.
 */
enum WgStatus wg_run_config(const char *config_path, const char *out_dir, int32_t *out_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVEGCC_H */

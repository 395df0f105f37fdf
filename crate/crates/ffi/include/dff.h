#ifndef DFF_H
#define DFF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define DFF_POSE_DIM 51

#define DFF_NUM_JOINTS 21

#define DFF_NUM_REGIONS 22

/**
 * Result code of every fallible call.
 */
typedef enum DffStatus {
  DFF_STATUS_OK = 0,
  DFF_STATUS_NULL_POINTER = 1,
  DFF_STATUS_INVALID_ARGUMENT = 2,
  DFF_STATUS_PARSE = 3,
  DFF_STATUS_IO = 4,
  DFF_STATUS_NON_FINITE = 5,
  /**
   * The optimizer stopped on a non-finite value; the output pose holds
   * the last finite iterate.
   */
  DFF_STATUS_ABORTED = 6,
  DFF_STATUS_INTERNAL = 7,
} DffStatus;

/**
 * Hand description plus tactile sensor layout.
 */
typedef struct DffHand DffHand;

/**
 * Triangle mesh with its signed-distance accelerator.
 */
typedef struct DffMesh DffMesh;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t dff_last_error(char *buf, size_t len);

/**
 * Builds a mesh from `n_vertices` xyz triples and `n_triangles` index
 * triples.
 *
 * # Safety
 * Arrays must hold `3 * n` elements; `out` must be writable.
 */
enum DffStatus dff_mesh_new(const double *vertices,
                            size_t n_vertices,
                            const uint32_t *triangles,
                            size_t n_triangles,
                            struct DffMesh **out);

/**
 * Loads a Wavefront OBJ mesh.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DffStatus dff_mesh_load_obj(const char *path, struct DffMesh **out);

/**
 * # Safety
 * `mesh` must be null or a live handle from this library.
 */
size_t dff_mesh_vertex_count(const struct DffMesh *mesh);

/**
 * Signed distance of a point to the mesh, negative inside.
 *
 * # Safety
 * `mesh` must be a live handle, `point` three doubles, `out` writable.
 */
enum DffStatus dff_mesh_signed_distance(const struct DffMesh *mesh,
                                        const double *point,
                                        double *out);

/**
 * # Safety
 * `mesh` must be null or a handle not yet freed.
 */
void dff_mesh_free(struct DffMesh *mesh);

/**
 * The bundled hand model and sensor layout.
 *
 * # Safety
 * `out` must be writable.
 */
enum DffStatus dff_hand_default(struct DffHand **out);

/**
 * Loads a hand description JSON and, when `layout_path` is non-null, a
 * sensor layout JSON.
 *
 * # Safety
 * Paths must be NUL-terminated strings (layout may be null); `out` writable.
 */
enum DffStatus dff_hand_load(const char *desc_path, const char *layout_path, struct DffHand **out);

/**
 * # Safety
 * `hand` must be null or a handle not yet freed.
 */
void dff_hand_free(struct DffHand *hand);

/**
 * Joint positions (21 × 3) for pose `theta`.
 *
 * # Safety
 * `theta` must hold 51 doubles and `joints_out` room for 63.
 */
enum DffStatus dff_forward_kinematics(const struct DffHand *hand,
                                      const double *theta,
                                      double *joints_out);

/**
 * Deepest penetration of the hand surface into the mesh, ≥ 0.
 *
 * # Safety
 * Handles must be live, `theta` 51 doubles, `out` writable.
 */
enum DffStatus dff_penetration_depth(const struct DffHand *hand,
                                     const struct DffMesh *mesh,
                                     const double *theta,
                                     double *out);

/**
 * Barrier energy of one pair at distance `l` with stiffness `kappa`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DffStatus dff_barrier_energy(double kappa, double l, double l_hat, double *out);

/**
 * Stiffness from a force reading and a pair distance.
 *
 * # Safety
 * `out` must be writable.
 */
enum DffStatus dff_kappa(double force, double l, double floor, double *out);

/**
 * Refines `theta_init` against the mesh with default settings except
 * `iterations` and `learning_rate` (0 keeps the default). `forces` holds 22
 * region forces, or is null for the fixed-force mode. Writes the refined
 * pose to `theta_out`; returns `Aborted` if a non-finite value stopped the
 * run early.
 *
 * # Safety
 * Handles must be live, `theta_init`/`theta_out` 51 doubles, `forces` null
 * or 22 doubles.
 */
enum DffStatus dff_optimize(const struct DffHand *hand,
                            const struct DffMesh *mesh,
                            const double *theta_init,
                            const double *forces,
                            size_t iterations,
                            double learning_rate,
                            double *theta_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DFF_H */

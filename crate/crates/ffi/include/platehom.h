#ifndef PLATEHOM_H
#define PLATEHOM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result codes. Zero is success.
 */
typedef enum PlatehomStatus {
  PLATEHOM_STATUS_OK = 0,
  PLATEHOM_STATUS_INVALID_ARGUMENT = 1,
  PLATEHOM_STATUS_NULL_POINTER = 2,
  PLATEHOM_STATUS_DENSITY_UNATTAINABLE = 3,
  PLATEHOM_STATUS_EMPTY_STRUCTURE = 4,
  PLATEHOM_STATUS_UNMAPPED_MATERIAL = 5,
  PLATEHOM_STATUS_NOT_CONVERGED = 6,
  PLATEHOM_STATUS_SINGULAR_PRECONDITIONER = 7,
  PLATEHOM_STATUS_DEGENERATE_NORMAL_STIFFNESS = 8,
  PLATEHOM_STATUS_IO = 9,
  PLATEHOM_STATUS_FORMAT = 10,
  PLATEHOM_STATUS_PANIC = 11,
} PlatehomStatus;

/*
 Lattice families accepted by [`platehom_grid_generate_tpms`].
 */
typedef enum PlatehomFamily {
  PLATEHOM_FAMILY_PRIMITIVE = 0,
  PLATEHOM_FAMILY_GYROID = 1,
  PLATEHOM_FAMILY_DIAMOND = 2,
  PLATEHOM_FAMILY_IWP = 3,
} PlatehomFamily;

/*
 Opaque voxel grid.
 */
typedef struct PlatehomGrid PlatehomGrid;

/*
 PCG settings. A null pointer selects the defaults (1e-6, 5000).
 */
typedef struct PlatehomSolverOptions {
  double tol;
  size_t maxiter;
} PlatehomSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` (NUL
 terminated, truncated to `len`). Returns the full message length.

 # Safety
 `buf` must be null or valid for `len` bytes.
 */
size_t platehom_last_error(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *platehom_version(void);

/*
 Generates a TPMS lattice at `res` voxels per cell edge. `family` is a
 [`PlatehomFamily`] value.

 # Safety
 `out` must be valid for writing one pointer.
 */
enum PlatehomStatus platehom_grid_generate_tpms(uint32_t family,
                                                size_t res,
                                                double density,
                                                bool sheet,
                                                size_t cells_x,
                                                size_t cells_y,
                                                size_t cells_z,
                                                struct PlatehomGrid **out);

/*
 Generates a BCC strut lattice.

 # Safety
 `out` must be valid for writing one pointer.
 */
enum PlatehomStatus platehom_grid_generate_bcc(size_t res,
                                               double density,
                                               size_t cells_x,
                                               size_t cells_y,
                                               size_t cells_z,
                                               struct PlatehomGrid **out);

/*
 Copies `nx * ny * nz` material ids, index `(ix * ny + iy) * nz + iz`,
 0 for void.

 # Safety
 `data` must be valid for `nx * ny * nz` bytes; `out` for one pointer.
 */
enum PlatehomStatus platehom_grid_from_buffer(size_t nx,
                                              size_t ny,
                                              size_t nz,
                                              const uint8_t *data,
                                              struct PlatehomGrid **out);

/*
 Reads a `.vxl` file.

 # Safety
 `path` must be a NUL-terminated string; `out` valid for one pointer.
 */
enum PlatehomStatus platehom_grid_read_vxl(const char *path, struct PlatehomGrid **out);

/*
 Writes a `.vxl` file.

 # Safety
 `grid` must be a live handle; `path` a NUL-terminated string.
 */
enum PlatehomStatus platehom_grid_write_vxl(const struct PlatehomGrid *grid, const char *path);

/*
 New grid with `bottom` and `top` solid layers of material `id` added.

 # Safety
 `grid` must be a live handle; `out` valid for one pointer.
 */
enum PlatehomStatus platehom_grid_add_skins(const struct PlatehomGrid *grid,
                                            size_t bottom,
                                            size_t top,
                                            uint8_t id,
                                            struct PlatehomGrid **out);

/*
 Grid dimensions and solid fraction. Any output pointer may be null.

 # Safety
 `grid` must be a live handle; non-null outputs must be writable.
 */
enum PlatehomStatus platehom_grid_info(const struct PlatehomGrid *grid,
                                       size_t *nx,
                                       size_t *ny,
                                       size_t *nz,
                                       double *solid_fraction);

/*
 Copies the `nx * ny * nz` material ids into `data`.

 # Safety
 `grid` must be a live handle; `data` valid for `len` bytes.
 */
enum PlatehomStatus platehom_grid_data(const struct PlatehomGrid *grid, uint8_t *data, size_t len);

/*
 Releases a grid. Null is ignored.

 # Safety
 `grid` must be null or a handle not yet freed.
 */
void platehom_grid_free(struct PlatehomGrid *grid);

/*
 Plate ABD stiffness of a single-material grid, written row-major to
 `abd_out[36]`.

 # Safety
 `grid` must be a live handle, `abd_out` valid for 36 doubles, `opts`
 null or valid.
 */
enum PlatehomStatus platehom_plate(const struct PlatehomGrid *grid,
                                   double e,
                                   double nu,
                                   double thickness,
                                   size_t cells_x,
                                   size_t cells_y,
                                   size_t cells_z,
                                   const struct PlatehomSolverOptions *opts,
                                   double *abd_out);

/*
 Plate ABD stiffness with per-id materials: voxel id `ids[k]` has
 modulus `moduli[k]` and Poisson ratio `nus[k]`.

 # Safety
 `ids`, `moduli` and `nus` must be valid for `n` entries; otherwise as
 [`platehom_plate`].
 */
enum PlatehomStatus platehom_plate_multi(const struct PlatehomGrid *grid,
                                         const uint8_t *ids,
                                         const double *moduli,
                                         const double *nus,
                                         size_t n,
                                         double thickness,
                                         size_t cells_x,
                                         size_t cells_y,
                                         size_t cells_z,
                                         const struct PlatehomSolverOptions *opts,
                                         double *abd_out);

/*
 Fully periodic effective elasticity (Voigt order e11, e22, e33, g23,
 g13, g12) of a cell `lx x ly x lz`, row-major in `c_out[36]`.

 # Safety
 As [`platehom_plate`], with `c_out` valid for 36 doubles.
 */
enum PlatehomStatus platehom_volume(const struct PlatehomGrid *grid,
                                    double e,
                                    double nu,
                                    double lx,
                                    double ly,
                                    double lz,
                                    const struct PlatehomSolverOptions *opts,
                                    double *c_out);

/*
 Thickness-integrated in-plane conductance, row-major in `k_out[4]`.

 # Safety
 As [`platehom_plate`], with `k_out` valid for 4 doubles.
 */
enum PlatehomStatus platehom_thermal(const struct PlatehomGrid *grid,
                                     double k_s,
                                     double thickness,
                                     size_t cells_x,
                                     size_t cells_y,
                                     size_t cells_z,
                                     const struct PlatehomSolverOptions *opts,
                                     double *k_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLATEHOM_H */

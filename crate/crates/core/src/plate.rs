//! Plate homogenization with in-plane periodic, out-of-plane free boundaries.
//!
//! Six macroscopic modes (three membrane strains, three curvatures) are
//! imposed as initial strains; the periodic fluctuation field is solved and
//! the in-plane stresses `(s11, s22, s12)` are integrated through the
//! thickness. The zeroth moment gives the `[A B]` rows and the first moment
//! the `[B D]` rows of the plate stiffness, per unit mid-surface area.

use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::{assemble_plate_system, build_macro_loads, MacroLoadSet, PLATE_CASES};
use crate::dofmap::{build_dof_map, DofMap};
use crate::element::ElementGeometry;
use crate::error::{Error, Result};
use crate::material::{Mat6, MaterialField};
use crate::solver::{solve_multi_rhs, SolveReport, SolverOptions};
use crate::voxel::VoxelGrid;

/// Voigt rows of the in-plane stress components.
pub const IN_PLANE: [usize; 3] = [0, 1, 5];

/// Elements per work unit in order-stable reductions.
pub(crate) const ELEM_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateGeometry {
    pub thickness: f64,
    pub cells: (usize, usize, usize),
    pub cell_size: f64,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub plate_area: f64,
}

impl PlateGeometry {
    /// Geometry for a grid of `dims` voxels spanning `cells` unit cells of a
    /// plate `thickness` thick; the cell edge is `thickness / Nz`.
    pub fn new(thickness: f64, cells: (usize, usize, usize), dims: (usize, usize, usize)) -> Result<Self> {
        let (cx, cy, cz) = cells;
        let (nx, ny, nz) = dims;
        if !(thickness > 0.0) || !thickness.is_finite() {
            return Err(Error::invalid(format!("thickness must be positive, got {thickness}")));
        }
        if cx == 0 || cy == 0 || cz == 0 {
            return Err(Error::invalid("cell counts must be positive"));
        }
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        let cell_size = thickness / cz as f64;
        let lx = cx as f64 * cell_size;
        let ly = cy as f64 * cell_size;
        let lz = thickness;
        Ok(PlateGeometry {
            thickness,
            cells,
            cell_size,
            lx,
            ly,
            lz,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
            dz: lz / nz as f64,
            plate_area: lx * ly,
        })
    }

    pub fn for_grid(grid: &VoxelGrid, thickness: f64, cells: (usize, usize, usize)) -> Result<Self> {
        Self::new(thickness, cells, grid.dims())
    }
}

/// Symmetric 6x6 plate stiffness `[[A, B], [B, D]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbdMatrix {
    pub m: Mat6,
}

impl AbdMatrix {
    pub fn from_raw_symmetrized(raw: &Mat6) -> Self {
        let mut m = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] = (raw[i][j] + raw[j][i]) / 2.0;
            }
        }
        AbdMatrix { m }
    }

    fn block(&self, r: usize, c: usize) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.m[r + i][c + j]))
    }

    pub fn a(&self) -> [[f64; 3]; 3] {
        self.block(0, 0)
    }

    pub fn b(&self) -> [[f64; 3]; 3] {
        self.block(0, 3)
    }

    pub fn d(&self) -> [[f64; 3]; 3] {
        self.block(3, 3)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_b(&self) -> f64 {
        self.b().iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `max|m - m^T| / max|m|` of an unsymmetrized stiffness.
pub fn pre_symmetry_check(raw: &Mat6) -> f64 {
    let mut asym = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..6 {
        for j in 0..6 {
            asym = asym.max((raw[i][j] - raw[j][i]).abs());
            scale = scale.max(raw[i][j].abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        asym / scale
    }
}

#[derive(Debug, Clone)]
pub struct PlateResult {
    pub abd: AbdMatrix,
    /// Stiffness before symmetrization.
    pub raw: Mat6,
    pub report: SolveReport,
    pub n_active: usize,
    pub n_dofs: usize,
    pub wall_time_s: f64,
}

impl PlateResult {
    pub fn asymmetry(&self) -> f64 {
        pre_symmetry_check(&self.raw)
    }
}

/// Zeroth and first thickness moments of the recovered in-plane stress,
/// before symmetrization. `u` solves the dimensionless system; the field
/// modulus is applied here.
pub fn integrate_moments(
    geo: &ElementGeometry,
    field: &MaterialField,
    loads: &MacroLoadSet,
    map: &DofMap,
    u: &[f64],
    plate_area: f64,
) -> Mat6 {
    let nc = PLATE_CASES;
    let partials: Vec<Mat6> = (0..map.n_active())
        .collect::<Vec<_>>()
        .par_chunks(ELEM_CHUNK)
        .map(|chunk| {
            let mut acc = [[0.0; 6]; 6];
            for &e in chunk {
                let c = field.tensor(e);
                let z = map.z_active[e];
                let em = &loads.e_macro[e];
                let mut ue = [[0.0; 6]; 24];
                for (d, &dof) in map.edof[e].iter().enumerate() {
                    ue[d].copy_from_slice(&u[dof * nc..dof * nc + nc]);
                }
                for b in &geo.bs {
                    for case in 0..nc {
                        let mut strain = [0.0; 6];
                        for (i, s) in strain.iter_mut().enumerate() {
                            let bu: f64 = (0..24).map(|d| b[i][d] * ue[d][case]).sum();
                            *s = em[i][case] - bu;
                        }
                        let sigma = c.mul_vec(&strain);
                        for (r, &k) in IN_PLANE.iter().enumerate() {
                            let w = sigma[k] * geo.det_j / plate_area;
                            acc[r][case] += w;
                            acc[r + 3][case] += w * z;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut raw = [[0.0; 6]; 6];
    for p in partials {
        for i in 0..6 {
            for j in 0..6 {
                raw[i][j] += p[i][j];
            }
        }
    }
    raw.map(|row| row.map(|v| v * field.modulus()))
}

/// Effective ABD stiffness of a voxel plate.
pub fn homogenize_plate(
    grid: &VoxelGrid,
    field: &MaterialField,
    geom: &PlateGeometry,
    opts: &SolverOptions,
) -> Result<PlateResult> {
    let start = Instant::now();
    if geom.cells.0 == 0 || grid.dims() == (0, 0, 0) {
        return Err(Error::invalid("inconsistent plate geometry"));
    }
    let geo = ElementGeometry::new(geom.dx, geom.dy, geom.dz)?;
    let map = build_dof_map(grid, geom.dx, geom.dy, geom.dz, geom.thickness)?;
    field.check_len(map.n_active())?;
    let loads = build_macro_loads(&map);
    let system = assemble_plate_system(&geo, field, &map, &loads)?;
    let n_dofs = system.active_dofs.len();
    let (u, report) = solve_multi_rhs(&system, opts)?;
    drop(system);
    let raw = integrate_moments(&geo, field, &loads, &map, &u, geom.plate_area);
    Ok(PlateResult {
        abd: AbdMatrix::from_raw_symmetrized(&raw),
        raw,
        report,
        n_active: map.n_active(),
        n_dofs,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

//! Classical volume homogenization (periodic in all three directions) and
//! its reduction to plate stiffness by static condensation and uniform
//! through-thickness integration.

use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::{
    anchored_active_dofs, assemble_loads, assemble_stiffness, unit_strain_loads, GlobalSystem,
    MacroLoadSet, StiffnessSet,
};
use crate::dofmap::{build_periodic_dof_map, DofMap};
use crate::element::ElementGeometry;
use crate::error::{Error, Result};
use crate::material::{ElasticTensor6, Mat6, MaterialField};
use crate::plate::{AbdMatrix, ELEM_CHUNK, IN_PLANE};
use crate::solver::{solve_multi_rhs, SolveReport, SolverOptions};
use crate::voxel::VoxelGrid;

/// Plane-stress reduced stiffness in the order `[e11, e22, g12]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedStiffness3 {
    pub q: [[f64; 3]; 3],
}

#[derive(Debug, Clone)]
pub struct VolumeResult {
    pub c_h: ElasticTensor6,
    pub raw: Mat6,
    pub report: SolveReport,
    pub n_active: usize,
    pub wall_time_s: f64,
}

/// Mutual energies `(1/V) sum (e_i - B u_i)^T C (e_j - B u_j) |J|`.
fn energy_tensor(
    geo: &ElementGeometry,
    field: &MaterialField,
    loads: &MacroLoadSet,
    map: &DofMap,
    u: &[f64],
    volume: f64,
) -> Mat6 {
    let nc = 6;
    let partials: Vec<Mat6> = (0..map.n_active())
        .collect::<Vec<_>>()
        .par_chunks(ELEM_CHUNK)
        .map(|chunk| {
            let mut acc = [[0.0; 6]; 6];
            for &e in chunk {
                let c = field.tensor(e);
                let em = &loads.e_macro[e];
                let mut ue = [[0.0; 6]; 24];
                for (d, &dof) in map.edof[e].iter().enumerate() {
                    ue[d].copy_from_slice(&u[dof * nc..dof * nc + nc]);
                }
                for b in &geo.bs {
                    // strain[k][case]
                    let mut strain = [[0.0; 6]; 6];
                    for k in 0..6 {
                        for case in 0..nc {
                            let bu: f64 = (0..24).map(|d| b[k][d] * ue[d][case]).sum();
                            strain[k][case] = em[k][case] - bu;
                        }
                    }
                    for j in 0..nc {
                        let col: [f64; 6] = std::array::from_fn(|k| strain[k][j]);
                        let s = c.mul_vec(&col);
                        for i in 0..nc {
                            let w: f64 = (0..6).map(|k| strain[k][i] * s[k]).sum();
                            acc[i][j] += w * geo.det_j / volume;
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

/// Effective elasticity tensor of a fully periodic cell of size
/// `lx x ly x lz`.
pub fn homogenize_volume(
    grid: &VoxelGrid,
    field: &MaterialField,
    cell: (f64, f64, f64),
    opts: &SolverOptions,
) -> Result<VolumeResult> {
    let start = Instant::now();
    let (lx, ly, lz) = cell;
    if !(lx > 0.0 && ly > 0.0 && lz > 0.0) {
        return Err(Error::invalid("cell dimensions must be positive"));
    }
    let (nx, ny, nz) = grid.dims();
    let (dx, dy, dz) = (lx / nx as f64, ly / ny as f64, lz / nz as f64);
    let geo = ElementGeometry::new(dx, dy, dz)?;
    let map = build_periodic_dof_map(grid, dz)?;
    field.check_len(map.n_active())?;
    let loads = unit_strain_loads(map.n_active());
    let set = StiffnessSet::from_field(&geo, field, map.n_active())?;
    let k = assemble_stiffness(&set, &map);
    drop(set);
    let f = assemble_loads(&geo, field, &loads, &map)?;
    let active_dofs = anchored_active_dofs(map.edof.iter().map(|r| &r[..]), map.total_dofs, 3);
    let system = GlobalSystem {
        k,
        f,
        ncols: 6,
        active_dofs,
    };
    let (u, report) = solve_multi_rhs(&system, opts)?;
    drop(system);
    let raw = energy_tensor(&geo, field, &loads, &map, &u, lx * ly * lz);
    let mut c = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            c[i][j] = (raw[i][j] + raw[j][i]) / 2.0;
        }
    }
    Ok(VolumeResult {
        c_h: ElasticTensor6::from_matrix(c),
        raw,
        report,
        n_active: map.n_active(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Eliminates the through-thickness normal stress (`s33 = 0`).
pub fn static_condensation(c_h: &ElasticTensor6) -> Result<ReducedStiffness3> {
    let c = &c_h.c;
    let c33 = c[2][2];
    if !(c33 > 0.0) {
        return Err(Error::DegenerateNormalStiffness(c33));
    }
    let q = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let (a, b) = (IN_PLANE[i], IN_PLANE[j]);
            c[a][b] - c[a][2] * c[b][2] / c33
        })
    });
    Ok(ReducedStiffness3 { q })
}

/// Plate stiffness of a layer with uniform reduced stiffness `q` through a
/// thickness `h`: `A = q h`, `B = 0`, `D = q h^3 / 12`.
pub fn analytic_abd(q: &ReducedStiffness3, h: f64) -> Result<AbdMatrix> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("thickness must be positive, got {h}")));
    }
    let mut m = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = q.q[i][j] * h;
            m[i + 3][j + 3] = q.q[i][j] * h * h * h / 12.0;
        }
    }
    Ok(AbdMatrix { m })
}

//! In-plane steady conduction of a plate: the scalar analogue of the
//! elastic pipeline with temperature as the only nodal unknown.

use std::time::Instant;

use crate::assembly::{anchored_active_dofs, GlobalSystem};
use crate::dofmap::build_scalar_dof_map;
use crate::element::{ElementGeometry, GradN};
use crate::error::{Error, Result};
use crate::plate::PlateGeometry;
use crate::solver::{solve_multi_rhs, SolveReport, SolverOptions};
use crate::sparse::assemble;
use crate::voxel::VoxelGrid;

const CASES: usize = 2;

#[derive(Debug, Clone)]
pub struct ThermalElement {
    pub kt: [[f64; 8]; 8],
    pub grad_ns: [GradN; 8],
    pub det_j: f64,
}

pub fn thermal_element(k_s: f64, dx: f64, dy: f64, dz: f64) -> Result<ThermalElement> {
    if !(k_s > 0.0) || !k_s.is_finite() {
        return Err(Error::invalid(format!("conductivity must be positive, got {k_s}")));
    }
    let geo = ElementGeometry::new(dx, dy, dz)?;
    Ok(ThermalElement {
        kt: geo.conduction(k_s),
        grad_ns: geo.grad_ns,
        det_j: geo.det_j,
    })
}

#[derive(Debug, Clone)]
pub struct ConductionResult {
    /// Thickness-integrated in-plane conductance, symmetrized.
    pub k_hom: [[f64; 2]; 2],
    /// `k_hom / h`.
    pub k_hom_per_thickness: [[f64; 2]; 2],
    pub raw: [[f64; 2]; 2],
    pub report: SolveReport,
    pub n_active: usize,
    pub wall_time_s: f64,
}

/// Effective in-plane conduction under unit macroscopic gradients along x
/// and y, periodic in-plane and insulated top and bottom faces.
pub fn homogenize_thermal(
    grid: &VoxelGrid,
    k_s: f64,
    geom: &PlateGeometry,
    opts: &SolverOptions,
) -> Result<ConductionResult> {
    let start = Instant::now();
    if !(k_s > 0.0) || !k_s.is_finite() {
        return Err(Error::invalid(format!("conductivity must be positive, got {k_s}")));
    }
    // solved at unit conductivity, scaled by k_s on recovery
    let elem = thermal_element(1.0, geom.dx, geom.dy, geom.dz)?;
    let map = build_scalar_dof_map(grid, geom.dx, geom.dy, geom.dz, geom.thickness)?;
    let kt_flat: Vec<f64> = elem.kt.iter().flatten().copied().collect();
    let k = assemble(map.total_dofs, 1, &map.edof, |_| &kt_flat);

    // element load: sum_g gradN^T k G |J| with G = [[1,0],[0,1],[0,0]]
    let mut fe = [[0.0; CASES]; 8];
    for g in &elem.grad_ns {
        for (i, fi) in fe.iter_mut().enumerate() {
            for (c, v) in fi.iter_mut().enumerate() {
                *v += g[c][i] * elem.det_j;
            }
        }
    }
    let mut f = vec![0.0; map.total_dofs * CASES];
    for row in &map.edof {
        for (i, &dof) in row.iter().enumerate() {
            for c in 0..CASES {
                f[dof * CASES + c] += fe[i][c];
            }
        }
    }
    let active_dofs = anchored_active_dofs(map.edof.iter().map(|r| &r[..]), map.total_dofs, 1);
    let system = GlobalSystem {
        k,
        f,
        ncols: CASES,
        active_dofs,
    };
    let (t, report) = solve_multi_rhs(&system, opts)?;
    drop(system);

    let mut raw = [[0.0; 2]; 2];
    for row in &map.edof {
        for g in &elem.grad_ns {
            for c in 0..CASES {
                for a in 0..2 {
                    let grad_t: f64 = (0..8).map(|i| g[a][i] * t[row[i] * CASES + c]).sum();
                    let macro_grad = if a == c { 1.0 } else { 0.0 };
                    raw[a][c] += (macro_grad - grad_t) * elem.det_j / geom.plate_area;
                }
            }
        }
    }
    let raw = raw.map(|row| row.map(|v| v * k_s));
    let mut k_hom = [[0.0; 2]; 2];
    let mut per_h = [[0.0; 2]; 2];
    for a in 0..2 {
        for c in 0..2 {
            k_hom[a][c] = (raw[a][c] + raw[c][a]) / 2.0;
            per_h[a][c] = k_hom[a][c] / geom.thickness;
        }
    }
    Ok(ConductionResult {
        k_hom,
        k_hom_per_thickness: per_h,
        raw,
        report,
        n_active: map.n_active(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

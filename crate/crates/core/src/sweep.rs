//! Parameter studies built on the plate and volume pipelines: mesh
//! convergence, thickness size effect, and the plate-versus-volume
//! comparison.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::material::MaterialField;
use crate::plate::{homogenize_plate, AbdMatrix, PlateGeometry, PlateResult};
use crate::report::{format_float, relative_error};
use crate::solver::SolverOptions;
use crate::volume::{analytic_abd, homogenize_volume, static_condensation, ReducedStiffness3, VolumeResult};
use crate::voxel::{generate, LatticeSpec, VoxelGrid};

/// Inclusive integer range `start, start + step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepRange {
    pub start: usize,
    pub stop: usize,
    pub step: usize,
}

impl SweepRange {
    pub fn new(start: usize, stop: usize, step: usize) -> Result<Self> {
        if step == 0 {
            return Err(Error::invalid("sweep step must be positive"));
        }
        if start > stop {
            return Err(Error::invalid(format!("descending sweep range {start}..{stop}")));
        }
        if start == 0 {
            return Err(Error::invalid("sweep range must start above zero"));
        }
        Ok(SweepRange { start, stop, step })
    }

    pub fn values(&self) -> Vec<usize> {
        (self.start..=self.stop).step_by(self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `(A00, D00)` or the failure message.
    pub outcome: std::result::Result<(f64, f64), String>,
    pub wall_time_s: f64,
}

/// Regenerates the lattice at every resolution in `range` and records the
/// leading membrane and bending stiffness. Failures become rows.
pub fn convergence_sweep(
    spec: &LatticeSpec,
    e: f64,
    nu: f64,
    thickness: f64,
    range: SweepRange,
    opts: &SolverOptions,
) -> Result<Vec<ConvergenceRow>> {
    let field = MaterialField::homogeneous(e, nu)?;
    let mut rows = Vec::new();
    for n in range.values() {
        let start = Instant::now();
        let outcome = (|| {
            let s = LatticeSpec { resolution: n, ..*spec };
            let grid = generate(&s)?;
            let geom = PlateGeometry::for_grid(&grid, thickness, s.cells)?;
            let r = homogenize_plate(&grid, &field, &geom, opts)?;
            Ok::<_, Error>((r.abd.m[0][0], r.abd.m[3][3]))
        })()
        .map_err(|e| e.to_string());
        rows.push(ConvergenceRow {
            n,
            outcome,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

pub const ERROR_MARKER: &str = "error";

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("N,A00,D00,wall_time\n");
    for r in rows {
        let (a, d) = match &r.outcome {
            Ok((a, d)) => (format_float(*a), format_float(*d)),
            Err(_) => (ERROR_MARKER.to_string(), ERROR_MARKER.to_string()),
        };
        s.push_str(&format!("{},{a},{d},{}\n", r.n, format_float(r.wall_time_s)));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeEffectRow {
    pub nz: usize,
    /// Plate diagonal A and D entries divided by the volume-based prediction,
    /// `[A00, A11, A22]` and `[D00, D11, D22]`.
    pub outcome: std::result::Result<([f64; 3], [f64; 3]), String>,
    pub wall_time_s: f64,
}

/// Stacks `nz` copies of `cell` through the thickness for each `nz` and
/// compares the plate stiffness with the volume prediction of one cell.
pub fn size_effect_sweep(
    cell: &VoxelGrid,
    e: f64,
    nu: f64,
    thickness: f64,
    layers: SweepRange,
    opts: &SolverOptions,
) -> Result<Vec<SizeEffectRow>> {
    let field = MaterialField::homogeneous(e, nu)?;
    let vol = homogenize_volume(cell, &field, (1.0, 1.0, 1.0), opts)?;
    let q = static_condensation(&vol.c_h)?;
    let reference = analytic_abd(&q, thickness)?;
    let mut rows = Vec::new();
    for nz in layers.values() {
        let start = Instant::now();
        let outcome = (|| {
            let grid = cell.tile(1, 1, nz)?;
            let geom = PlateGeometry::for_grid(&grid, thickness, (1, 1, nz))?;
            let r = homogenize_plate(&grid, &field, &geom, opts)?;
            let a = std::array::from_fn(|i| r.abd.m[i][i] / reference.m[i][i]);
            let d = std::array::from_fn(|i| r.abd.m[i + 3][i + 3] / reference.m[i + 3][i + 3]);
            Ok::<_, Error>((a, d))
        })()
        .map_err(|e| e.to_string());
        rows.push(SizeEffectRow {
            nz,
            outcome,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

pub fn size_effect_csv(rows: &[SizeEffectRow]) -> String {
    let mut s = String::from("Nz,A00,A11,A22,D00,D11,D22,wall_time\n");
    for r in rows {
        let cells: Vec<String> = match &r.outcome {
            Ok((a, d)) => a.iter().chain(d).map(|&v| format_float(v)).collect(),
            Err(_) => vec![ERROR_MARKER.to_string(); 6],
        };
        s.push_str(&format!("{},{},{}\n", r.nz, cells.join(","), format_float(r.wall_time_s)));
    }
    s
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub plate: PlateResult,
    pub volume: VolumeResult,
    pub q: ReducedStiffness3,
    pub volume_abd: AbdMatrix,
    /// `(volume - plate) / plate`, masked where the plate entry is tiny.
    pub relative_error: [[Option<f64>; 6]; 6],
}

/// Runs both pipelines on the same grid. The volume run treats the whole
/// grid as one periodic cell of the plate's physical size.
pub fn compare(
    grid: &VoxelGrid,
    field: &MaterialField,
    geom: &PlateGeometry,
    opts: &SolverOptions,
) -> Result<Comparison> {
    let plate = homogenize_plate(grid, field, geom, opts)?;
    let volume = homogenize_volume(grid, field, (geom.lx, geom.ly, geom.lz), opts)?;
    let q = static_condensation(&volume.c_h)?;
    let volume_abd = analytic_abd(&q, geom.thickness)?;
    let relative_error = relative_error(&plate.abd.m, &volume_abd.m);
    Ok(Comparison {
        plate,
        volume,
        q,
        volume_abd,
        relative_error,
    })
}

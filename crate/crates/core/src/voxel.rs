//! Voxel models of lattice plates.
//!
//! A [`VoxelGrid`] stores one `u8` per voxel: `0` is void, any other value is
//! the material id of a solid voxel. Storage is x-slowest / z-fastest,
//! `index(ix, iy, iz) = (ix * ny + iy) * nz + iz`.
//!
//! Generators sample an implicit field at voxel centres of one unit cell and
//! calibrate the iso-value (TPMS) or strut radius (BCC) by bisection so that
//! the solid fraction hits a target relative density. The calibrated cell is
//! then tiled, which makes multi-cell grids exact copies of the single cell.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const VXL_MAGIC: &[u8; 4] = b"VXL1";

/// Bisection stops after this many halvings or once the bracket is narrower
/// than [`BISECTION_WIDTH`].
pub const BISECTION_ITERS: usize = 60;
pub const BISECTION_WIDTH: f64 = 1e-9;
/// Accepted absolute deviation between achieved and target solid fraction.
pub const DENSITY_TOLERANCE: f64 = 0.005;

#[derive(Clone, PartialEq, Eq)]
pub struct VoxelGrid {
    nx: usize,
    ny: usize,
    nz: usize,
    data: Vec<u8>,
}

impl fmt::Debug for VoxelGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VoxelGrid")
            .field("dims", &(self.nx, self.ny, self.nz))
            .field("solid", &self.solid_count())
            .finish()
    }
}

impl VoxelGrid {
    /// Wraps raw voxel data. The grid may be entirely void; analyses reject
    /// such grids with [`Error::EmptyStructure`].
    pub fn new(nx: usize, ny: usize, nz: usize, data: Vec<u8>) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::invalid(format!(
                "voxel dimensions must be positive, got {nx}x{ny}x{nz}"
            )));
        }
        let expected = nx
            .checked_mul(ny)
            .and_then(|v| v.checked_mul(nz))
            .ok_or_else(|| Error::invalid("voxel dimensions overflow"))?;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "voxel payload has {} entries, expected {expected}",
                data.len()
            )));
        }
        Ok(VoxelGrid { nx, ny, nz, data })
    }

    pub fn filled(nx: usize, ny: usize, nz: usize, value: u8) -> Result<Self> {
        Self::new(nx, ny, nz, vec![value; nx * ny * nz])
    }

    /// Builds a grid by evaluating `f(ix, iy, iz)` at every voxel.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        nz: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(nx * ny * nz);
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    data.push(f(ix, iy, iz));
                }
            }
        }
        Self::new(nx, ny, nz, data)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nx, self.ny, self.nz)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.ny + iy) * self.nz + iz
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> u8 {
        self.data[self.index(ix, iy, iz)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, iz: usize, value: u8) {
        let i = self.index(ix, iy, iz);
        self.data[i] = value;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn solid_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn solid_fraction(&self) -> f64 {
        self.solid_count() as f64 / self.data.len() as f64
    }

    /// Material ids of the solid voxels in storage order.
    pub fn active_ids(&self) -> Vec<u8> {
        self.data.iter().copied().filter(|&v| v != 0).collect()
    }

    /// Rotates the grid by 90 degrees about the z axis: new (ix, iy) takes
    /// old (iy, ny - 1 - ix), so the x and y extents swap.
    pub fn rotate_z90(&self) -> VoxelGrid {
        let (nx, ny, nz) = self.dims();
        VoxelGrid::from_fn(ny, nx, nz, |ix, iy, iz| self.get(iy, ny - 1 - ix, iz))
            .expect("rotated dims are valid")
    }

    /// Relabels solid voxels by the sign of their centre relative to the
    /// mid-plane: `below` for `z <= 0`, `above` for `z > 0`.
    pub fn split_at_mid_plane(&self, below: u8, above: u8) -> Result<VoxelGrid> {
        if below == 0 || above == 0 {
            return Err(Error::invalid("material ids must be nonzero"));
        }
        let nz = self.nz;
        VoxelGrid::from_fn(self.nx, self.ny, nz, |ix, iy, iz| {
            match self.get(ix, iy, iz) {
                0 => 0,
                // centre z > 0  <=>  2 iz + 1 > nz
                _ if 2 * iz + 1 > nz => above,
                _ => below,
            }
        })
    }

    /// Tiles the grid `cx` x `cy` x `cz` times.
    pub fn tile(&self, cx: usize, cy: usize, cz: usize) -> Result<VoxelGrid> {
        let (nx, ny, nz) = self.dims();
        VoxelGrid::from_fn(nx * cx, ny * cy, nz * cz, |ix, iy, iz| {
            self.get(ix % nx, iy % ny, iz % nz)
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.data.len());
        out.extend_from_slice(VXL_MAGIC);
        for n in [self.nx, self.ny, self.nz] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != VXL_MAGIC {
            return Err(Error::Format("missing VXL1 header".into()));
        }
        let dim = |k: usize| {
            let off = 4 + 4 * k;
            u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize
        };
        let (nx, ny, nz) = (dim(0), dim(1), dim(2));
        let payload = &bytes[16..];
        if nx.saturating_mul(ny).saturating_mul(nz) != payload.len() {
            return Err(Error::Format(format!(
                "header says {nx}x{ny}x{nz} but payload has {} bytes",
                payload.len()
            )));
        }
        Self::new(nx, ny, nz, payload.to_vec()).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_vxl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_vxl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Primitive,
    Gyroid,
    Diamond,
    Iwp,
    Bcc,
}

impl Family {
    pub fn is_tpms(self) -> bool {
        !matches!(self, Family::Bcc)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Primitive => "primitive",
            Family::Gyroid => "gyroid",
            Family::Diamond => "diamond",
            Family::Iwp => "iwp",
            Family::Bcc => "bcc",
        }
    }

    /// Level-set value at angular coordinates (one period = 2π).
    pub fn level_set(self, x: f64, y: f64, z: f64) -> Result<f64> {
        let (sx, cx) = x.sin_cos();
        let (sy, cy) = y.sin_cos();
        let (sz, cz) = z.sin_cos();
        let v = match self {
            Family::Primitive => cx + cy + cz,
            Family::Gyroid => sx * cy + sy * cz + sz * cx,
            Family::Diamond => sx * sy * sz + sx * cy * cz + cx * sy * cz + cx * cy * sz,
            Family::Iwp => {
                2.0 * (cx * cy + cy * cz + cz * cx)
                    - ((2.0 * x).cos() + (2.0 * y).cos() + (2.0 * z).cos())
            }
            Family::Bcc => {
                return Err(Error::invalid("BCC is a strut lattice, not a level set"));
            }
        };
        Ok(v)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "primitive" | "p" | "schwarzp" => Ok(Family::Primitive),
            "gyroid" | "g" => Ok(Family::Gyroid),
            "diamond" | "d" => Ok(Family::Diamond),
            "iwp" => Ok(Family::Iwp),
            "bcc" => Ok(Family::Bcc),
            other => Err(Error::invalid(format!("unknown lattice family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub family: Family,
    pub cells: (usize, usize, usize),
    /// Voxels per cell edge.
    pub resolution: usize,
    pub relative_density: f64,
    /// TPMS sheet (|phi| <= t) versus network (phi <= t). Ignored for BCC.
    pub sheet: bool,
}

impl LatticeSpec {
    pub fn new(family: Family, resolution: usize, relative_density: f64) -> Self {
        LatticeSpec {
            family,
            cells: (1, 1, 1),
            resolution,
            relative_density,
            sheet: true,
        }
    }

    pub fn with_cells(mut self, nx: usize, ny: usize, nz: usize) -> Self {
        self.cells = (nx, ny, nz);
        self
    }

    pub fn with_sheet(mut self, sheet: bool) -> Self {
        self.sheet = sheet;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (cx, cy, cz) = self.cells;
        if cx == 0 || cy == 0 || cz == 0 {
            return Err(Error::invalid("cell counts must be positive"));
        }
        if self.resolution < 4 {
            return Err(Error::invalid(format!(
                "resolution must be at least 4, got {}",
                self.resolution
            )));
        }
        let rho = self.relative_density;
        if !(rho > 0.01 && rho < 0.99) {
            return Err(Error::invalid(format!(
                "relative density must lie in (0.01, 0.99), got {rho}"
            )));
        }
        Ok(())
    }
}

/// Samples the level set of `family` on one cell at voxel centres,
/// `X = 2π (i + 0.5) / res`. Returned in grid storage order.
pub fn tpms_cell_field(family: Family, res: usize) -> Result<Vec<f64>> {
    family.level_set(0.0, 0.0, 0.0)?;
    let angles: Vec<f64> = (0..res)
        .map(|i| 2.0 * PI * (i as f64 + 0.5) / res as f64)
        .collect();
    let mut field = Vec::with_capacity(res * res * res);
    for &x in &angles {
        for &y in &angles {
            for &z in &angles {
                field.push(family.level_set(x, y, z)?);
            }
        }
    }
    Ok(field)
}

/// Number of samples kept at threshold `t`.
pub fn count_kept(field: &[f64], t: f64, sheet: bool) -> usize {
    if sheet {
        field.iter().filter(|&&v| v.abs() <= t).count()
    } else {
        field.iter().filter(|&&v| v <= t).count()
    }
}

/// Occupancy mask of `field` at threshold `t`.
pub fn threshold_mask(field: &[f64], t: f64, sheet: bool) -> Vec<u8> {
    field
        .iter()
        .map(|&v| {
            let keep = if sheet { v.abs() <= t } else { v <= t };
            u8::from(keep)
        })
        .collect()
}

/// Bisects for the threshold on a monotone "keep if metric <= t" rule.
/// Returns the threshold whose kept fraction is closest to `target`.
fn calibrate(
    lo: f64,
    hi: f64,
    target: f64,
    fraction: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..BISECTION_ITERS {
        if hi - lo < BISECTION_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if fraction(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (f_lo, f_hi) = (fraction(lo), fraction(hi));
    let (t, achieved) = if (f_lo - target).abs() <= (f_hi - target).abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    if (achieved - target).abs() > DENSITY_TOLERANCE {
        return Err(Error::DensityUnattainable { target, achieved });
    }
    Ok((t, achieved))
}

/// Voxelizes a TPMS sheet or network lattice at the requested density.
pub fn generate_tpms(spec: &LatticeSpec) -> Result<VoxelGrid> {
    if !spec.family.is_tpms() {
        return Err(Error::invalid(format!(
            "{} is not a TPMS family",
            spec.family
        )));
    }
    spec.validate()?;
    let res = spec.resolution;
    let field = tpms_cell_field(spec.family, res)?;
    let n = field.len() as f64;
    let frac = |t: f64| count_kept(&field, t, spec.sheet) as f64 / n;
    let (lo, hi) = if spec.sheet {
        (0.0, field.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    } else {
        let min = field.iter().copied().fold(f64::INFINITY, f64::min);
        let max = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    };
    let (t, _) = calibrate(lo, hi, spec.relative_density, frac)?;
    let cell = VoxelGrid::new(res, res, res, threshold_mask(&field, t, spec.sheet))?;
    let (cx, cy, cz) = spec.cells;
    cell.tile(cx, cy, cz)
}

fn segment_distance(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let s = ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2).clamp(0.0, 1.0);
    let d = [ap[0] - s * ab[0], ap[1] - s * ab[1], ap[2] - s * ab[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Distance (in cell-edge units) from each voxel centre of one cell to the
/// nearest BCC strut, with struts of the 26 neighbouring cells included.
pub fn bcc_cell_distance(res: usize) -> Vec<f64> {
    let mut struts = Vec::with_capacity(27 * 8);
    for ox in -1..=1 {
        for oy in -1..=1 {
            for oz in -1..=1 {
                let (ox, oy, oz) = (ox as f64, oy as f64, oz as f64);
                let centre = [ox + 0.5, oy + 0.5, oz + 0.5];
                for corner in 0..8 {
                    let c = [
                        ox + (corner & 1) as f64,
                        oy + ((corner >> 1) & 1) as f64,
                        oz + ((corner >> 2) & 1) as f64,
                    ];
                    struts.push((centre, c));
                }
            }
        }
    }
    let coord = |i: usize| (i as f64 + 0.5) / res as f64;
    let mut dist = Vec::with_capacity(res * res * res);
    for ix in 0..res {
        for iy in 0..res {
            for iz in 0..res {
                let p = [coord(ix), coord(iy), coord(iz)];
                let d = struts
                    .iter()
                    .map(|&(a, b)| segment_distance(p, a, b))
                    .fold(f64::INFINITY, f64::min);
                dist.push(d);
            }
        }
    }
    dist
}

/// Voxelizes a body-centred cubic strut lattice with cylindrical struts
/// (spherical caps at the nodes) at the requested density.
pub fn generate_bcc(spec: &LatticeSpec) -> Result<VoxelGrid> {
    if spec.family != Family::Bcc {
        return Err(Error::invalid(format!("{} is not a strut family", spec.family)));
    }
    spec.validate()?;
    let res = spec.resolution;
    let dist = bcc_cell_distance(res);
    let n = dist.len() as f64;
    let frac = |r: f64| dist.iter().filter(|&&d| d <= r).count() as f64 / n;
    let (r, _) = calibrate(0.0, 3.0_f64.sqrt(), spec.relative_density, frac)?;
    let mask = dist.iter().map(|&d| u8::from(d <= r)).collect();
    let cell = VoxelGrid::new(res, res, res, mask)?;
    let (cx, cy, cz) = spec.cells;
    cell.tile(cx, cy, cz)
}

/// Dispatches to [`generate_tpms`] or [`generate_bcc`] by family.
pub fn generate(spec: &LatticeSpec) -> Result<VoxelGrid> {
    if spec.family.is_tpms() {
        generate_tpms(spec)
    } else {
        generate_bcc(spec)
    }
}

/// Appends fully solid z-layers below and above the grid.
pub fn add_skins(
    grid: &VoxelGrid,
    layers_bottom: usize,
    layers_top: usize,
    material_id: u8,
) -> Result<VoxelGrid> {
    if material_id == 0 {
        return Err(Error::invalid("skin material id must be >= 1"));
    }
    let (nx, ny, nz) = grid.dims();
    let new_nz = nz + layers_bottom + layers_top;
    VoxelGrid::from_fn(nx, ny, new_nz, |ix, iy, iz| {
        if iz < layers_bottom || iz >= layers_bottom + nz {
            material_id
        } else {
            grid.get(ix, iy, iz - layers_bottom)
        }
    })
}

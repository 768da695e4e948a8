//! C ABI over the `platehom` engine.
//!
//! Grids are opaque heap handles created by the `platehom_grid_*`
//! constructors and released with [`platehom_grid_free`]. Every fallible
//! call returns a [`PlatehomStatus`]; on failure the message is kept per
//! thread and can be read with [`platehom_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use platehom::material::multi_material_field;
use platehom::thermal::homogenize_thermal;
use platehom::volume::homogenize_volume;
use platehom::{
    add_skins, homogenize_plate, voxel, Error, Family, LatticeSpec, MaterialField, MaterialTable, PlateGeometry,
    SolverOptions, VoxelGrid,
};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlatehomStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    DensityUnattainable = 3,
    EmptyStructure = 4,
    UnmappedMaterial = 5,
    NotConverged = 6,
    SingularPreconditioner = 7,
    DegenerateNormalStiffness = 8,
    Io = 9,
    Format = 10,
    Panic = 11,
}

/// Lattice families accepted by [`platehom_grid_generate_tpms`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlatehomFamily {
    Primitive = 0,
    Gyroid = 1,
    Diamond = 2,
    Iwp = 3,
}

/// PCG settings. A null pointer selects the defaults (1e-6, 5000).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PlatehomSolverOptions {
    pub tol: f64,
    pub maxiter: usize,
}

/// Opaque voxel grid.
pub struct PlatehomGrid {
    grid: VoxelGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> PlatehomStatus {
    match err {
        Error::InvalidArgument(_) => PlatehomStatus::InvalidArgument,
        Error::DensityUnattainable { .. } => PlatehomStatus::DensityUnattainable,
        Error::EmptyStructure => PlatehomStatus::EmptyStructure,
        Error::UnmappedMaterial(_) => PlatehomStatus::UnmappedMaterial,
        Error::SingularPreconditioner { .. } => PlatehomStatus::SingularPreconditioner,
        Error::DegenerateNormalStiffness(_) => PlatehomStatus::DegenerateNormalStiffness,
        Error::NotConverged { .. } => PlatehomStatus::NotConverged,
        Error::Format(_) | Error::Json(_) => PlatehomStatus::Format,
        Error::Io { .. } => PlatehomStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

/// Runs `f`, records any failure and converts it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PlatehomStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PlatehomStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PlatehomStatus::NullPointer
        }
        Ok(Err(Failure::Engine(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PlatehomStatus::Panic
        }
    }
}

unsafe fn grid_ref<'a>(g: *const PlatehomGrid) -> Result<&'a VoxelGrid, Failure> {
    g.as_ref().map(|h| &h.grid).ok_or(Failure::Null("grid"))
}

unsafe fn emit(out: *mut *mut PlatehomGrid, grid: VoxelGrid) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(PlatehomGrid { grid }));
    Ok(())
}

unsafe fn write_out<const N: usize>(out: *mut f64, values: &[f64; N]) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("output array"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, N);
    Ok(())
}

unsafe fn solver(opts: *const PlatehomSolverOptions) -> Result<SolverOptions, Failure> {
    match opts.as_ref() {
        None => Ok(SolverOptions::default()),
        Some(o) => Ok(SolverOptions::new(o.tol, o.maxiter)?),
    }
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Engine(Error::InvalidArgument("path is not UTF-8".into())))
}

fn flatten<const R: usize, const C: usize, const N: usize>(m: &[[f64; C]; R]) -> [f64; N] {
    std::array::from_fn(|k| m[k / C][k % C])
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn platehom_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn platehom_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates a TPMS lattice at `res` voxels per cell edge. `family` is a
/// [`PlatehomFamily`] value.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn platehom_grid_generate_tpms(
    family: u32,
    res: usize,
    density: f64,
    sheet: bool,
    cells_x: usize,
    cells_y: usize,
    cells_z: usize,
    out: *mut *mut PlatehomGrid,
) -> PlatehomStatus {
    guard(|| {
        let family = match family {
            f if f == PlatehomFamily::Primitive as u32 => Family::Primitive,
            f if f == PlatehomFamily::Gyroid as u32 => Family::Gyroid,
            f if f == PlatehomFamily::Diamond as u32 => Family::Diamond,
            f if f == PlatehomFamily::Iwp as u32 => Family::Iwp,
            f => return Err(Error::InvalidArgument(format!("unknown family {f}")).into()),
        };
        let spec = LatticeSpec::new(family, res, density).with_sheet(sheet).with_cells(cells_x, cells_y, cells_z);
        emit(out, voxel::generate(&spec)?)
    })
}

/// Generates a BCC strut lattice.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn platehom_grid_generate_bcc(
    res: usize,
    density: f64,
    cells_x: usize,
    cells_y: usize,
    cells_z: usize,
    out: *mut *mut PlatehomGrid,
) -> PlatehomStatus {
    guard(|| {
        let spec = LatticeSpec::new(Family::Bcc, res, density).with_cells(cells_x, cells_y, cells_z);
        emit(out, voxel::generate(&spec)?)
    })
}

/// Copies `nx * ny * nz` material ids, index `(ix * ny + iy) * nz + iz`,
/// 0 for void.
///
/// # Safety
/// `data` must be valid for `nx * ny * nz` bytes; `out` for one pointer.
#[no_mangle]
pub unsafe extern "C" fn platehom_grid_from_buffer(
    nx: usize,
    ny: usize,
    nz: usize,
    data: *const u8,
    out: *mut *mut PlatehomGrid,
) -> PlatehomStatus {
    guard(|| {
        if data.is_null() {
            return Err(Failure::Null("data"));
        }
        let n = nx
            .checked_mul(ny)
            .and_then(|v| v.checked_mul(nz))
            .ok_or_else(|| Failure::Engine(Error::InvalidArgument("grid size overflows".into())))?;
        let bytes = std::slice::from_raw_parts(data, n).to_vec();
        emit(out, VoxelGrid::new(nx, ny, nz, bytes)?)
    })
}

/// Reads a `.vxl` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn platehom_grid_read_vxl(path: *const c_char, out: *mut *mut PlatehomGrid) -> PlatehomStatus {
    guard(|| emit(out, VoxelGrid::read_vxl(path_arg(path)?)?))
}

/// Writes a `.vxl` file.
///
/// # Safety
/// `grid` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn platehom_grid_write_vxl(grid: *const PlatehomGrid, path: *const c_char) -> PlatehomStatus {
    guard(|| Ok(grid_ref(grid)?.write_vxl(path_arg(path)?)?))
}

/// New grid with `bottom` and `top` solid layers of material `id` added.
///
/// # Safety
/// `grid` must be a live handle; `out` valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn platehom_grid_add_skins(
    grid: *const PlatehomGrid,
    bottom: usize,
    top: usize,
    id: u8,
    out: *mut *mut PlatehomGrid,
) -> PlatehomStatus {
    guard(|| emit(out, add_skins(grid_ref(grid)?, bottom, top, id)?))
}

/// Grid dimensions and solid fraction. Any output pointer may be null.
///
/// # Safety
/// `grid` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn platehom_grid_info(
    grid: *const PlatehomGrid,
    nx: *mut usize,
    ny: *mut usize,
    nz: *mut usize,
    solid_fraction: *mut f64,
) -> PlatehomStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        let (x, y, z) = g.dims();
        for (p, v) in [(nx, x), (ny, y), (nz, z)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        if let Some(p) = solid_fraction.as_mut() {
            *p = g.solid_fraction();
        }
        Ok(())
    })
}

/// Copies the `nx * ny * nz` material ids into `data`.
///
/// # Safety
/// `grid` must be a live handle; `data` valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn platehom_grid_data(grid: *const PlatehomGrid, data: *mut u8, len: usize) -> PlatehomStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        if data.is_null() {
            return Err(Failure::Null("data"));
        }
        if len < g.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len} bytes, grid has {}", g.len())).into());
        }
        ptr::copy_nonoverlapping(g.data().as_ptr(), data, g.len());
        Ok(())
    })
}

/// Releases a grid. Null is ignored.
///
/// # Safety
/// `grid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn platehom_grid_free(grid: *mut PlatehomGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Plate ABD stiffness of a single-material grid, written row-major to
/// `abd_out[36]`.
///
/// # Safety
/// `grid` must be a live handle, `abd_out` valid for 36 doubles, `opts`
/// null or valid.
#[no_mangle]
pub unsafe extern "C" fn platehom_plate(
    grid: *const PlatehomGrid,
    e: f64,
    nu: f64,
    thickness: f64,
    cells_x: usize,
    cells_y: usize,
    cells_z: usize,
    opts: *const PlatehomSolverOptions,
    abd_out: *mut f64,
) -> PlatehomStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        let geom = PlateGeometry::for_grid(g, thickness, (cells_x, cells_y, cells_z))?;
        let r = homogenize_plate(g, &MaterialField::homogeneous(e, nu)?, &geom, &solver(opts)?)?;
        write_out::<36>(abd_out, &flatten(&r.abd.m))
    })
}

/// Plate ABD stiffness with per-id materials: voxel id `ids[k]` has
/// modulus `moduli[k]` and Poisson ratio `nus[k]`.
///
/// # Safety
/// `ids`, `moduli` and `nus` must be valid for `n` entries; otherwise as
/// [`platehom_plate`].
#[no_mangle]
pub unsafe extern "C" fn platehom_plate_multi(
    grid: *const PlatehomGrid,
    ids: *const u8,
    moduli: *const f64,
    nus: *const f64,
    n: usize,
    thickness: f64,
    cells_x: usize,
    cells_y: usize,
    cells_z: usize,
    opts: *const PlatehomSolverOptions,
    abd_out: *mut f64,
) -> PlatehomStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        if n > 0 && (ids.is_null() || moduli.is_null() || nus.is_null()) {
            return Err(Failure::Null("material arrays"));
        }
        let mut table = MaterialTable::default();
        for k in 0..n {
            table.insert(*ids.add(k), *moduli.add(k), *nus.add(k));
        }
        let active: Vec<u8> = g.data().iter().copied().filter(|&v| v != 0).collect();
        let field = multi_material_field(&active, &table)?;
        let geom = PlateGeometry::for_grid(g, thickness, (cells_x, cells_y, cells_z))?;
        let r = homogenize_plate(g, &field, &geom, &solver(opts)?)?;
        write_out::<36>(abd_out, &flatten(&r.abd.m))
    })
}

/// Fully periodic effective elasticity (Voigt order e11, e22, e33, g23,
/// g13, g12) of a cell `lx x ly x lz`, row-major in `c_out[36]`.
///
/// # Safety
/// As [`platehom_plate`], with `c_out` valid for 36 doubles.
#[no_mangle]
pub unsafe extern "C" fn platehom_volume(
    grid: *const PlatehomGrid,
    e: f64,
    nu: f64,
    lx: f64,
    ly: f64,
    lz: f64,
    opts: *const PlatehomSolverOptions,
    c_out: *mut f64,
) -> PlatehomStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        let r = homogenize_volume(g, &MaterialField::homogeneous(e, nu)?, (lx, ly, lz), &solver(opts)?)?;
        write_out::<36>(c_out, &flatten(&r.c_h.c))
    })
}

/// Thickness-integrated in-plane conductance, row-major in `k_out[4]`.
///
/// # Safety
/// As [`platehom_plate`], with `k_out` valid for 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn platehom_thermal(
    grid: *const PlatehomGrid,
    k_s: f64,
    thickness: f64,
    cells_x: usize,
    cells_y: usize,
    cells_z: usize,
    opts: *const PlatehomSolverOptions,
    k_out: *mut f64,
) -> PlatehomStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        let geom = PlateGeometry::for_grid(g, thickness, (cells_x, cells_y, cells_z))?;
        let r = homogenize_thermal(g, k_s, &geom, &solver(opts)?)?;
        write_out::<4>(k_out, &flatten(&r.k_hom))
    })
}

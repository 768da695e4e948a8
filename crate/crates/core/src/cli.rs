//! Command-line front end.
//!
//! Results go to stdout as canonical JSON (or CSV for sweeps); tables and
//! progress lines go to stderr. Exit codes: 0 success, 2 bad arguments,
//! 3 generation failure, 4 solver failure, 5 I/O failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::material::{multi_material_field, MaterialField, MaterialTable};
use crate::plate::{homogenize_plate, PlateGeometry};
use crate::report::{
    abd_value, canonical_json, matrix_csv, matrix_value, plate_json, pretty_matrix, thermal_json, volume_json,
    RunMeta,
};
use crate::solver::{SolverOptions, DEFAULT_MAXITER, DEFAULT_TOL};
use crate::sweep::{compare, convergence_csv, convergence_sweep, size_effect_csv, size_effect_sweep, SweepRange};
use crate::thermal::homogenize_thermal;
use crate::volume::{analytic_abd, homogenize_volume, static_condensation};
use crate::voxel::{add_skins, generate, Family, LatticeSpec, VoxelGrid};

pub const EXIT_ARGS: i32 = 2;
pub const EXIT_GENERATION: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "HOMOG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "platehom", version, about = "Voxel homogenization of lattice plates")]
pub struct Cli {
    /// Worker threads (default: HOMOG_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a lattice voxel file.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Plate (ABD) stiffness of a voxel file.
    Plate(PlateArgs),
    /// Fully periodic stiffness and its plate reduction.
    Volume(PlateArgs),
    /// In-plane conductance of a voxel file.
    Thermal(ThermalArgs),
    /// A00 and D00 against resolution.
    SweepConvergence(ConvergenceArgs),
    /// Plate stiffness normalized by the volume prediction against layer count.
    SweepSizeEffect(SizeEffectArgs),
    /// Plate and volume results side by side with relative errors.
    Compare(PlateArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenerateCmd {
    Tpms(GenerateArgs),
    Bcc(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[arg(long, default_value = "primitive")]
    pub family: String,
    /// Voxels per cell edge.
    #[arg(long, default_value_t = 96)]
    pub res: usize,
    #[arg(long)]
    pub density: f64,
    /// Sheet variant (the default for TPMS).
    #[arg(long, conflicts_with = "network")]
    pub sheet: bool,
    /// Network (solid-region) variant.
    #[arg(long)]
    pub network: bool,
    #[arg(long, num_args = 3, value_names = ["NX", "NY", "NZ"], default_values_t = [1, 1, 1])]
    pub cells: Vec<usize>,
}

impl LatticeArgs {
    fn spec(&self, family: Family) -> Result<LatticeSpec> {
        let c = cells_tuple(&self.cells)?;
        let spec = LatticeSpec::new(family, self.res, self.density)
            .with_cells(c.0, c.1, c.2)
            .with_sheet(!self.network);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub cg_tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAXITER)]
    pub cg_maxiter: usize,
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions> {
        SolverOptions::new(self.cg_tol, self.cg_maxiter)
    }
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub thickness: f64,
    #[arg(long, num_args = 3, value_names = ["NX", "NY", "NZ"], default_values_t = [1, 1, 1])]
    pub cells: Vec<usize>,
    /// Solid layers added below and above before analysis.
    #[arg(long, num_args = 2, value_names = ["BOTTOM", "TOP"])]
    pub skin: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1)]
    pub skin_material: u8,
}

impl GeometryArgs {
    fn load(&self) -> Result<(VoxelGrid, PlateGeometry)> {
        let mut grid = VoxelGrid::read_vxl(&self.input)?;
        if let Some(s) = &self.skin {
            grid = add_skins(&grid, s[0], s[1], self.skin_material)?;
        }
        let geom = PlateGeometry::for_grid(&grid, self.thickness, cells_tuple(&self.cells)?)?;
        Ok((grid, geom))
    }
}

#[derive(Debug, Args)]
pub struct MaterialArgs {
    /// Young's modulus for all solid voxels.
    #[arg(long = "E", alias = "e")]
    pub e: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    pub nu: f64,
    /// JSON table {"id": {"E": .., "nu": ..}} keyed by voxel value.
    #[arg(long)]
    pub materials: Option<PathBuf>,
    /// Relabel solid voxels as BELOW / ABOVE by mid-plane side first.
    #[arg(long, num_args = 2, value_names = ["BELOW", "ABOVE"])]
    pub split_mid_plane: Option<Vec<u8>>,
}

impl MaterialArgs {
    fn field(&self, grid: &VoxelGrid) -> Result<(VoxelGrid, MaterialField)> {
        let grid = match &self.split_mid_plane {
            Some(ids) => grid.split_at_mid_plane(ids[0], ids[1])?,
            None => grid.clone(),
        };
        let field = match (&self.materials, self.e) {
            (Some(path), None) => {
                let table = MaterialTable::read(path)?;
                multi_material_field(&grid.active_ids(), &table)?
            }
            (None, Some(e)) => MaterialField::homogeneous(e, self.nu)?,
            (Some(_), Some(_)) => return Err(Error::invalid("give either --E or --materials, not both")),
            (None, None) => return Err(Error::invalid("a material is required: --E/--nu or --materials")),
        };
        Ok((grid, field))
    }
}

#[derive(Debug, Args)]
pub struct PlateArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub material: MaterialArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also write the 6x6 result as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write JSON here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThermalArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Solid conductivity.
    #[arg(long)]
    pub k: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long = "E", alias = "e")]
    pub e: f64,
    #[arg(long, default_value_t = 0.3)]
    pub nu: f64,
    #[arg(long, default_value_t = 10.0)]
    pub thickness: f64,
    #[arg(long = "min")]
    pub min: usize,
    #[arg(long = "max")]
    pub max: usize,
    #[arg(long, default_value_t = 5)]
    pub step: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SizeEffectArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long = "E", alias = "e", default_value_t = 1.0)]
    pub e: f64,
    #[arg(long, default_value_t = 0.3)]
    pub nu: f64,
    #[arg(long, default_value_t = 10.0)]
    pub thickness: f64,
    #[arg(long, default_value_t = 1)]
    pub nz_min: usize,
    #[arg(long, default_value_t = 8)]
    pub nz_max: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn cells_tuple(c: &[usize]) -> Result<(usize, usize, usize)> {
    match c {
        [x, y, z] if *x > 0 && *y > 0 && *z > 0 => Ok((*x, *y, *z)),
        _ => Err(Error::invalid("--cells needs three positive counts")),
    }
}

fn family(name: &str) -> Result<Family> {
    name.parse()
}

/// Maps an error to its process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::UnmappedMaterial(_) | Error::EmptyStructure => EXIT_ARGS,
        Error::NotConverged { .. } | Error::SingularPreconditioner { .. } | Error::DegenerateNormalStiffness(_) => {
            EXIT_SOLVER
        }
        Error::Io { .. } | Error::Format(_) | Error::Json(_) => EXIT_IO,
        Error::DensityUnattainable { .. } => EXIT_GENERATION,
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn json_line(v: &Value) -> String {
    let mut s = canonical_json(v);
    s.push('\n');
    s
}

fn configure_threads(requested: Option<usize>) -> Result<()> {
    let n = match requested {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::invalid("thread count must be positive"));
        }
        // A pool may already exist when embedded; that is not an error here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run_generate(cmd: &GenerateCmd) -> Result<()> {
    let (args, fam) = match cmd {
        GenerateCmd::Tpms(a) => {
            let f = family(&a.lattice.family)?;
            if !f.is_tpms() {
                return Err(Error::invalid(format!("{f} is not a TPMS family")));
            }
            (a, f)
        }
        GenerateCmd::Bcc(a) => (a, Family::Bcc),
    };
    let spec = args.lattice.spec(fam)?;
    let grid = generate(&spec)?;
    grid.write_vxl(&args.output)?;
    let (nx, ny, nz) = grid.dims();
    println!(
        "{}",
        canonical_json(&serde_json::json!({
            "dims": [nx, ny, nz],
            "density_achieved": grid.solid_fraction(),
            "output": args.output.display().to_string(),
        }))
    );
    Ok(())
}

fn run_plate(args: &PlateArgs) -> Result<()> {
    let (grid, geom) = args.geometry.load()?;
    let (grid, field) = args.material.field(&grid)?;
    let opts = args.solver.options()?;
    eprintln!("plate: {:?} voxels, {} solid", grid.dims(), grid.solid_count());
    let r = homogenize_plate(&grid, &field, &geom, &opts)?;
    let meta = RunMeta {
        resolution: Some(grid.nx() / geom.cells.0),
        density_achieved: Some(grid.solid_fraction()),
    };
    eprint!("{}", pretty_matrix(&r.abd.m));
    eprintln!("wall time {:.2} s, asymmetry {:.3e}", r.wall_time_s, r.asymmetry());
    if let Some(p) = &args.csv {
        write_file(p, &matrix_csv(&r.abd.m))?;
    }
    emit(&json_line(&plate_json(&r, &meta)), args.output.as_deref())
}

fn run_volume(args: &PlateArgs) -> Result<()> {
    let (grid, geom) = args.geometry.load()?;
    let (grid, field) = args.material.field(&grid)?;
    let opts = args.solver.options()?;
    let r = homogenize_volume(&grid, &field, (geom.lx, geom.ly, geom.lz), &opts)?;
    let q = static_condensation(&r.c_h)?;
    let abd = analytic_abd(&q, geom.thickness)?;
    eprint!("{}", pretty_matrix(&r.c_h.c));
    if let Some(p) = &args.csv {
        write_file(p, &matrix_csv(&abd.m))?;
    }
    emit(&json_line(&volume_json(&r, &q, &abd)), args.output.as_deref())
}

fn run_thermal(args: &ThermalArgs) -> Result<()> {
    let (grid, geom) = args.geometry.load()?;
    let opts = args.solver.options()?;
    let r = homogenize_thermal(&grid, args.k, &geom, &opts)?;
    eprint!("{}", pretty_matrix(&r.k_hom));
    if let Some(p) = &args.csv {
        write_file(p, &matrix_csv(&r.k_hom))?;
    }
    emit(&json_line(&thermal_json(&r)), args.output.as_deref())
}

fn run_convergence(args: &ConvergenceArgs) -> Result<()> {
    let spec = args.lattice.spec(family(&args.lattice.family)?)?;
    let range = SweepRange::new(args.min, args.max, args.step)?;
    let opts = args.solver.options()?;
    let rows = convergence_sweep(&spec, args.e, args.nu, args.thickness, range, &opts)?;
    for r in &rows {
        if let Err(msg) = &r.outcome {
            eprintln!("N = {}: {msg}", r.n);
        }
    }
    emit(&convergence_csv(&rows), args.output.as_deref())
}

fn run_size_effect(args: &SizeEffectArgs) -> Result<()> {
    let spec = args.lattice.spec(family(&args.lattice.family)?)?.with_cells(1, 1, 1);
    let range = SweepRange::new(args.nz_min, args.nz_max, 1)?;
    let opts = args.solver.options()?;
    let cell = generate(&spec)?;
    let rows = size_effect_sweep(&cell, args.e, args.nu, args.thickness, range, &opts)?;
    for r in &rows {
        if let Err(msg) = &r.outcome {
            eprintln!("Nz = {}: {msg}", r.nz);
        }
    }
    emit(&size_effect_csv(&rows), args.output.as_deref())
}

fn run_compare(args: &PlateArgs) -> Result<()> {
    let (grid, geom) = args.geometry.load()?;
    let (grid, field) = args.material.field(&grid)?;
    let opts = args.solver.options()?;
    let c = compare(&grid, &field, &geom, &opts)?;
    let errors = Value::Array(
        c.relative_error
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|e| e.and_then(serde_json::Number::from_f64).map(Value::Number).unwrap_or(Value::Null))
                        .collect(),
                )
            })
            .collect(),
    );
    let mut m = Map::new();
    m.insert("plate".into(), abd_value(&c.plate.abd));
    m.insert("volume".into(), abd_value(&c.volume_abd));
    m.insert("C_H".into(), matrix_value(&c.volume.c_h.c));
    m.insert("relative_error".into(), errors);
    eprintln!("plate:");
    eprint!("{}", pretty_matrix(&c.plate.abd.m));
    eprintln!("volume:");
    eprint!("{}", pretty_matrix(&c.volume_abd.m));
    if let Some(p) = &args.csv {
        write_file(p, &matrix_csv(&c.volume_abd.m))?;
    }
    emit(&json_line(&Value::Object(m)), args.output.as_deref())
}

/// Runs a parsed command line and returns the exit code.
pub fn execute(cli: &Cli) -> i32 {
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return EXIT_ARGS;
    }
    let outcome = match &cli.command {
        Command::Generate(g) => run_generate(g),
        Command::Plate(a) => run_plate(a),
        Command::Volume(a) => run_volume(a),
        Command::Thermal(a) => run_thermal(a),
        Command::SweepConvergence(a) => run_convergence(a),
        Command::SweepSizeEffect(a) => run_size_effect(a),
        Command::Compare(a) => run_compare(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` (including the program name) and runs them.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ARGS } else { 0 };
            let _ = e.print();
            code
        }
    }
}

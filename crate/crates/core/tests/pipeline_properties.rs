use nalgebra::{DMatrix, SymmetricEigen};
use platehom::assembly::{assemble_loads, assemble_stiffness, build_macro_loads, StiffnessSet};
use platehom::dofmap::build_dof_map;
use platehom::element::ElementGeometry;
use platehom::material::{isotropic_elasticity, multi_material_field, MaterialTable};
use platehom::report::{abd_value, canonical_json};
use platehom::solver::pcg_block;
use platehom::sparse::CsrMatrix;
use platehom::thermal::homogenize_thermal;
use platehom::volume::{analytic_abd, homogenize_volume, static_condensation};
use platehom::*;
use proptest::prelude::*;

const H: f64 = 10.0;

fn tight() -> SolverOptions {
    SolverOptions::new(1e-10, 20_000).unwrap()
}

fn geometry(grid: &VoxelGrid) -> PlateGeometry {
    PlateGeometry::for_grid(grid, H, (1, 1, 1)).unwrap()
}

fn dense(k: &CsrMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(k.nrows(), k.ncols());
    for i in 0..k.nrows() {
        for p in k.row_ptr()[i]..k.row_ptr()[i + 1] {
            m[(i, k.col_idx()[p] as usize)] += k.values()[p];
        }
    }
    m
}

fn porous_grid(dims: (usize, usize, usize)) -> impl Strategy<Value = VoxelGrid> {
    let n = dims.0 * dims.1 * dims.2;
    prop::collection::vec(prop::bool::weighted(0.85), n).prop_filter_map("needs solid", move |bits| {
        let data: Vec<u8> = bits.into_iter().map(u8::from).collect();
        let g = VoxelGrid::new(dims.0, dims.1, dims.2, data).ok()?;
        (g.solid_count() > 0).then_some(g)
    })
}

fn max_rel_diff(a: &[[f64; 6]; 6], b: &[[f64; 6]; 6]) -> f64 {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut d = 0.0f64;
    for i in 0..6 {
        for j in 0..6 {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn assembled_stiffness_translation_null_and_psd(grid in porous_grid((3, 3, 2))) {
        let geom = geometry(&grid);
        let geo = ElementGeometry::new(geom.dx, geom.dy, geom.dz).unwrap();
        let map = build_dof_map(&grid, geom.dx, geom.dy, geom.dz, H).unwrap();
        let c = isotropic_elasticity(7.0, 0.3).unwrap();
        let k = assemble_stiffness(&StiffnessSet::Shared(geo.stiffness(&c)), &map);
        let m = dense(&k);
        let scale = m.amax();
        for comp in 0..3 {
            let t = DMatrix::from_fn(k.ncols(), 1, |i, _| if i % 3 == comp { 1.0 } else { 0.0 });
            prop_assert!((&m * t).amax() <= 1e-12 * scale);
        }
        prop_assert!((&m - m.transpose()).amax() <= 1e-14 * scale);
        let ev = SymmetricEigen::new(m).eigenvalues;
        prop_assert!(ev.min() >= -1e-10 * scale);
    }

    #[test]
    fn plate_loads_are_self_equilibrated(grid in porous_grid((3, 3, 3))) {
        let geom = geometry(&grid);
        let geo = ElementGeometry::new(geom.dx, geom.dy, geom.dz).unwrap();
        let map = build_dof_map(&grid, geom.dx, geom.dy, geom.dz, H).unwrap();
        let field = MaterialField::homogeneous(5.0, 0.25).unwrap();
        let f = assemble_loads(&geo, &field, &build_macro_loads(&map), &map).unwrap();
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for case in 0..6 {
            for comp in 0..3 {
                let s: f64 = (0..map.total_dofs / 3).map(|n| f[(3 * n + comp) * 6 + case]).sum();
                prop_assert!(s.abs() <= 1e-12 * scale.max(1e-300), "case {case} comp {comp}: {s}");
            }
        }
    }

    #[test]
    fn identical_per_element_tensors_match_homogeneous(grid in porous_grid((3, 2, 2))) {
        let geom = geometry(&grid);
        let homo = MaterialField::homogeneous(3.0, 0.2).unwrap();
        let table = MaterialTable::single(1, 3.0, 0.2);
        let hetero = multi_material_field(&grid.active_ids(), &table).unwrap();
        let a = homogenize_plate(&grid, &homo, &geom, &SolverOptions::default()).unwrap();
        let b = homogenize_plate(&grid, &hetero, &geom, &SolverOptions::default()).unwrap();
        prop_assert_eq!(a.raw, b.raw);
    }

    #[test]
    fn plate_result_symmetric_and_material_linear(grid in porous_grid((3, 3, 3)), a in 0.5f64..20.0) {
        let geom = geometry(&grid);
        let f1 = MaterialField::homogeneous(1.0, 0.3).unwrap();
        let fa = MaterialField::homogeneous(a, 0.3).unwrap();
        let r1 = homogenize_plate(&grid, &f1, &geom, &tight()).unwrap();
        let ra = homogenize_plate(&grid, &fa, &geom, &tight()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                prop_assert_eq!(r1.abd.m[i][j], r1.abd.m[j][i]);
            }
        }
        let scaled = r1.abd.m.map(|row| row.map(|v| a * v));
        prop_assert!(max_rel_diff(&scaled, &ra.abd.m) <= 1e-9);
    }

    #[test]
    fn quarter_turn_swaps_in_plane_axes(grid in porous_grid((4, 4, 2))) {
        let geom = geometry(&grid);
        let field = MaterialField::homogeneous(1.0, 0.3).unwrap();
        let r = homogenize_plate(&grid, &field, &geom, &tight()).unwrap().abd.m;
        let rot = grid.rotate_z90();
        let q = homogenize_plate(&rot, &field, &geometry(&rot), &tight()).unwrap().abd.m;
        let scale = r.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        // x' = -y, y' = x: normal terms swap, shear-normal couplings flip sign
        let pairs = [((0, 0), (1, 1), 1.0), ((0, 1), (0, 1), 1.0), ((2, 2), (2, 2), 1.0),
            ((0, 2), (1, 2), -1.0), ((3, 3), (4, 4), 1.0), ((3, 4), (3, 4), 1.0),
            ((5, 5), (5, 5), 1.0), ((3, 5), (4, 5), -1.0), ((0, 3), (1, 4), 1.0)];
        for ((i, j), (k, l), sign) in pairs {
            prop_assert!((q[i][j] - sign * r[k][l]).abs() <= 1e-7 * scale, "{i}{j}: {} vs {}", q[i][j], r[k][l]);
        }
    }
}

#[test]
fn solid_plate_membrane_exact_for_any_nz() {
    let (e, nu) = (1.0, 0.3);
    let q00 = e / (1.0 - nu * nu);
    for nz in [4, 8, 16] {
        let grid = VoxelGrid::filled(4, 4, nz, 1).unwrap();
        let r = homogenize_plate(&grid, &MaterialField::homogeneous(e, nu).unwrap(), &geometry(&grid), &tight()).unwrap();
        let a = r.abd.a();
        assert!((a[0][0] / (q00 * H) - 1.0).abs() < 1e-6, "nz {nz}: {}", a[0][0]);
        assert!((a[0][1] / (nu * q00 * H) - 1.0).abs() < 1e-6);
        assert!((a[2][2] / (e / (2.0 * (1.0 + nu)) * H) - 1.0).abs() < 1e-6);
        assert!(r.abd.max_abs_b() <= 1e-8 * a[0][0]);
    }
}

#[test]
fn mirror_symmetric_lattices_decouple() {
    for (fam, rho) in [(Family::Primitive, 0.25), (Family::Iwp, 0.15)] {
        let grid = generate_tpms(&LatticeSpec::new(fam, 16, rho)).unwrap();
        let r = homogenize_plate(&grid, &MaterialField::homogeneous(1.0, 0.3).unwrap(), &geometry(&grid), &SolverOptions::default())
            .unwrap();
        let a = r.abd.a().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let d = r.abd.d().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(r.abd.max_abs_b() <= 1e-3 * a.max(d / H), "{fam}: B = {}", r.abd.max_abs_b());
    }
}

#[test]
fn repeated_runs_serialize_identically() {
    let grid = generate_tpms(&LatticeSpec::new(Family::Gyroid, 16, 0.3)).unwrap();
    let field = MaterialField::homogeneous(2.0, 0.3).unwrap();
    let run = || {
        let r = homogenize_plate(&grid, &field, &geometry(&grid), &SolverOptions::default()).unwrap();
        (canonical_json(&abd_value(&r.abd)), r.report)
    };
    assert_eq!(run(), run());
}

#[test]
fn result_independent_of_thread_count() {
    let grid = generate_tpms(&LatticeSpec::new(Family::Primitive, 16, 0.25)).unwrap();
    let field = MaterialField::homogeneous(1.0, 0.3).unwrap();
    let solve = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| homogenize_plate(&grid, &field, &geometry(&grid), &SolverOptions::default()).unwrap())
    };
    let (a, b) = (solve(1), solve(3));
    assert_eq!(a.raw, b.raw);
    assert_eq!(a.report, b.report);
}

#[test]
fn block_solve_matches_single_column_solves() {
    // 1D chain with a weak spring to ground
    let n = 40;
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0 + 1e-3));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
    }
    let k = CsrMatrix::from_triplets(n, n, &t).unwrap();
    let nc = 3;
    let b: Vec<f64> = (0..n * nc).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    let opts = SolverOptions::new(1e-9, 1000).unwrap();
    let (x, rep) = pcg_block(&k, &b, nc, &opts).unwrap();
    for c in 0..nc {
        let bc: Vec<f64> = (0..n).map(|i| b[i * nc + c]).collect();
        let (xc, rc) = pcg_block(&k, &bc, 1, &opts).unwrap();
        assert_eq!(rc.iterations[0], rep.iterations[c]);
        for i in 0..n {
            assert_eq!(xc[i], x[i * nc + c]);
        }
    }
}

#[test]
fn empty_grid_rejected() {
    let grid = VoxelGrid::filled(2, 2, 2, 0).unwrap();
    let field = MaterialField::homogeneous(1.0, 0.3).unwrap();
    let err = homogenize_plate(&grid, &field, &geometry(&grid), &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::EmptyStructure), "{err}");
}

#[test]
fn unmapped_material_rejected() {
    let grid = VoxelGrid::from_fn(2, 2, 2, |_, _, z| 1 + z as u8).unwrap();
    let table = MaterialTable::single(1, 1.0, 0.3);
    assert!(matches!(multi_material_field(&grid.active_ids(), &table), Err(Error::UnmappedMaterial(2))));
}

#[test]
fn laminate_volume_bounds() {
    // z-stacked layers E = 1 and 2, nu = 0: normal stiffness is the harmonic
    // mean, in-plane stiffness the arithmetic mean
    let grid = VoxelGrid::from_fn(2, 2, 4, |_, _, z| if z < 2 { 1 } else { 2 }).unwrap();
    let mut table = MaterialTable::single(1, 1.0, 0.0);
    table.insert(2, 2.0, 0.0);
    let field = multi_material_field(&grid.active_ids(), &table).unwrap();
    let r = homogenize_volume(&grid, &field, (1.0, 1.0, 1.0), &tight()).unwrap();
    assert!((r.c_h.c[2][2] - 4.0 / 3.0).abs() < 1e-8, "{}", r.c_h.c[2][2]);
    assert!((r.c_h.c[0][0] - 1.5).abs() < 1e-8, "{}", r.c_h.c[0][0]);
    assert!((r.c_h.c[1][1] - 1.5).abs() < 1e-8);
}

#[test]
fn disconnected_layers_carry_no_normal_load() {
    let grid = VoxelGrid::from_fn(2, 2, 4, |_, _, z| u8::from(z % 2 == 0)).unwrap();
    let field = MaterialField::homogeneous(1.0, 0.3).unwrap();
    let r = homogenize_volume(&grid, &field, (1.0, 1.0, 1.0), &SolverOptions::default()).unwrap();
    assert!(r.c_h.c[2][2].abs() < 1e-6, "{}", r.c_h.c[2][2]);
    assert!(r.c_h.c[0][0] > 0.1);
}

#[test]
fn volume_result_below_voigt_bound() {
    let grid = generate_tpms(&LatticeSpec::new(Family::Gyroid, 16, 0.3)).unwrap();
    let field = MaterialField::homogeneous(1.0, 0.3).unwrap();
    let r = homogenize_volume(&grid, &field, (1.0, 1.0, 1.0), &SolverOptions::default()).unwrap();
    let c = isotropic_elasticity(1.0, 0.3).unwrap();
    let rho = grid.solid_fraction();
    let ch = DMatrix::from_fn(6, 6, |i, j| r.c_h.c[i][j]);
    let bound = DMatrix::from_fn(6, 6, |i, j| rho * c.c[i][j]);
    assert!(SymmetricEigen::new(ch.clone()).eigenvalues.min() >= -1e-9);
    assert!(SymmetricEigen::new(bound - ch).eigenvalues.min() >= -1e-6);
}

#[test]
fn solid_plate_matches_volume_reduction() {
    let grid = VoxelGrid::filled(4, 4, 4, 1).unwrap();
    let field = MaterialField::homogeneous(1.0, 0.3).unwrap();
    let geom = geometry(&grid);
    let plate = homogenize_plate(&grid, &field, &geom, &tight()).unwrap();
    let vol = homogenize_volume(&grid, &field, (geom.lx, geom.ly, geom.lz), &tight()).unwrap();
    let abd = analytic_abd(&static_condensation(&vol.c_h).unwrap(), H).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let (p, v) = (plate.abd.m[i][j], abd.m[i][j]);
            assert!((p - v).abs() <= 1e-6 * abd.m[0][0], "A{i}{j}: {p} vs {v}");
            let (dp, dv) = (abd.m[i + 3][j + 3], abd.m[i][j] * H * H / 12.0);
            assert!((dp - dv).abs() <= 1e-12 * dv.abs().max(1.0));
        }
    }
}

#[test]
fn thermal_symmetry_linearity_and_bounds() {
    let grid = generate_tpms(&LatticeSpec::new(Family::Primitive, 16, 0.25)).unwrap();
    let geom = geometry(&grid);
    let r1 = homogenize_thermal(&grid, 1.0, &geom, &tight()).unwrap();
    let r3 = homogenize_thermal(&grid, 3.0, &geom, &tight()).unwrap();
    assert!((r1.k_hom[0][0] - r1.k_hom[1][1]).abs() <= 1e-8 * r1.k_hom[0][0]);
    for i in 0..2 {
        assert!(r1.k_hom[i][i] > 0.0 && r1.k_hom[i][i] <= H);
        for j in 0..2 {
            assert!((r3.k_hom[i][j] - 3.0 * r1.k_hom[i][j]).abs() <= 1e-9 * r3.k_hom[0][0]);
        }
    }
}

//! Global stiffness, macroscopic load modes and right-hand sides.

use crate::dofmap::DofMap;
use crate::element::{ElementGeometry, Mat24};
use crate::error::Result;
use crate::material::{Mat6, MaterialField};
use crate::sparse::{assemble, CsrMatrix};

/// Number of plate load cases: three membrane strains, three curvatures.
pub const PLATE_CASES: usize = 6;

/// Element stiffness matrices for the active elements.
#[derive(Debug, Clone)]
pub enum StiffnessSet {
    /// One matrix shared by every element.
    Shared(Box<Mat24>),
    /// Distinct matrices plus, per element, the index of its matrix.
    Palette { kes: Vec<Box<Mat24>>, index: Vec<u32> },
    /// One matrix per element.
    PerElement(Vec<Box<Mat24>>),
}

impl StiffnessSet {
    pub fn from_field(geo: &ElementGeometry, field: &MaterialField, n_active: usize) -> Result<Self> {
        field.check_len(n_active)?;
        Ok(match field.shared_tensor() {
            Some(c) => StiffnessSet::Shared(geo.stiffness(c)),
            None => {
                let (tensors, index) = field.palette(n_active);
                let kes = tensors.iter().map(|c| geo.stiffness(c)).collect();
                StiffnessSet::Palette { kes, index }
            }
        })
    }

    #[inline]
    pub fn get(&self, e: usize) -> &Mat24 {
        match self {
            StiffnessSet::Shared(ke) => ke,
            StiffnessSet::Palette { kes, index } => &kes[index[e] as usize],
            StiffnessSet::PerElement(kes) => &kes[e],
        }
    }
}

/// Sums element stiffness matrices into a `total_dofs x total_dofs` CSR matrix.
pub fn assemble_stiffness(set: &StiffnessSet, map: &DofMap) -> CsrMatrix {
    if let StiffnessSet::PerElement(kes) = set {
        assert_eq!(kes.len(), map.n_active(), "one stiffness matrix per active element");
    }
    let nodes: Vec<[usize; 8]> = (0..map.n_active()).map(|e| map.nodes(e)).collect();
    assemble(map.total_dofs / 3, 3, &nodes, |e| set.get(e).as_flattened())
}

/// Per-element macroscopic strain for each load case.
///
/// Column `c` of `e_macro[e]` is the Voigt strain imposed on element `e`
/// under case `c`: unit `e11`, `e22`, `g12` for c = 0..3 and
/// `z * (k11, k22, k12)` for c = 3..6.
#[derive(Debug, Clone)]
pub struct MacroLoadSet {
    pub e_macro: Vec<Mat6>,
}

impl MacroLoadSet {
    /// Strain column for element `e`, case `c`.
    pub fn column(&self, e: usize, c: usize) -> [f64; 6] {
        std::array::from_fn(|i| self.e_macro[e][i][c])
    }
}

/// Maps mid-surface strain and curvature to element strain at height `z`.
pub fn macro_strain_operator(z: f64) -> Mat6 {
    let mut m = [[0.0; 6]; 6];
    m[0][0] = 1.0;
    m[1][1] = 1.0;
    m[5][2] = 1.0;
    m[0][3] = z;
    m[1][4] = z;
    m[5][5] = z;
    m
}

pub fn build_macro_loads(map: &DofMap) -> MacroLoadSet {
    MacroLoadSet {
        e_macro: map.z_active.iter().map(|&z| macro_strain_operator(z)).collect(),
    }
}

/// Six unit Voigt strains, the same for every element (volume homogenization).
pub fn unit_strain_loads(n_active: usize) -> MacroLoadSet {
    let mut eye = [[0.0; 6]; 6];
    for (i, row) in eye.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    MacroLoadSet {
        e_macro: vec![eye; n_active],
    }
}

/// Right-hand sides `f = sum_e sum_g B_g^T C_e E_e |J|`, scattered by the
/// DOF map. `C_e` are the dimensionless tensors of `field`. Returned with the six cases interleaved, `f[dof * 6 + c]`.
pub fn assemble_loads(
    geo: &ElementGeometry,
    field: &MaterialField,
    loads: &MacroLoadSet,
    map: &DofMap,
) -> Result<Vec<f64>> {
    field.check_len(map.n_active())?;
    assert_eq!(loads.e_macro.len(), map.n_active());
    let nc = PLATE_CASES;
    let mut f = vec![0.0; map.total_dofs * nc];
    for (e, row) in map.edof.iter().enumerate() {
        let c = field.tensor(e);
        let em = &loads.e_macro[e];
        // initial stress per case: s[i][case] = sum_k C[i][k] E[k][case]
        let mut s = [[0.0; 6]; 6];
        for i in 0..6 {
            for k in 0..6 {
                let cik = c.c[i][k];
                if cik != 0.0 {
                    for case in 0..nc {
                        s[i][case] += cik * em[k][case];
                    }
                }
            }
        }
        let mut fe = [[0.0; 6]; 24];
        for b in &geo.bs {
            for (d, fd) in fe.iter_mut().enumerate() {
                for i in 0..6 {
                    let bid = b[i][d];
                    if bid != 0.0 {
                        for case in 0..nc {
                            fd[case] += bid * s[i][case] * geo.det_j;
                        }
                    }
                }
            }
        }
        for (d, &dof) in row.iter().enumerate() {
            for case in 0..nc {
                f[dof * nc + case] += fe[d][case];
            }
        }
    }
    Ok(f)
}

/// Sorted distinct DOFs referenced by `edof`, minus the `anchors` smallest.
pub fn anchored_active_dofs<'a>(
    rows: impl Iterator<Item = &'a [usize]>,
    total_dofs: usize,
    anchors: usize,
) -> Vec<usize> {
    let mut seen = vec![false; total_dofs];
    for row in rows {
        for &d in row {
            seen[d] = true;
        }
    }
    seen.iter()
        .enumerate()
        .filter_map(|(d, &s)| s.then_some(d))
        .skip(anchors)
        .collect()
}

/// Assembled linear system with several interleaved right-hand sides.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub k: CsrMatrix,
    /// `total_dofs x ncols`, row-major.
    pub f: Vec<f64>,
    pub ncols: usize,
    /// DOFs solved for: referenced DOFs minus the anchored ones.
    pub active_dofs: Vec<usize>,
}

impl GlobalSystem {
    pub fn total_dofs(&self) -> usize {
        self.k.nrows
    }
}

/// Assembles stiffness and the six plate load cases. The three smallest
/// referenced DOFs are anchored to remove rigid translations.
pub fn assemble_plate_system(
    geo: &ElementGeometry,
    field: &MaterialField,
    map: &DofMap,
    loads: &MacroLoadSet,
) -> Result<GlobalSystem> {
    let set = StiffnessSet::from_field(geo, field, map.n_active())?;
    let k = assemble_stiffness(&set, map);
    drop(set);
    let f = assemble_loads(geo, field, loads, map)?;
    let active_dofs = anchored_active_dofs(map.edof.iter().map(|r| &r[..]), map.total_dofs, 3);
    Ok(GlobalSystem {
        k,
        f,
        ncols: PLATE_CASES,
        active_dofs,
    })
}

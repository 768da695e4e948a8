//! Isotropic constitutive tensors in Voigt notation and per-element fields.
//!
//! Voigt order is `[e11, e22, e33, g23, g13, g12]` with engineering shear
//! strains, so the shear diagonal carries `mu`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat6 = [[f64; 6]; 6];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticTensor6 {
    pub c: Mat6,
}

impl ElasticTensor6 {
    pub fn zero() -> Self {
        ElasticTensor6 { c: [[0.0; 6]; 6] }
    }

    pub fn from_matrix(c: Mat6) -> Self {
        ElasticTensor6 { c }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().flatten().for_each(|v| *v *= a);
        ElasticTensor6 { c }
    }

    pub fn mul_vec(&self, v: &[f64; 6]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (i, row) in self.c.iter().enumerate() {
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Lamé parameters `(lambda, mu)` for Young's modulus and Poisson ratio.
pub fn lame(e: f64, nu: f64) -> Result<(f64, f64)> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::invalid(format!("Young's modulus must be positive, got {e}")));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::invalid(format!(
            "Poisson ratio must lie in (-1, 0.5), got {nu}"
        )));
    }
    let lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    Ok((lam, mu))
}

/// 6x6 isotropic stiffness from `E` and `nu`.
pub fn isotropic_elasticity(e: f64, nu: f64) -> Result<ElasticTensor6> {
    let (lam, mu) = lame(e, nu)?;
    let mut c = [[0.0; 6]; 6];
    for (i, row) in c.iter_mut().enumerate().take(3) {
        for v in row.iter_mut().take(3) {
            *v = lam;
        }
        row[i] = lam + 2.0 * mu;
    }
    for (i, row) in c.iter_mut().enumerate().skip(3) {
        row[i] = mu;
    }
    Ok(ElasticTensor6 { c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicMaterial {
    #[serde(rename = "E")]
    pub e: f64,
    pub nu: f64,
}

/// Material id to isotropic properties, read from JSON of the form
/// `{"1": {"E": 1215.0, "nu": 0.35}, ...}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MaterialTable(pub BTreeMap<u8, IsotropicMaterial>);

impl MaterialTable {
    pub fn single(id: u8, e: f64, nu: f64) -> Self {
        let mut map = BTreeMap::new();
        map.insert(id, IsotropicMaterial { e, nu });
        MaterialTable(map)
    }

    pub fn insert(&mut self, id: u8, e: f64, nu: f64) -> &mut Self {
        self.0.insert(id, IsotropicMaterial { e, nu });
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn get(&self, id: u8) -> Option<&IsotropicMaterial> {
        self.0.get(&id)
    }
}

/// Constitutive data for the active elements of a grid.
///
/// Stored as a scalar modulus times dimensionless tensors. Solves run on the
/// dimensionless tensors and results are multiplied by the modulus, so
/// scaling every stiffness by `a` scales the result by exactly `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    modulus: f64,
    kind: FieldKind,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
enum FieldKind {
    /// One tensor shared by every element.
    Homogeneous(ElasticTensor6),
    /// One tensor per active element, indexed like the rows of the DOF map.
    PerElement(Vec<ElasticTensor6>),
}

impl MaterialField {
    pub fn homogeneous(e: f64, nu: f64) -> Result<Self> {
        lame(e, nu)?;
        Ok(MaterialField {
            modulus: e,
            kind: FieldKind::Homogeneous(isotropic_elasticity(1.0, nu)?),
        })
    }

    /// Per-element field with the given moduli and a common Poisson ratio.
    pub fn from_moduli(moduli: &[f64], nu: f64) -> Result<Self> {
        for &e in moduli {
            lame(e, nu)?;
        }
        if moduli.is_empty() {
            return Ok(MaterialField::from_tensors(Vec::new()));
        }
        let top = moduli.iter().copied().fold(0.0, f64::max);
        let tensors = moduli
            .iter()
            .map(|&e| isotropic_elasticity(e / top, nu))
            .collect::<Result<Vec<_>>>()?;
        Ok(MaterialField { modulus: top, kind: FieldKind::PerElement(tensors) })
    }

    /// Per-element field from arbitrary tensors, taken as given.
    pub fn from_tensors(tensors: Vec<ElasticTensor6>) -> Self {
        MaterialField { modulus: 1.0, kind: FieldKind::PerElement(tensors) }
    }

    /// Homogeneous field with an arbitrary tensor, taken as given.
    pub fn uniform(c: ElasticTensor6) -> Self {
        MaterialField { modulus: 1.0, kind: FieldKind::Homogeneous(c) }
    }

    /// Common factor of every element tensor.
    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    /// Dimensionless tensor of active element `e`; the physical tensor is
    /// `modulus() * tensor(e)`.
    #[inline]
    pub fn tensor(&self, e: usize) -> &ElasticTensor6 {
        match &self.kind {
            FieldKind::Homogeneous(c) => c,
            FieldKind::PerElement(cs) => &cs[e],
        }
    }

    /// Physical tensor of active element `e`.
    pub fn physical_tensor(&self, e: usize) -> ElasticTensor6 {
        self.tensor(e).scaled(self.modulus)
    }

    /// The shared dimensionless tensor of a homogeneous field.
    pub fn shared_tensor(&self) -> Option<&ElasticTensor6> {
        match &self.kind {
            FieldKind::Homogeneous(c) => Some(c),
            FieldKind::PerElement(_) => None,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.shared_tensor().is_some()
    }

    /// Checks the field against the number of active elements.
    pub fn check_len(&self, n_active: usize) -> Result<()> {
        match &self.kind {
            FieldKind::PerElement(cs) if cs.len() != n_active => Err(Error::invalid(format!(
                "material field has {} tensors for {n_active} active elements",
                cs.len()
            ))),
            _ => Ok(()),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        MaterialField { modulus: self.modulus * a, kind: self.kind.clone() }
    }

    /// Distinct dimensionless tensors and, per element, the index of its
    /// tensor. Elements sharing bit-identical tensors share an entry.
    pub fn palette(&self, n_active: usize) -> (Vec<ElasticTensor6>, Vec<u32>) {
        match &self.kind {
            FieldKind::Homogeneous(c) => (vec![*c], vec![0; n_active]),
            FieldKind::PerElement(cs) => {
                let mut unique: Vec<ElasticTensor6> = Vec::new();
                let mut keys: BTreeMap<Vec<u64>, u32> = BTreeMap::new();
                let index = cs
                    .iter()
                    .map(|c| {
                        let key: Vec<u64> = c.c.iter().flatten().map(|v| v.to_bits()).collect();
                        *keys.entry(key).or_insert_with(|| {
                            unique.push(*c);
                            (unique.len() - 1) as u32
                        })
                    })
                    .collect();
                (unique, index)
            }
        }
    }
}

/// Maps per-element material ids through `table`. Every id must be present.
pub fn multi_material_field(element_ids: &[u8], table: &MaterialTable) -> Result<MaterialField> {
    let mut used: BTreeMap<u8, IsotropicMaterial> = BTreeMap::new();
    for &id in element_ids {
        if let std::collections::btree_map::Entry::Vacant(slot) = used.entry(id) {
            let m = table.get(id).ok_or(Error::UnmappedMaterial(id))?;
            lame(m.e, m.nu)?;
            slot.insert(*m);
        }
    }
    let top = used.values().map(|m| m.e).fold(0.0, f64::max);
    let top = if used.is_empty() { 1.0 } else { top };
    let mut cache: BTreeMap<u8, ElasticTensor6> = BTreeMap::new();
    for (&id, m) in &used {
        cache.insert(id, isotropic_elasticity(m.e / top, m.nu)?);
    }
    let out = element_ids.iter().map(|id| cache[id]).collect();
    Ok(MaterialField { modulus: top, kind: FieldKind::PerElement(out) })
}

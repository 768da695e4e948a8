//! Trilinear 8-node voxel element with 2x2x2 Gauss integration.
//!
//! Node order is (-1,-1,-1), (1,-1,-1), (1,1,-1), (-1,1,-1), (-1,-1,1),
//! (1,-1,1), (1,1,1), (-1,1,1). Element DOFs are node-major,
//! `(u1, v1, w1, u2, ...)`. The DOF map emits nodes in the same order.

use crate::error::{Error, Result};
use crate::material::ElasticTensor6;

pub type Mat24 = [[f64; 24]; 24];
pub type BMatrix = [[f64; 24]; 6];
pub type GradN = [[f64; 8]; 3];

pub const NODE_SIGNS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Gauss points in natural coordinates, `NODE_SIGNS / sqrt(3)`.
pub fn gauss_points() -> [[f64; 3]; 8] {
    let a = 1.0 / 3.0_f64.sqrt();
    NODE_SIGNS.map(|n| [n[0] * a, n[1] * a, n[2] * a])
}

fn check_edges(dx: f64, dy: f64, dz: f64) -> Result<()> {
    if !(dx > 0.0 && dy > 0.0 && dz > 0.0) {
        return Err(Error::invalid(format!(
            "element edge lengths must be positive, got ({dx}, {dy}, {dz})"
        )));
    }
    Ok(())
}

/// Physical shape-function gradients at natural point `q`; entry `[a][i]`
/// is dN_i/dx_a.
pub fn shape_gradients(q: [f64; 3], dx: f64, dy: f64, dz: f64) -> Result<GradN> {
    check_edges(dx, dy, dz)?;
    if q.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::invalid(format!("natural coordinate {q:?} outside [-1, 1]^3")));
    }
    let mut g = [[0.0; 8]; 3];
    for (i, n) in NODE_SIGNS.iter().enumerate() {
        g[0][i] = 0.125 * (1.0 + q[1] * n[1]) * (1.0 + q[2] * n[2]) * n[0] * (2.0 / dx);
        g[1][i] = 0.125 * (1.0 + q[0] * n[0]) * (1.0 + q[2] * n[2]) * n[1] * (2.0 / dy);
        g[2][i] = 0.125 * (1.0 + q[0] * n[0]) * (1.0 + q[1] * n[1]) * n[2] * (2.0 / dz);
    }
    Ok(g)
}

/// Strain-displacement matrix from shape gradients, engineering shears.
pub fn strain_displacement(g: &GradN) -> BMatrix {
    let mut b = [[0.0; 24]; 6];
    for i in 0..8 {
        let (u, v, w) = (3 * i, 3 * i + 1, 3 * i + 2);
        b[0][u] = g[0][i];
        b[1][v] = g[1][i];
        b[2][w] = g[2][i];
        b[3][v] = g[2][i];
        b[3][w] = g[1][i];
        b[4][u] = g[2][i];
        b[4][w] = g[0][i];
        b[5][u] = g[1][i];
        b[5][v] = g[0][i];
    }
    b
}

#[derive(Debug, Clone)]
pub struct ElementKinematics {
    pub ke: Box<Mat24>,
    pub bs: [BMatrix; 8],
    pub grad_ns: [GradN; 8],
    pub det_j: f64,
}

/// Geometry-only part of the element: B matrices, gradients and Jacobian.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub bs: [BMatrix; 8],
    pub grad_ns: [GradN; 8],
    pub det_j: f64,
}

impl ElementGeometry {
    pub fn new(dx: f64, dy: f64, dz: f64) -> Result<Self> {
        check_edges(dx, dy, dz)?;
        let gps = gauss_points();
        let mut grad_ns = [[[0.0; 8]; 3]; 8];
        for (g, q) in grad_ns.iter_mut().zip(gps) {
            *g = shape_gradients(q, dx, dy, dz)?;
        }
        let bs = grad_ns.map(|g| strain_displacement(&g));
        Ok(ElementGeometry {
            bs,
            grad_ns,
            det_j: dx * dy * dz / 8.0,
        })
    }

    /// `sum_g B_g^T C B_g |J|`.
    pub fn stiffness(&self, c: &ElasticTensor6) -> Box<Mat24> {
        self.stiffness_ordered(c, &[0, 1, 2, 3, 4, 5, 6, 7])
    }

    /// Stiffness accumulated over Gauss points in the given order.
    pub fn stiffness_ordered(&self, c: &ElasticTensor6, order: &[usize; 8]) -> Box<Mat24> {
        let mut ke = Box::new([[0.0; 24]; 24]);
        for &g in order {
            let b = &self.bs[g];
            // cb = C * B, 6x24
            let mut cb = [[0.0; 24]; 6];
            for (i, row) in cb.iter_mut().enumerate() {
                for (k, &cik) in c.c[i].iter().enumerate() {
                    if cik != 0.0 {
                        for (r, &bk) in row.iter_mut().zip(b[k].iter()) {
                            *r += cik * bk;
                        }
                    }
                }
            }
            for (a, ke_row) in ke.iter_mut().enumerate() {
                for k in 0..6 {
                    let bka = b[k][a];
                    if bka != 0.0 {
                        let s = bka * self.det_j;
                        for (v, &cbk) in ke_row.iter_mut().zip(cb[k].iter()) {
                            *v += s * cbk;
                        }
                    }
                }
            }
        }
        ke
    }

    /// Conduction matrix `sum_g gradN^T (k I) gradN |J|`.
    pub fn conduction(&self, k: f64) -> [[f64; 8]; 8] {
        let mut kt = [[0.0; 8]; 8];
        for g in &self.grad_ns {
            for i in 0..8 {
                for j in 0..8 {
                    let dot: f64 = (0..3).map(|a| g[a][i] * g[a][j]).sum();
                    kt[i][j] += k * dot * self.det_j;
                }
            }
        }
        kt
    }
}

/// Element stiffness, B matrices and Jacobian for a `dx x dy x dz` voxel.
pub fn element_stiffness(c: &ElasticTensor6, dx: f64, dy: f64, dz: f64) -> Result<ElementKinematics> {
    let geo = ElementGeometry::new(dx, dy, dz)?;
    let ke = geo.stiffness(c);
    Ok(ElementKinematics {
        ke,
        bs: geo.bs,
        grad_ns: geo.grad_ns,
        det_j: geo.det_j,
    })
}

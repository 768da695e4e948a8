//! Jacobi-preconditioned conjugate gradients for several right-hand sides.
//!
//! All columns share the read-only matrix and preconditioner. They are
//! advanced in lock-step through a fused multi-column product, but each
//! column keeps its own scalars and stops on its own, so every column's
//! iterates are bit-identical to solving it alone. Reductions use fixed
//! row chunks and are therefore independent of the thread count.

use rayon::prelude::*;

use crate::assembly::GlobalSystem;
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, ROW_CHUNK};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAXITER: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target, `||K u - f|| <= tol ||f||`.
    pub tol: f64,
    pub maxiter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            maxiter: DEFAULT_MAXITER,
        }
    }
}

impl SolverOptions {
    pub fn new(tol: f64, maxiter: usize) -> Result<Self> {
        let opts = SolverOptions { tol, maxiter };
        opts.validate()?;
        Ok(opts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Per-column outcome of a block solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// True relative residual `||b - A x|| / ||b||` (0 for a zero RHS).
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

/// Per-column dot products of two interleaved blocks, reduced over fixed
/// row chunks.
fn block_dots(a: &[f64], b: &[f64], nc: usize) -> Vec<f64> {
    let partials: Vec<Vec<f64>> = a
        .par_chunks(ROW_CHUNK * nc)
        .zip(b.par_chunks(ROW_CHUNK * nc))
        .map(|(ac, bc)| {
            let mut s = vec![0.0; nc];
            for (ar, br) in ac.chunks_exact(nc).zip(bc.chunks_exact(nc)) {
                for c in 0..nc {
                    s[c] += ar[c] * br[c];
                }
            }
            s
        })
        .collect();
    let mut out = vec![0.0; nc];
    for p in partials {
        for c in 0..nc {
            out[c] += p[c];
        }
    }
    out
}

fn true_residual_norms(a: &CsrMatrix, x: &[f64], b: &[f64], nc: usize) -> Vec<f64> {
    let mut ax = vec![0.0; b.len()];
    a.mul_multi(x, &mut ax, nc);
    ax.par_iter_mut().zip(b.par_iter()).for_each(|(v, bv)| *v = bv - *v);
    block_dots(&ax, &ax, nc).into_iter().map(f64::sqrt).collect()
}

/// Solves `A X = B` column-wise with Jacobi-PCG, `X0 = 0`. `b` holds `nc`
/// interleaved columns. Convergence of a column requires the explicitly
/// recomputed residual to satisfy the tolerance.
pub fn pcg_block(a: &CsrMatrix, b: &[f64], nc: usize, opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    opts.validate()?;
    let n = a.nrows;
    assert_eq!(a.ncols, n);
    assert_eq!(b.len(), n * nc);

    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::SingularPreconditioner { dof: i });
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let b_norm: Vec<f64> = block_dots(b, b, nc).into_iter().map(f64::sqrt).collect();
    let target: Vec<f64> = b_norm.iter().map(|nb| opts.tol * nb).collect();

    let mut x = vec![0.0; n * nc];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().enumerate().map(|(k, rv)| rv * inv_diag[k / nc]).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n * nc];
    let mut rz = block_dots(&r, &z, nc);
    let mut r_norm = b_norm.clone();

    let mut active: Vec<bool> = b_norm.iter().map(|&nb| nb > 0.0).collect();
    let mut iterations = vec![0usize; nc];
    let mut residuals = vec![0.0; nc];

    loop {
        // columns whose recurrence residual meets the target get an explicit check
        let candidates: Vec<usize> = (0..nc).filter(|&c| active[c] && r_norm[c] <= target[c]).collect();
        if !candidates.is_empty() {
            let true_norms = true_residual_norms(a, &x, b, nc);
            for c in candidates {
                if true_norms[c] <= target[c] {
                    active[c] = false;
                    residuals[c] = true_norms[c] / b_norm[c];
                }
            }
        }
        let stalled: Vec<usize> = (0..nc).filter(|&c| active[c] && iterations[c] >= opts.maxiter).collect();
        if !stalled.is_empty() {
            let true_norms = true_residual_norms(a, &x, b, nc);
            let rel = (0..nc)
                .map(|c| if b_norm[c] > 0.0 { true_norms[c] / b_norm[c] } else { 0.0 })
                .collect();
            return Err(Error::NotConverged { residuals: rel });
        }
        if !active.iter().any(|&v| v) {
            break;
        }

        a.mul_multi(&p, &mut q, nc);
        let pq = block_dots(&p, &q, nc);
        let mut alpha = vec![0.0; nc];
        for c in 0..nc {
            if active[c] {
                if !(pq[c] > 0.0) {
                    // direction of zero or negative curvature: cannot progress
                    let true_norms = true_residual_norms(a, &x, b, nc);
                    let rel = (0..nc)
                        .map(|k| if b_norm[k] > 0.0 { true_norms[k] / b_norm[k] } else { 0.0 })
                        .collect();
                    return Err(Error::NotConverged { residuals: rel });
                }
                alpha[c] = rz[c] / pq[c];
            }
        }
        let act = &active;
        let w = ROW_CHUNK * nc;
        x.par_chunks_mut(w)
            .zip(r.par_chunks_mut(w))
            .zip(z.par_chunks_mut(w))
            .zip(p.par_chunks(w).zip(q.par_chunks(w)))
            .enumerate()
            .for_each(|(chunk, (((xs, rs), zs), (ps, qs)))| {
                let d0 = chunk * ROW_CHUNK;
                for (k, dinv) in inv_diag[d0..d0 + xs.len() / nc].iter().enumerate() {
                    for c in 0..nc {
                        if act[c] {
                            let i = k * nc + c;
                            xs[i] += alpha[c] * ps[i];
                            rs[i] -= alpha[c] * qs[i];
                            zs[i] = rs[i] * dinv;
                        }
                    }
                }
            });
        let rz_new = block_dots(&r, &z, nc);
        let rr = block_dots(&r, &r, nc);
        let mut beta = vec![0.0; nc];
        for c in 0..nc {
            if active[c] {
                beta[c] = rz_new[c] / rz[c];
                rz[c] = rz_new[c];
                r_norm[c] = rr[c].sqrt();
                iterations[c] += 1;
            }
        }
        p.par_chunks_mut(w)
            .zip(z.par_chunks(w))
            .for_each(|(ps, zs)| {
                for (pr, zr) in ps.chunks_exact_mut(nc).zip(zs.chunks_exact(nc)) {
                    for c in 0..nc {
                        if act[c] {
                            pr[c] = zr[c] + beta[c] * pr[c];
                        }
                    }
                }
            });
    }

    Ok((x, SolveReport { residuals, iterations }))
}

/// The anchored principal subsystem of a [`GlobalSystem`].
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub k: CsrMatrix,
    pub f: Vec<f64>,
    pub ncols: usize,
    pub active_dofs: Vec<usize>,
    pub total_dofs: usize,
}

impl ReducedSystem {
    pub fn from_global(system: &GlobalSystem) -> Self {
        let nc = system.ncols;
        let k = system.k.principal_submatrix(&system.active_dofs);
        let mut f = Vec::with_capacity(system.active_dofs.len() * nc);
        for &d in &system.active_dofs {
            f.extend_from_slice(&system.f[d * nc..(d + 1) * nc]);
        }
        ReducedSystem {
            k,
            f,
            ncols: nc,
            active_dofs: system.active_dofs.clone(),
            total_dofs: system.total_dofs(),
        }
    }

    /// Solves and scatters back to `total_dofs x ncols`, zero at anchored
    /// and unreferenced DOFs.
    pub fn solve(&self, opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
        let nc = self.ncols;
        let (x, report) = pcg_block(&self.k, &self.f, nc, opts)?;
        let mut u = vec![0.0; self.total_dofs * nc];
        for (i, &d) in self.active_dofs.iter().enumerate() {
            u[d * nc..(d + 1) * nc].copy_from_slice(&x[i * nc..(i + 1) * nc]);
        }
        Ok((u, report))
    }
}

/// Solves every load case of `system` on its anchored active DOF set.
pub fn solve_multi_rhs(system: &GlobalSystem, opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    ReducedSystem::from_global(system).solve(opts)
}

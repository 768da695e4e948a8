//! Compressed-row sparse matrices and finite-element assembly into them.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per parallel work unit. Fixed so reductions are order-stable.
pub(crate) const ROW_CHUNK: usize = 2048;

/// Column indices are always `< ncols`; the fields are crate-private so
/// that invariant cannot be broken from outside.
///
/// `row_group > 1` records that rows come in aligned groups of that size
/// whose column patterns are identical (as for the DOFs of one node), which
/// lets products load each column's `x` entries once per group.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub(crate) nrows: usize,
    pub(crate) ncols: usize,
    pub(crate) row_ptr: Vec<usize>,
    pub(crate) col_idx: Vec<u32>,
    pub(crate) values: Vec<f64>,
    pub(crate) row_group: usize,
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![1.0; n],
            row_group: 1,
        }
    }

    /// Builds a matrix from triplets, summing duplicates in input order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::invalid(format!("entry ({i}, {j}) out of range")));
            }
            let row = &mut rows[i];
            match row.iter_mut().find(|(c, _)| *c as usize == j) {
                Some(entry) => entry.1 += v,
                None => row.push((j as u32, v)),
            }
        }
        let mut m = CsrMatrix {
            nrows,
            ncols,
            row_ptr: Vec::with_capacity(nrows + 1),
            col_idx: Vec::new(),
            values: Vec::new(),
            row_group: 1,
        };
        m.row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                m.col_idx.push(c);
                m.values.push(v);
            }
            m.row_ptr.push(m.col_idx.len());
        }
        Ok(m)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `y = A x` for a single vector.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_multi(x, &mut y, 1);
        y
    }

    /// `Y = A X` where `X` and `Y` store `ncols` interleaved columns
    /// (`x[row * ncols + c]`).
    pub fn mul_multi(&self, x: &[f64], y: &mut [f64], ncols: usize) {
        match ncols {
            1 => self.mul_multi_n::<1>(x, y),
            2 => self.mul_multi_n::<2>(x, y),
            3 => self.mul_multi_n::<3>(x, y),
            6 => self.mul_multi_n::<6>(x, y),
            _ => self.mul_multi_dyn(x, y, ncols),
        }
    }

    fn mul_multi_n<const N: usize>(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols * N);
        assert_eq!(y.len(), self.nrows * N);
        if self.row_group == 3 {
            return self.mul_grouped3::<N>(x, y);
        }
        y.par_chunks_mut(ROW_CHUNK * N)
            .enumerate()
            .for_each(|(chunk, ys)| {
                let r0 = chunk * ROW_CHUNK;
                for (k, yr) in ys.chunks_exact_mut(N).enumerate() {
                    let i = r0 + k;
                    let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
                    let mut acc = [0.0; N];
                    for (&c, &v) in self.col_idx[a..b].iter().zip(&self.values[a..b]) {
                        let c = c as usize;
                        debug_assert!(c < self.ncols);
                        // SAFETY: column indices are < ncols by construction and
                        // x.len() == ncols * N was asserted above.
                        let xs: &[f64; N] = unsafe { &*(x.as_ptr().add(c * N) as *const [f64; N]) };
                        for n in 0..N {
                            acc[n] += v * xs[n];
                        }
                    }
                    yr.copy_from_slice(&acc);
                }
            });
    }

    /// Three rows sharing one column pattern per step; each row still sums
    /// its entries in stored order, so results match the plain kernel.
    fn mul_grouped3<const N: usize>(&self, x: &[f64], y: &mut [f64]) {
        const ROWS: usize = ROW_CHUNK / 3 * 3;
        y.par_chunks_mut(ROWS * N)
            .enumerate()
            .for_each(|(chunk, ys)| {
                let r0 = chunk * ROWS;
                for (k, yg) in ys.chunks_exact_mut(3 * N).enumerate() {
                    let i = r0 + 3 * k;
                    let base = self.row_ptr[i];
                    let width = self.row_ptr[i + 1] - base;
                    let cols = &self.col_idx[base..base + width];
                    let v0 = &self.values[base..base + width];
                    let v1 = &self.values[base + width..base + 2 * width];
                    let v2 = &self.values[base + 2 * width..base + 3 * width];
                    let mut a0 = [0.0; N];
                    let mut a1 = [0.0; N];
                    let mut a2 = [0.0; N];
                    for p in 0..width {
                        let c = cols[p] as usize;
                        debug_assert!(c < self.ncols);
                        // SAFETY: see mul_multi_n.
                        let xs: &[f64; N] = unsafe { &*(x.as_ptr().add(c * N) as *const [f64; N]) };
                        for n in 0..N {
                            a0[n] += v0[p] * xs[n];
                            a1[n] += v1[p] * xs[n];
                            a2[n] += v2[p] * xs[n];
                        }
                    }
                    yg[..N].copy_from_slice(&a0);
                    yg[N..2 * N].copy_from_slice(&a1);
                    yg[2 * N..].copy_from_slice(&a2);
                }
            });
    }

    fn mul_multi_dyn(&self, x: &[f64], y: &mut [f64], n: usize) {
        assert_eq!(x.len(), self.ncols * n);
        assert_eq!(y.len(), self.nrows * n);
        y.par_chunks_mut(ROW_CHUNK * n)
            .enumerate()
            .for_each(|(chunk, ys)| {
                let r0 = chunk * ROW_CHUNK;
                for (k, yr) in ys.chunks_exact_mut(n).enumerate() {
                    let i = r0 + k;
                    yr.iter_mut().for_each(|v| *v = 0.0);
                    for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                        let c = self.col_idx[p] as usize;
                        for (yv, xv) in yr.iter_mut().zip(&x[c * n..c * n + n]) {
                            *yv += self.values[p] * xv;
                        }
                    }
                }
            });
    }

    /// Principal submatrix on the sorted index set `keep`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![u32::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new as u32;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        let nnz: usize = keep
            .iter()
            .map(|&i| self.row_ptr[i + 1] - self.row_ptr[i])
            .sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for &i in keep {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let m = map[c as usize];
                if m != u32::MAX {
                    col_idx.push(m);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        col_idx.shrink_to_fit();
        values.shrink_to_fit();
        let mut m = CsrMatrix {
            nrows: keep.len(),
            ncols: keep.len(),
            row_ptr,
            col_idx,
            values,
            row_group: 1,
        };
        if self.row_group > 1 && m.has_row_groups(self.row_group) {
            m.row_group = self.row_group;
        }
        m
    }

    /// Whether rows form aligned groups of `g` with identical columns.
    fn has_row_groups(&self, g: usize) -> bool {
        if g == 0 || !self.nrows.is_multiple_of(g) {
            return false;
        }
        (0..self.nrows / g).all(|k| {
            let (c0, _) = self.row(g * k);
            (1..g).all(|i| {
                let r = g * k + i;
                self.row_ptr[r] == self.row_ptr[r - 1] + c0.len() && self.row(r).0 == c0
            })
        })
    }
}

/// Assembles `sum_e P_e^T M_e P_e` for elements with eight nodes and `dpn`
/// DOFs per node (DOF `dpn * node + comp`). `element_matrix(e)` returns the
/// row-major `(8 dpn)^2` element matrix in node-major DOF order.
///
/// Each entry accumulates its contributions in ascending element order, so
/// the result is bit-reproducible.
pub fn assemble<'a, F>(n_nodes: usize, dpn: usize, elem_nodes: &[[usize; 8]], element_matrix: F) -> CsrMatrix
where
    F: Fn(usize) -> &'a [f64] + Sync,
{
    let n_dofs = n_nodes * dpn;
    assert!(n_dofs < u32::MAX as usize, "dof count exceeds u32 column indices");
    let ned = 8 * dpn;

    // node -> incident (element, local node), ascending element order
    let mut start = vec![0usize; n_nodes + 1];
    for ns in elem_nodes {
        for &n in ns {
            assert!(n < n_nodes, "node {n} out of range");
            start[n + 1] += 1;
        }
    }
    for i in 0..n_nodes {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut incident = vec![(0u32, 0u8); start[n_nodes]];
    for (e, ns) in elem_nodes.iter().enumerate() {
        for (a, &n) in ns.iter().enumerate() {
            incident[fill[n]] = (e as u32, a as u8);
            fill[n] += 1;
        }
    }
    drop(fill);

    let neighbours: Vec<Vec<u32>> = (0..n_nodes)
        .into_par_iter()
        .map(|n| {
            let mut nb: Vec<u32> = incident[start[n]..start[n + 1]]
                .iter()
                .flat_map(|&(e, _)| elem_nodes[e as usize].iter().map(|&m| m as u32))
                .collect();
            nb.sort_unstable();
            nb.dedup();
            nb
        })
        .collect();

    let mut row_ptr = Vec::with_capacity(n_dofs + 1);
    row_ptr.push(0usize);
    for nb in &neighbours {
        for _ in 0..dpn {
            let last = *row_ptr.last().unwrap();
            row_ptr.push(last + dpn * nb.len());
        }
    }
    let nnz = *row_ptr.last().unwrap();
    let mut col_idx = vec![0u32; nnz];
    let mut values = vec![0.0f64; nnz];

    for (n, nb) in neighbours.iter().enumerate() {
        if nb.is_empty() {
            continue;
        }
        let width = dpn * nb.len();
        let base = row_ptr[dpn * n];
        for i in 0..dpn {
            let row = &mut col_idx[base + i * width..base + (i + 1) * width];
            for (p, &m) in nb.iter().enumerate() {
                for j in 0..dpn {
                    row[dpn * p + j] = m * dpn as u32 + j as u32;
                }
            }
        }
        let block = &mut values[base..base + dpn * width];
        for &(e, a) in &incident[start[n]..start[n + 1]] {
            let me = element_matrix(e as usize);
            debug_assert_eq!(me.len(), ned * ned);
            let a = a as usize;
            for (b, &m) in elem_nodes[e as usize].iter().enumerate() {
                let p = nb.binary_search(&(m as u32)).expect("neighbour present");
                for i in 0..dpn {
                    let src = &me[(dpn * a + i) * ned + dpn * b..(dpn * a + i) * ned + dpn * b + dpn];
                    let dst = &mut block[i * width + dpn * p..i * width + dpn * p + dpn];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
        }
    }

    CsrMatrix {
        nrows: n_dofs,
        ncols: n_dofs,
        row_ptr,
        col_idx,
        values,
        row_group: dpn,
    }
}

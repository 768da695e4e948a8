//! Element-to-DOF incidence for structured voxel grids.
//!
//! Nodes are numbered row-major over `(nx+1, ny+1, nz+1)`. Periodicity is
//! imposed by aliasing: the node planes `x = nx` and `y = ny` (and `z = nz`
//! for the fully periodic variant) take the numbers of the planes at index 0
//! before element incidence is read off. Aliased slave numbers never appear
//! in the table, but the nominal numbering size is kept as `total_dofs`.

use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

/// Corner offsets of the eight element nodes, matching the element's node order.
pub const NODE_OFFSETS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Periodicity {
    /// Periodic in x and y, free top and bottom faces.
    InPlane,
    /// Periodic in x, y and z.
    Full,
}

#[derive(Debug, Clone)]
struct Incidence {
    nodes: Vec<[usize; 8]>,
    active_voxels: Vec<usize>,
    active_mask: Vec<bool>,
    n_nodes: usize,
}

fn incidence(grid: &VoxelGrid, periodicity: Periodicity) -> Result<Incidence> {
    let (nx, ny, nz) = grid.dims();
    let solid = grid.solid_count();
    if solid == 0 {
        return Err(Error::EmptyStructure);
    }
    let (py, pz) = (ny + 1, nz + 1);
    let node = |i: usize, j: usize, k: usize| {
        let i = if i == nx { 0 } else { i };
        let j = if j == ny { 0 } else { j };
        let k = if k == nz && periodicity == Periodicity::Full { 0 } else { k };
        (i * py + j) * pz + k
    };
    let mut nodes = Vec::with_capacity(solid);
    let mut active_voxels = Vec::with_capacity(solid);
    let mut active_mask = Vec::with_capacity(grid.len());
    for ix in 0..nx {
        for iy in 0..ny {
            for iz in 0..nz {
                let idx = grid.index(ix, iy, iz);
                let on = grid.data()[idx] != 0;
                active_mask.push(on);
                if on {
                    active_voxels.push(idx);
                    nodes.push(NODE_OFFSETS.map(|o| node(ix + o[0], iy + o[1], iz + o[2])));
                }
            }
        }
    }
    Ok(Incidence {
        nodes,
        active_voxels,
        active_mask,
        n_nodes: (nx + 1) * py * pz,
    })
}

/// Vector (3 DOF per node) incidence table.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub edof: Vec<[usize; 24]>,
    /// Element-centroid z offset from the mid-surface, per active element.
    pub z_active: Vec<f64>,
    pub total_dofs: usize,
    pub active_mask: Vec<bool>,
    /// Linear voxel index of each active element.
    pub active_voxels: Vec<usize>,
    pub dims: (usize, usize, usize),
}

impl DofMap {
    pub fn n_active(&self) -> usize {
        self.edof.len()
    }

    /// Node numbers of element `e`.
    pub fn nodes(&self, e: usize) -> [usize; 8] {
        let row = &self.edof[e];
        std::array::from_fn(|a| row[3 * a] / 3)
    }

    /// Node lattice coordinates `(i, j, k)` of a node number.
    pub fn node_coords(&self, node: usize) -> (usize, usize, usize) {
        let (_, ny, nz) = self.dims;
        let k = node % (nz + 1);
        let j = (node / (nz + 1)) % (ny + 1);
        let i = node / ((nz + 1) * (ny + 1));
        (i, j, k)
    }
}

fn build_vector_map(
    grid: &VoxelGrid,
    dz: f64,
    thickness: f64,
    periodicity: Periodicity,
) -> Result<DofMap> {
    let inc = incidence(grid, periodicity)?;
    let nz = grid.nz();
    let edof = inc
        .nodes
        .iter()
        .map(|ns| std::array::from_fn(|d| 3 * ns[d / 3] + d % 3))
        .collect();
    let z_active = inc
        .active_voxels
        .iter()
        .map(|&v| ((v % nz) as f64 + 0.5) * dz - thickness / 2.0)
        .collect();
    Ok(DofMap {
        edof,
        z_active,
        total_dofs: 3 * inc.n_nodes,
        active_mask: inc.active_mask,
        active_voxels: inc.active_voxels,
        dims: grid.dims(),
    })
}

fn check_geometry(grid: &VoxelGrid, dx: f64, dy: f64, dz: f64, thickness: f64) -> Result<()> {
    if !(dx > 0.0 && dy > 0.0 && dz > 0.0 && thickness > 0.0) {
        return Err(Error::invalid("voxel sizes and thickness must be positive"));
    }
    let h = grid.nz() as f64 * dz;
    if ((h - thickness) / thickness).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "thickness {thickness} does not match nz*dz = {h}"
        )));
    }
    Ok(())
}

/// Incidence table under in-plane periodic, out-of-plane free conditions.
pub fn build_dof_map(grid: &VoxelGrid, dx: f64, dy: f64, dz: f64, thickness: f64) -> Result<DofMap> {
    check_geometry(grid, dx, dy, dz, thickness)?;
    build_vector_map(grid, dz, thickness, Periodicity::InPlane)
}

/// Incidence table with all three directions periodic.
pub fn build_periodic_dof_map(grid: &VoxelGrid, dz: f64) -> Result<DofMap> {
    if !(dz > 0.0) {
        return Err(Error::invalid("voxel size must be positive"));
    }
    let h = grid.nz() as f64 * dz;
    build_vector_map(grid, dz, h, Periodicity::Full)
}

/// Scalar (one DOF per node) incidence table, in-plane periodic.
#[derive(Debug, Clone)]
pub struct ScalarDofMap {
    pub edof: Vec<[usize; 8]>,
    pub total_dofs: usize,
    pub active_mask: Vec<bool>,
    pub active_voxels: Vec<usize>,
    pub dims: (usize, usize, usize),
}

impl ScalarDofMap {
    pub fn n_active(&self) -> usize {
        self.edof.len()
    }
}

pub fn build_scalar_dof_map(
    grid: &VoxelGrid,
    dx: f64,
    dy: f64,
    dz: f64,
    thickness: f64,
) -> Result<ScalarDofMap> {
    check_geometry(grid, dx, dy, dz, thickness)?;
    let inc = incidence(grid, Periodicity::InPlane)?;
    Ok(ScalarDofMap {
        edof: inc.nodes,
        total_dofs: inc.n_nodes,
        active_mask: inc.active_mask,
        active_voxels: inc.active_voxels,
        dims: grid.dims(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn single_voxel_collapses_to_two_nodes() {
        let g = VoxelGrid::filled(1, 1, 1, 1).unwrap();
        let m = build_dof_map(&g, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.total_dofs, 24);
        let distinct: BTreeSet<_> = m.edof[0].iter().copied().collect();
        assert_eq!(distinct.len(), 6);
        let nodes: BTreeSet<_> = m.nodes(0).into_iter().collect();
        assert_eq!(nodes, BTreeSet::from([0, 1]));
        for row in &m.edof {
            for a in 0..8 {
                assert_eq!(row[3 * a] % 3, 0);
                assert_eq!(row[3 * a + 1], row[3 * a] + 1);
                assert_eq!(row[3 * a + 2], row[3 * a] + 2);
            }
        }
    }

    #[test]
    fn centroid_offsets() {
        let g = VoxelGrid::filled(1, 1, 2, 1).unwrap();
        let m = build_dof_map(&g, 5.0, 5.0, 5.0, 10.0).unwrap();
        assert_eq!(m.z_active, vec![-2.5, 2.5]);
    }

    #[test]
    fn one_void_voxel_drops_one_row() {
        let mut g = VoxelGrid::filled(3, 2, 4, 1).unwrap();
        g.set(1, 1, 2, 0);
        let m = build_dof_map(&g, 1.0, 1.0, 1.0, 4.0).unwrap();
        assert_eq!(m.n_active(), 23);
        assert!(!m.active_mask[g.index(1, 1, 2)]);
    }

    #[test]
    fn empty_and_inconsistent_inputs() {
        let g = VoxelGrid::filled(2, 2, 2, 0).unwrap();
        assert!(matches!(build_dof_map(&g, 1.0, 1.0, 1.0, 2.0), Err(Error::EmptyStructure)));
        assert!(matches!(
            build_scalar_dof_map(&g, 1.0, 1.0, 1.0, 2.0),
            Err(Error::EmptyStructure)
        ));
        let g = VoxelGrid::filled(2, 2, 2, 1).unwrap();
        assert!(build_dof_map(&g, 1.0, 1.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn periodic_faces_share_nodes() {
        let (nx, ny, nz) = (4, 3, 2);
        let g = VoxelGrid::filled(nx, ny, nz, 1).unwrap();
        let m = build_dof_map(&g, 1.0, 1.0, 1.0, nz as f64).unwrap();
        let elem = |ix: usize, iy: usize, iz: usize| (ix * ny + iy) * nz + iz;
        for iy in 0..ny {
            for iz in 0..nz {
                let last = m.nodes(elem(nx - 1, iy, iz));
                let first = m.nodes(elem(0, iy, iz));
                // n2,n3,n6,n7 of the last column equal n1,n4,n5,n8 of the first
                assert_eq!([last[1], last[2], last[5], last[6]], [first[0], first[3], first[4], first[7]]);
            }
        }
        for ix in 0..nx {
            for iz in 0..nz {
                let last = m.nodes(elem(ix, ny - 1, iz));
                let first = m.nodes(elem(ix, 0, iz));
                assert_eq!([last[2], last[3], last[6], last[7]], [first[1], first[0], first[5], first[4]]);
            }
        }
        for e in 0..m.n_active() {
            for n in m.nodes(e) {
                let (i, j, _) = m.node_coords(n);
                assert!(i < nx && j < ny);
            }
        }
        let mean: f64 = m.z_active.iter().sum::<f64>() / m.n_active() as f64;
        assert!(mean.abs() < 1e-12 * nz as f64);
    }

    #[test]
    fn full_periodicity_aliases_z() {
        let g = VoxelGrid::filled(2, 2, 3, 1).unwrap();
        let m = build_periodic_dof_map(&g, 1.0).unwrap();
        for e in 0..m.n_active() {
            for n in m.nodes(e) {
                let (i, j, k) = m.node_coords(n);
                assert!(i < 2 && j < 2 && k < 3);
            }
        }
    }

    #[test]
    fn scalar_map() {
        let g = VoxelGrid::filled(1, 1, 1, 1).unwrap();
        let m = build_scalar_dof_map(&g, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.total_dofs, 8);
        let distinct: BTreeSet<_> = m.edof[0].iter().copied().collect();
        assert_eq!(distinct.len(), 2);

        let (nx, ny, nz) = (3, 2, 2);
        let g = VoxelGrid::filled(nx, ny, nz, 1).unwrap();
        let m = build_scalar_dof_map(&g, 1.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(m.total_dofs, (nx + 1) * (ny + 1) * (nz + 1));
        let node = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * (nz + 1) + k;
        for row in &m.edof {
            for &n in row {
                for j in 0..=ny {
                    for k in 0..=nz {
                        assert_ne!(n, node(nx, j, k));
                    }
                }
            }
        }
        // element (nx-1, 0, 0) node n2 is node (nx, 0, 0) aliased to (0, 0, 0)
        let e = (nx - 1) * ny * nz;
        assert_eq!(m.edof[e][1], node(0, 0, 0));
    }
}

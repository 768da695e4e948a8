//! Voxel finite-element homogenization of lattice and lattice-skin plates.
//!
//! The main entry point is [`plate::homogenize_plate`], which returns the
//! 6x6 ABD stiffness of a plate that is periodic in-plane and free on its
//! top and bottom faces. [`volume`] provides the fully periodic baseline and
//! [`thermal`] the in-plane conduction analogue.

// `!(x > 0.0)` is used on purpose so NaN is rejected; index loops mirror
// the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod cli;
pub mod dofmap;
pub mod element;
pub mod error;
pub mod material;
pub mod plate;
pub mod report;
pub mod solver;
pub mod sparse;
pub mod sweep;
pub mod thermal;
pub mod voxel;
pub mod volume;

pub use error::{Error, Result};
pub use material::{isotropic_elasticity, ElasticTensor6, MaterialField, MaterialTable};
pub use plate::{homogenize_plate, AbdMatrix, PlateGeometry, PlateResult};
pub use solver::SolverOptions;
pub use voxel::{add_skins, generate_bcc, generate_tpms, Family, LatticeSpec, VoxelGrid};

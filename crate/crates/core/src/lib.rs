//! Analysis and construction of finitely generated commuting semigroups
//! of real matrices whose orbits are dense (or provably not dense) in
//! `R^n`.
//!
//! The pipeline: put a commuting family into block normal form, take
//! principal logarithms of the squared generators, read off the sign
//! index and the generated additive semigroup, then certify or refute
//! density of that semigroup.

pub mod constructor;
pub mod coverage;
pub mod density;
pub mod error;
pub mod exp_log;
pub mod matrix;
pub mod normal_form;
pub mod orbit;
pub mod relation;
pub mod semigroup;

pub use error::{Error, Result};
pub use matrix::{
    block_join, block_split, commute_check, commute_residual, is_in_k, k_structure_residual,
    BBlock, BlockPartition, MatrixFamily, RealMatrix, RealVector, SBlock, TBlock,
    ToleranceConfig, MAX_DIM,
};

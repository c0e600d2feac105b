//! Piecewise-constant coefficients on block partitions of the unit square:
//! P1 forward solves, block-local `H^{-1}` norms of the source, the per-block
//! stability bound, and least-squares recovery of the block values.

pub mod fem;
pub mod mesh;
pub mod sparse;
pub mod verify;

pub use fem::{
    block_gradient_norm, block_gradient_norms, fem_solve, hminus1_norm, FemSystem, PwOperator,
};
pub use mesh::{Block, NodalField, Partition2D, PwConstCoefficient};
pub use verify::{pw_bound_sweep, recover_pw, verify_pw_bound, PwRecovery};

//! Identification of the diffusion coefficient `a` in `-div(a ∇u) = f`.
//!
//! * [`forward`] and [`inverse`]: exact one-dimensional solvers built on the
//!   flux identity `a u' = C_a - F`, where `F` is a primitive of `f`.
//! * [`stability`]: band-measure exponents of `F`, Hölder-type bounds for
//!   `‖a - b‖_{L_p}` in terms of `‖u_a' - u_b'‖_{L2}`, and a dyadic family
//!   showing the exponent is sharp.
//! * [`counterexamples`]: explicit pairs `a != b` with the same state.
//! * [`gmt`]: total variation, level-set perimeters, the coarea identity.
//! * [`pw2d`]: piecewise-constant coefficients on block partitions of the
//!   unit square.
//!
//! All sweeps are seeded and reduce in a fixed order, so reports are
//! reproducible bit for bit.

// `!(x > 0.0)` is the idiom for rejecting NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexamples;
pub mod error;
pub mod forward;
pub mod gmt;
pub mod grid;
pub mod inverse;
pub mod io;
pub mod pw2d;
pub mod random;
pub mod report;
pub mod stability;

pub use error::{Error, Result};
pub use forward::{ForwardSolution, Source};
pub use grid::{CoefficientBounds, GridFunction1D, Interval, LpNorm, QuadratureRule};
pub use inverse::RecoveryResult;
pub use report::{Curve, ExperimentReport};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

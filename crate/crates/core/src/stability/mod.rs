//! Quantitative stability of coefficient recovery: band-measure exponents of
//! the source primitive, Hölder-type bounds, and the dyadic family showing
//! how sharp those bounds are.

pub mod dyadic;
pub mod holder;
pub mod measure;

pub use dyadic::{dyadic_build, dyadic_rate, DyadicBuild, DyadicFamily};
pub use holder::{
    holder_constant, holder_exponent, holder_exponent_exact, holder_sweep, verify_holder,
    HolderReport,
};
pub use measure::{default_rho_grid, fit_exponents, k_rho_measure, measure_extremes, ExponentFit};

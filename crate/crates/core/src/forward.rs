//! Exact 1D forward solver for `-(a u')' = f`, `u(lo) = u(hi) = 0`.
//!
//! Integrating once gives the flux identity `a u' = C_a - F` with `F` the
//! primitive of `f` (`F(lo) = 0`). The boundary condition `u(hi) = 0` fixes
//! `C_a = (∫F/a) / (∫1/a)`, after which `u` is a second quadrature. All
//! integrals use the same trapezoid rule, so `u(hi)` closes to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{quadrature, CoefficientBounds, GridFunction1D};

/// Right-hand side given either as a density `f` or directly as its
/// primitive `F` with `F(lo) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Density(GridFunction1D),
    Primitive(GridFunction1D),
}

impl Source {
    pub fn primitive(&self) -> GridFunction1D {
        match self {
            Source::Density(f) => primitive(f),
            Source::Primitive(big_f) => big_f.clone(),
        }
    }

    pub fn grid(&self) -> &GridFunction1D {
        match self {
            Source::Density(g) | Source::Primitive(g) => g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardTolerances {
    /// Relative bound on `max |a u' + F - C_a|`.
    pub consistency: f64,
    /// Relative bound on `|u(hi)|`.
    pub boundary: f64,
}

impl Default for ForwardTolerances {
    fn default() -> Self {
        Self {
            consistency: 1e-10,
            boundary: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardSolution {
    #[serde(rename = "Ca")]
    pub ca: f64,
    pub u: GridFunction1D,
    pub du: GridFunction1D,
    #[serde(rename = "F")]
    pub primitive: GridFunction1D,
}

impl ForwardSolution {
    /// `max_i |a_i du_i + F_i - C_a|`.
    pub fn flux_residual(&self, a: &GridFunction1D) -> f64 {
        a.values()
            .iter()
            .zip(self.du.values())
            .zip(self.primitive.values())
            .map(|((a, du), big_f)| (a * du + big_f - self.ca).abs())
            .fold(0.0, f64::max)
    }

    /// The flux residual divided by `1 + |C_a| + max|F|`.
    pub fn relative_flux_residual(&self, a: &GridFunction1D) -> f64 {
        self.flux_residual(a) / (1.0 + self.ca.abs() + self.primitive.max_abs())
    }

    /// `|u(hi)| / (1 + max|u|)`.
    pub fn boundary_defect(&self) -> f64 {
        self.u.last().abs() / (1.0 + self.u.max_abs())
    }
}

/// Cumulative trapezoid primitive `F(x) = ∫_lo^x f`.
pub fn primitive(f: &GridFunction1D) -> GridFunction1D {
    f.cumulative_integral()
}

/// `C_a = (∫F/a) / (∫1/a)`.
pub fn flux_constant(a: &GridFunction1D, big_f: &GridFunction1D) -> Result<f64> {
    a.check_same_grid(big_f)?;
    if let Some(v) = a.values().iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::invalid(format!(
            "coefficient must be positive, found {v}"
        )));
    }
    let f_over_a = big_f.zip_with(a, |fv, av| fv / av)?;
    let inv_a = a.map(|v| 1.0 / v);
    Ok(quadrature(&f_over_a) / quadrature(&inv_a))
}

/// Solves with `a` checked against `bounds` and default tolerances.
pub fn solve(
    a: &GridFunction1D,
    f: &GridFunction1D,
    bounds: &CoefficientBounds,
) -> Result<ForwardSolution> {
    bounds.check(a)?;
    solve_with_primitive(a, &primitive(f), ForwardTolerances::default())
}

pub fn solve_source(
    a: &GridFunction1D,
    source: &Source,
    bounds: &CoefficientBounds,
) -> Result<ForwardSolution> {
    bounds.check(a)?;
    solve_with_primitive(a, &source.primitive(), ForwardTolerances::default())
}

/// Entry point that takes the primitive `F` directly (no differentiation or
/// integration of `f`). Only positivity of `a` is required here.
pub fn solve_with_primitive(
    a: &GridFunction1D,
    big_f: &GridFunction1D,
    tol: ForwardTolerances,
) -> Result<ForwardSolution> {
    let ca = flux_constant(a, big_f)?;
    let du = big_f.zip_with(a, |fv, av| (ca - fv) / av)?;
    let u = du.cumulative_integral();
    let sol = ForwardSolution {
        ca,
        u,
        du,
        primitive: big_f.clone(),
    };
    let flux = sol.relative_flux_residual(a);
    if flux > tol.consistency {
        return Err(Error::ResidualTooLarge {
            what: "relative flux residual".into(),
            value: flux,
            tol: tol.consistency,
        });
    }
    let closure = sol.boundary_defect();
    if closure > tol.boundary {
        return Err(Error::ResidualTooLarge {
            what: "relative boundary defect u(hi)".into(),
            value: closure,
            tol: tol.boundary,
        });
    }
    Ok(sol)
}

//! Dyadic family of coefficient perturbations on `(-1, 1)`.
//!
//! `u(x) = Σ_k 2^{-αk} u0(2^k |x|)` with a smooth bump `u0` supported in
//! `(1/2, 1)`, so the terms have disjoint supports `(2^{-k-1}, 2^{-k})`.
//! With `f = -u''` and `a = 1`, the perturbed coefficients
//! `a_j = 1 + 2^{βj} χ_{S_j}`, `S_j = (-2^{-j}, 2^{-j})`, give
//! `‖u - u_j‖_V ~ 2^{(1/2 + β - α) j}` while `‖a - a_j‖_{L_p} ~ 2^{(β - 1/p) j}`,
//! so the best Hölder exponent is `γ = (1/p - β) / (α - 1/2 - β)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counterexamples::IntervalSet;
use crate::error::{Error, Result};
use crate::forward::{solve_with_primitive, ForwardSolution, ForwardTolerances};
use crate::grid::{lp_norm, CoefficientBounds, GridFunction1D, Interval, LpNorm};
use crate::report::{Curve, ExperimentReport};
use crate::stability::measure::least_squares;

/// Relative slope tolerance for [`dyadic_rate`].
pub const SLOPE_TOLERANCE: f64 = 0.15;

const TAIL_TOL: f64 = 1e-8;

/// Smooth bump on `(1/2, 1)`, normalized to peak value 1 at `x = 3/4`.
pub fn bump(y: f64) -> f64 {
    if y <= 0.5 || y >= 1.0 {
        return 0.0;
    }
    let g = (y - 0.5) * (1.0 - y);
    let e = 16.0 - 1.0 / g;
    if e < -700.0 {
        0.0
    } else {
        e.exp()
    }
}

pub fn bump_derivative(y: f64) -> f64 {
    if y <= 0.5 || y >= 1.0 {
        return 0.0;
    }
    let g = (y - 0.5) * (1.0 - y);
    let e = 16.0 - 1.0 / g;
    if e < -700.0 {
        0.0
    } else {
        e.exp() * (1.5 - 2.0 * y) / (g * g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicFamily {
    pub alpha_d: f64,
    pub beta_d: f64,
    pub jmax: u32,
    /// Highest series index kept.
    pub k_trunc: u32,
}

impl DyadicFamily {
    /// Picks the truncation so the tail beyond `K` is below `1e-8` relative
    /// to the size `2^{-(α-1/2) jmax}` of the finest perturbation studied.
    pub fn new(alpha_d: f64, beta_d: f64, jmax: u32) -> Result<Self> {
        if !(alpha_d > 0.5) || !alpha_d.is_finite() {
            return Err(Error::invalid(format!(
                "decay exponent must exceed 1/2, got {alpha_d}"
            )));
        }
        let k = (TAIL_TOL.log2().abs() / (alpha_d - 0.5)).floor() as u32 + 1;
        Self::with_truncation(alpha_d, beta_d, jmax, k + jmax)
    }

    pub fn with_truncation(alpha_d: f64, beta_d: f64, jmax: u32, k_trunc: u32) -> Result<Self> {
        let fam = Self {
            alpha_d,
            beta_d,
            jmax,
            k_trunc,
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_d > 0.5) {
            return Err(Error::invalid(format!(
                "decay exponent must exceed 1/2, got {}",
                self.alpha_d
            )));
        }
        if !(self.beta_d <= 0.0) {
            return Err(Error::invalid(format!(
                "perturbation exponent must be <= 0 for admissible a_j, got {}",
                self.beta_d
            )));
        }
        if self.jmax == 0 {
            return Err(Error::invalid("jmax must be positive"));
        }
        if self.tail_bound() >= TAIL_TOL {
            return Err(Error::invalid(format!(
                "series truncation K = {} leaves tail {:e} >= {TAIL_TOL:e}",
                self.k_trunc,
                self.tail_bound()
            )));
        }
        Ok(())
    }

    /// `2^{-(α-1/2)(K - jmax)}`: the truncated tail relative to the
    /// `V`-size of the `jmax` perturbation.
    pub fn tail_bound(&self) -> f64 {
        2f64.powf(-(self.alpha_d - 0.5) * (self.k_trunc as f64 - self.jmax as f64))
    }

    /// `γ = (1/p - β) / (α - 1/2 - β)`.
    pub fn gamma(&self, p: f64) -> f64 {
        (1.0 / p - self.beta_d) / (self.alpha_d - 0.5 - self.beta_d)
    }

    /// Series index `k` with `2^k |x| ∈ (1/2, 1]` and the rescaled point, or
    /// `None` outside the truncated support.
    fn locate(&self, x: f64) -> Option<(u32, f64)> {
        let mut y = x.abs();
        if y == 0.0 || y >= 1.0 {
            return None;
        }
        let mut k = 0;
        while y <= 0.5 {
            y *= 2.0;
            k += 1;
            if k > self.k_trunc {
                return None;
            }
        }
        Some((k, y))
    }

    pub fn u(&self, x: f64) -> f64 {
        self.locate(x)
            .map_or(0.0, |(k, y)| 2f64.powf(-self.alpha_d * k as f64) * bump(y))
    }

    pub fn du(&self, x: f64) -> f64 {
        self.locate(x).map_or(0.0, |(k, y)| {
            let v = 2f64.powf((1.0 - self.alpha_d) * k as f64) * bump_derivative(y);
            if x < 0.0 {
                -v
            } else {
                v
            }
        })
    }

    /// `a_j - 1 = 2^{βj} χ_{S_j}` on the grid (half weight at nodes on `∂S_j`).
    pub fn perturbation(&self, j: u32, n: usize) -> Result<GridFunction1D> {
        let r = 0.5f64.powi(j as i32);
        let s = IntervalSet::new(vec![(-r, r)])?;
        Ok(s.indicator(Interval::symmetric(), n)?
            .scale(2f64.powf(self.beta_d * j as f64)))
    }
}

#[derive(Debug, Clone)]
pub struct DyadicBuild {
    pub u: GridFunction1D,
    pub du: GridFunction1D,
    pub a_j: GridFunction1D,
    pub u_j: ForwardSolution,
}

impl DyadicBuild {
    /// `‖u - u_j‖_V = ‖u' - u_j'‖_{L2}`.
    pub fn v_distance(&self) -> Result<f64> {
        Ok(lp_norm(&self.du.sub(&self.u_j.du)?, LpNorm::Finite(2.0)))
    }

    /// `‖a - a_j‖_{L_p}` with `a = 1`.
    pub fn coefficient_distance(&self, p: LpNorm) -> f64 {
        lp_norm(&self.a_j.map(|v| v - 1.0), p)
    }
}

/// Samples `u`, `u'`, `a_j` on `n` cells of `(-1, 1)` and solves for `u_j`
/// from the primitive `F = -u' + u'(-1)`.
pub fn dyadic_build(fam: &DyadicFamily, j: u32, n: usize) -> Result<DyadicBuild> {
    fam.validate()?;
    if j > fam.jmax {
        return Err(Error::invalid(format!(
            "j = {j} exceeds jmax = {}",
            fam.jmax
        )));
    }
    let iv = Interval::symmetric();
    let u = GridFunction1D::from_fn(iv, n, |x| fam.u(x))?;
    let du = GridFunction1D::from_fn(iv, n, |x| fam.du(x))?;
    let a_j = fam.perturbation(j, n)?.map(|v| 1.0 + v);
    CoefficientBounds::new(1.0, 2.0)?.check(&a_j)?;
    let du_left = du.first();
    let big_f = du.map(|v| -v + du_left);
    let u_j = solve_with_primitive(&a_j, &big_f, ForwardTolerances::default())?;
    Ok(DyadicBuild { u, du, a_j, u_j })
}

/// Log-log slope of `‖a - a_j‖_{L_p}` against `‖u - u_j‖_V` over `j_range`,
/// compared with the predicted exponent `γ`.
pub fn dyadic_rate(
    fam: &DyadicFamily,
    p: f64,
    j_range: &[u32],
    n: usize,
) -> Result<ExperimentReport> {
    fam.validate()?;
    if !(fam.alpha_d > 0.5 + fam.beta_d) {
        return Err(Error::invalid("need alpha_d > 1/2 + beta_d"));
    }
    let lp = LpNorm::finite(p)?;
    let mut js: Vec<u32> = j_range.iter().copied().filter(|&j| j <= fam.jmax).collect();
    js.sort_unstable();
    js.dedup();

    let rows: Vec<(u32, f64, f64, f64)> = js
        .par_iter()
        .map(|&j| {
            let b = dyadic_build(fam, j, n)?;
            Ok((
                j,
                b.v_distance()?,
                b.coefficient_distance(lp),
                b.u_j.relative_flux_residual(&b.a_j),
            ))
        })
        .collect::<Result<_>>()?;
    let usable: Vec<&(u32, f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.1 > 0.0 && r.2 > 0.0 && r.1.is_finite() && r.2.is_finite())
        .collect();
    if usable.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 usable j values, got {}",
            usable.len()
        )));
    }

    let jf: Vec<f64> = usable.iter().map(|r| r.0 as f64).collect();
    let log_v: Vec<f64> = usable.iter().map(|r| r.1.log2()).collect();
    let log_a: Vec<f64> = usable.iter().map(|r| r.2.log2()).collect();
    let (_, slope) = least_squares(&log_v, &log_a);
    let (_, v_rate) = least_squares(&jf, &log_v);
    let (_, a_rate) = least_squares(&jf, &log_a);
    let gamma = fam.gamma(p);
    let rel_err = (slope - gamma).abs() / gamma;
    let max_flux = rows.iter().map(|r| r.3).fold(0.0, f64::max);

    let mut curve = Curve::new(&["j", "v_distance", "a_distance"]);
    for r in &rows {
        curve.push(vec![r.0 as f64, r.1, r.2]);
    }

    let mut rep = ExperimentReport::new("dyadic_rate");
    rep.input("family", fam)
        .input("p", p)
        .input("j_range", &js)
        .input("n", n)
        .metric("gamma_predicted", gamma)
        .metric("slope_measured", slope)
        .metric("slope_relative_error", rel_err)
        .metric("v_rate_per_j", v_rate)
        .metric("v_rate_predicted", 0.5 + fam.beta_d - fam.alpha_d)
        .metric("a_rate_per_j", a_rate)
        .metric("a_rate_predicted", fam.beta_d - 1.0 / p)
        .metric("max_relative_flux_residual", max_flux)
        .check("slope_within_tolerance", rel_err <= SLOPE_TOLERANCE)
        .curve("distances", curve);
    Ok(rep)
}

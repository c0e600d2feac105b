//! Block-wise stability bound
//! `|a_i - b_i| ‖f‖_{H^{-1}(D_i)} <= Λ² ‖∇(u_a - u_b)‖_{L2(D_i)}`
//! and per-block coefficient recovery.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CoefficientBounds;
use crate::pw2d::fem::{
    block_gradient_norm, block_gradient_norms, fem_solve, hminus1_norm, PwOperator,
};
use crate::pw2d::mesh::{NodalField, Partition2D, PwConstCoefficient};
use crate::random::rng;
use crate::report::{Curve, ExperimentReport};

/// Default `C` in the discretization slack `1 + C/m`.
pub const DEFAULT_SLACK_CONSTANT: f64 = 5.0;

pub fn slack(m: usize) -> f64 {
    1.0 + DEFAULT_SLACK_CONSTANT / m as f64
}

/// Per-block `‖f‖_{H^{-1}(D_i)}`, computed in parallel.
pub fn block_hminus1_norms(f: &NodalField, partition: Partition2D, m: usize) -> Result<Vec<f64>> {
    partition.check_mesh(m)?;
    let blocks: Vec<_> = partition.blocks().collect();
    blocks.par_iter().map(|&b| hminus1_norm(f, b, m)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockBound {
    pub block: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, with `0/0 = 0`.
    pub ratio: f64,
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn block_bounds(
    a: &PwConstCoefficient,
    b: &PwConstCoefficient,
    f: &NodalField,
    m: usize,
    hm1: &[f64],
) -> Result<Vec<BlockBound>> {
    if a.partition() != b.partition() {
        return Err(Error::invalid("coefficients live on different partitions"));
    }
    let (ua, ub) = rayon::join(|| fem_solve(a, f, m), || fem_solve(b, f, m));
    let diff = ua?.sub(&ub?)?;
    let grad = block_gradient_norms(&diff, a.partition())?;
    let upper = a.bounds().upper().max(b.bounds().upper());
    Ok((0..a.partition().len())
        .map(|i| {
            let lhs = (a.coeffs()[i] - b.coeffs()[i]).abs() * hm1[i];
            let rhs = upper * upper * grad[i];
            BlockBound {
                block: i,
                lhs,
                rhs,
                ratio: ratio(lhs, rhs),
            }
        })
        .collect())
}

/// Evaluates both sides of the bound on every block and checks
/// `lhs / rhs <= 1 + 5/m`.
pub fn verify_pw_bound(
    a: &PwConstCoefficient,
    b: &PwConstCoefficient,
    f: &NodalField,
    m: usize,
) -> Result<ExperimentReport> {
    a.partition().check_mesh(m)?;
    let hm1 = block_hminus1_norms(f, a.partition(), m)?;
    let rows = block_bounds(a, b, f, m, &hm1)?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let mut curve = Curve::new(&["block", "lhs", "rhs", "ratio"]);
    for r in &rows {
        curve.push(vec![r.block as f64, r.lhs, r.rhs, r.ratio]);
    }
    let mut rep = ExperimentReport::new("pw2d_verify");
    rep.input("a", a)
        .input("b", b)
        .input("m", m)
        .metric("max_ratio", max_ratio)
        .metric("slack", slack(m))
        .check("bound_holds", max_ratio <= slack(m))
        .curve("blocks", curve);
    Ok(rep)
}

/// [`verify_pw_bound`] over `trials` random admissible pairs on an
/// `nx × ny` partition with `f ≡ 1`.
pub fn pw_bound_sweep(
    partition: Partition2D,
    m: usize,
    trials: usize,
    seed: u64,
    bounds: CoefficientBounds,
) -> Result<ExperimentReport> {
    partition.check_mesh(m)?;
    let f = NodalField::constant(m, 1.0)?;
    let hm1 = block_hminus1_norms(&f, partition, m)?;
    let mut r = rng(seed);
    let mut draw = || -> Result<PwConstCoefficient> {
        let c = (0..partition.len())
            .map(|_| r.gen_range(bounds.lambda()..=bounds.upper()))
            .collect();
        PwConstCoefficient::new(partition, c, bounds)
    };
    let pairs: Vec<(PwConstCoefficient, PwConstCoefficient)> = (0..trials)
        .map(|_| Ok((draw()?, draw()?)))
        .collect::<Result<_>>()?;
    let results: Vec<Vec<BlockBound>> = pairs
        .par_iter()
        .map(|(a, b)| block_bounds(a, b, &f, m, &hm1))
        .collect::<Result<_>>()?;

    let mut curve = Curve::new(&["trial", "block", "lhs", "rhs", "ratio"]);
    let mut max_ratio = 0.0f64;
    for (t, rows) in results.iter().enumerate() {
        for r in rows {
            max_ratio = max_ratio.max(r.ratio);
            curve.push(vec![t as f64, r.block as f64, r.lhs, r.rhs, r.ratio]);
        }
    }
    let mut rep = ExperimentReport::new("pw2d_sweep");
    rep.input("nx", partition.nx())
        .input("ny", partition.ny())
        .input("m", m)
        .input("trials", trials)
        .input("seed", seed)
        .input("bounds", bounds)
        .metric("max_ratio", max_ratio)
        .metric("slack", slack(m))
        .metric(
            "min_hminus1_norm",
            hm1.iter().copied().fold(f64::INFINITY, f64::min),
        )
        .check("bound_holds", max_ratio <= slack(m))
        .curve("blocks", curve);
    Ok(rep)
}

pub const MAX_SWEEPS: usize = 50;
pub const SWEEP_DECREASE_TOL: f64 = 1e-10;
const GOLDEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PwRecovery {
    pub coefficient: PwConstCoefficient,
    pub sweeps: usize,
    /// `Σ_i ‖∇(u_h(a) - u_meas)‖_{L2(D_i)}` at the returned coefficient.
    pub objective: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Minimizes `g` on `[lo, hi]` by golden-section search.
fn golden_section(
    lo: f64,
    hi: f64,
    tol: f64,
    mut g: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    while b - a > tol {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d)?;
        }
    }
    Ok(if gc <= gd { c } else { d })
}

/// Coordinate descent over blocks in row-major order: each block's value is
/// chosen by golden-section search in `[λ, Λ]` to minimize that block's
/// gradient misfit. Starts from `sqrt(λΛ)` on every block.
pub fn recover_pw(
    u_meas: &NodalField,
    f: &NodalField,
    partition: Partition2D,
    bounds: CoefficientBounds,
    m: usize,
) -> Result<PwRecovery> {
    partition.check_mesh(m)?;
    u_meas.check_resolution(m)?;
    f.check_resolution(m)?;
    let mut warnings = Vec::new();
    let hm1 = block_hminus1_norms(f, partition, m)?;
    for (i, &v) in hm1.iter().enumerate() {
        if v == 0.0 {
            warnings.push(format!(
                "block {i}: ‖f‖_H^-1 = 0, coefficient not identifiable there"
            ));
        }
    }

    let start = (bounds.lambda() * bounds.upper()).sqrt();
    let mut coef = PwConstCoefficient::constant(partition, start, bounds)?;
    let op = PwOperator::new(partition, f, m)?;
    let mut state = op.solve(&coef, None)?;
    let total = |u: &NodalField| -> Result<f64> {
        Ok(block_gradient_norms(&u.sub(u_meas)?, partition)?
            .iter()
            .sum())
    };
    let mut objective = total(&state)?;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        for i in 0..partition.len() {
            let block = partition.block(i);
            let base = coef.clone();
            let mut warm = state.clone();
            let best = golden_section(bounds.lambda(), bounds.upper(), GOLDEN_TOL, |v| {
                warm = op.solve(&base.with_coeff(i, v)?, Some(&warm))?;
                Ok(block_gradient_norm(&warm.sub(u_meas)?, block))
            })?;
            coef = coef.with_coeff(i, best)?;
            state = op.solve(&coef, Some(&state))?;
        }
        let next = total(&state)?;
        let decrease = objective - next;
        objective = next;
        if decrease.abs() < SWEEP_DECREASE_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(format!("no convergence after {MAX_SWEEPS} sweeps"));
    }
    Ok(PwRecovery {
        coefficient: coef,
        sweeps,
        objective,
        converged,
        warnings,
    })
}

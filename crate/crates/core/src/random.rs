//! Seeded random inputs for sweeps. ChaCha streams keep every sweep
//! reproducible across runs and platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{CoefficientBounds, GridFunction1D, Interval};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Piecewise-linear function through `pieces + 1` equispaced breakpoints with
/// values drawn uniformly from `[lambda, Lambda]`.
pub fn piecewise_linear_coefficient<R: Rng>(
    rng: &mut R,
    interval: Interval,
    n: usize,
    pieces: usize,
    bounds: &CoefficientBounds,
) -> Result<GridFunction1D> {
    let knots: Vec<f64> = (0..=pieces)
        .map(|_| rng.gen_range(bounds.lambda()..=bounds.upper()))
        .collect();
    let coarse = GridFunction1D::new(interval, knots)?;
    GridFunction1D::from_fn(interval, n, |x| bounds.clamp(coarse.interpolate(x)))
}

/// `c0 + Σ_k c_k sin(kπ(x-lo)/L + φ_k)` with `k = 1..=modes`, scaled to stay
/// strictly inside `[lo_val, hi_val]`.
pub fn smooth_coefficient<R: Rng>(
    rng: &mut R,
    interval: Interval,
    n: usize,
    modes: usize,
    lo_val: f64,
    hi_val: f64,
) -> Result<GridFunction1D> {
    let mid = 0.5 * (lo_val + hi_val);
    let half = 0.5 * (hi_val - lo_val);
    let amps: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let phases: Vec<f64> = (0..modes)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    let total: f64 = amps.iter().map(|a| a.abs()).sum::<f64>().max(1e-12);
    let scale = 0.95 * half / total;
    let (lo, len) = (interval.lo(), interval.length());
    GridFunction1D::from_fn(interval, n, |x| {
        let s: f64 = amps
            .iter()
            .zip(&phases)
            .enumerate()
            .map(|(k, (a, ph))| {
                a * ((k + 1) as f64 * std::f64::consts::PI * (x - lo) / len + ph).sin()
            })
            .sum();
        mid + scale * s
    })
}

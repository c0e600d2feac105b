//! Sublevel-band measures `|K_ρ(M)| = |{x : |F(x) - M| <= ρ}|` and the
//! power-law bracket `C1 ρ^α <= inf_M |K_ρ(M)| <= sup_M |K_ρ(M)| <= C2 ρ^β`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction1D;

/// Tail slope of the sup branch below which `F` is treated as having a flat
/// piece (`β = 0` in the limit).
pub const FLAT_TAIL_SLOPE: f64 = 0.1;

/// Exact measure of `{x : |F(x) - M| <= rho}` for the piecewise-linear
/// interpolant of `F`.
pub fn k_rho_measure(big_f: &GridFunction1D, m: f64, rho: f64) -> f64 {
    let (lo_b, hi_b) = (m - rho, m + rho);
    let h = big_f.h();
    let mut total = 0.0;
    for w in big_f.values().windows(2) {
        let (f0, f1) = (w[0], w[1]);
        let frac = if f0 == f1 {
            if f0 >= lo_b && f0 <= hi_b {
                1.0
            } else {
                0.0
            }
        } else {
            let ta = (lo_b - f0) / (f1 - f0);
            let tb = (hi_b - f0) / (f1 - f0);
            let (t0, t1) = (ta.min(tb).max(0.0), ta.max(tb).min(1.0));
            (t1 - t0).max(0.0)
        };
        total += frac;
    }
    total * h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub rho_grid: Vec<f64>,
    pub inf_measures: Vec<f64>,
    pub sup_measures: Vec<f64>,
    /// Largest deviation of either branch from its fitted line in log space.
    pub residual: f64,
    /// Slope of the sup branch over the three smallest radii.
    pub beta_tail: f64,
    /// Set when the sup branch stops decaying: `F` has a plateau and `β`
    /// degenerates to 0.
    pub flat_source: bool,
}

impl ExponentFit {
    /// Whether `C1 ρ^α <= inf <= sup <= C2 ρ^β` on every grid radius.
    pub fn bracket_holds(&self) -> bool {
        self.rho_grid
            .iter()
            .zip(self.inf_measures.iter().zip(&self.sup_measures))
            .all(|(&r, (&lo, &hi))| {
                self.c1 * r.powf(self.alpha) <= lo && lo <= hi && hi <= self.c2 * r.powf(self.beta)
            })
    }
}

/// `2^-3, 2^-4, ..., 2^-12`, keeping only radii below half the range of `F`.
pub fn default_rho_grid(big_f: &GridFunction1D) -> Vec<f64> {
    let half_range = 0.5 * (big_f.max() - big_f.min());
    (3..=12)
        .map(|k| 0.5f64.powi(k))
        .filter(|&r| r < half_range)
        .collect()
}

/// Ordinary least-squares line `y = intercept + slope * x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// `inf_M` and `sup_M` of `|K_ρ(M)|` over `m_points` levels spaced uniformly
/// in `[F_min + ρ, F_max - ρ]`.
pub fn measure_extremes(big_f: &GridFunction1D, rho: f64, m_points: usize) -> (f64, f64) {
    let (fmin, fmax) = (big_f.min(), big_f.max());
    let span = fmax - fmin - 2.0 * rho;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for k in 0..m_points {
        let m = fmin + rho + span * k as f64 / (m_points - 1) as f64;
        let v = k_rho_measure(big_f, m, rho);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Fits `α` to the inf branch and `β` to the sup branch in log-log space.
///
/// If the fitted `α` comes out below `β` it is raised to `β`; a larger `α`
/// keeps the lower bound valid once `C1` is recomputed. `C1`, `C2` make the
/// bracket tight at the worst radius.
pub fn fit_exponents(
    big_f: &GridFunction1D,
    rho_grid: &[f64],
    m_points: usize,
) -> Result<ExponentFit> {
    let range = big_f.max() - big_f.min();
    if range < 1e-12 {
        return Err(Error::ConstantPrimitive);
    }
    if m_points < 8 {
        return Err(Error::invalid(format!(
            "need at least 8 M levels, got {m_points}"
        )));
    }
    if rho_grid.len() < 3 {
        return Err(Error::invalid("need at least 3 radii"));
    }
    if rho_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("rho grid must be strictly decreasing"));
    }
    if rho_grid.iter().any(|&r| !(r > 0.0 && r < 0.5 * range)) {
        return Err(Error::invalid(format!(
            "radii must lie in (0, {}) for this F",
            0.5 * range
        )));
    }

    let (inf_m, sup_m): (Vec<f64>, Vec<f64>) = rho_grid
        .iter()
        .map(|&r| measure_extremes(big_f, r, m_points))
        .unzip();
    let log_r: Vec<f64> = rho_grid.iter().map(|r| r.ln()).collect();
    let log_inf: Vec<f64> = inf_m.iter().map(|v| v.ln()).collect();
    let log_sup: Vec<f64> = sup_m.iter().map(|v| v.ln()).collect();

    let (ia, alpha_fit) = least_squares(&log_r, &log_inf);
    let (ib, beta) = least_squares(&log_r, &log_sup);
    let alpha = alpha_fit.max(beta);

    let misfit = |ic: f64, s: f64, ys: &[f64]| {
        log_r
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - (ic + s * x)).abs())
            .fold(0.0, f64::max)
    };
    let residual = misfit(ia, alpha_fit, &log_inf).max(misfit(ib, beta, &log_sup));

    let c1 = rho_grid
        .iter()
        .zip(&inf_m)
        .map(|(r, v)| v / r.powf(alpha))
        .fold(f64::INFINITY, f64::min)
        * (1.0 - 8.0 * f64::EPSILON);
    let c2 = rho_grid
        .iter()
        .zip(&sup_m)
        .map(|(r, v)| v / r.powf(beta))
        .fold(0.0, f64::max)
        * (1.0 + 8.0 * f64::EPSILON);

    let k = log_r.len();
    let (_, beta_tail) = least_squares(&log_r[k - 3..], &log_sup[k - 3..]);

    Ok(ExponentFit {
        alpha,
        beta,
        c1,
        c2,
        rho_grid: rho_grid.to_vec(),
        inf_measures: inf_m,
        sup_measures: sup_m,
        residual,
        beta_tail,
        flat_source: beta_tail < FLAT_TAIL_SLOPE,
    })
}

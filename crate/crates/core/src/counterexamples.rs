//! Explicit pairs `a != b` with the same state `u`, showing that the
//! identifiability hypotheses cannot be dropped:
//!
//! * a Volterra-type construction where `f` vanishes on a fat Cantor set
//!   `S_n` and `b` differs from `a` only there;
//! * an inhomogeneous-boundary pair on `(0, 1)` with `f = 1`.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::Source;
use crate::grid::{derivative, lp_norm, CoefficientBounds, GridFunction1D, Interval, LpNorm};

/// Sorted, pairwise disjoint intervals `(lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &intervals {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInterval { lo, hi });
            }
        }
        if intervals.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::invalid("intervals must be sorted and disjoint"));
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self {
            intervals: Vec::new(),
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }

    /// Whether `x` lies in the closure of some interval.
    pub fn contains_closed(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    /// Whether `x` lies in the interior of some interval.
    pub fn contains_open(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo < x && x < hi)
    }

    /// Gaps of the set inside `within`.
    pub fn complement(&self, within: Interval) -> Self {
        let mut out = Vec::new();
        let mut cursor = within.lo();
        for &(lo, hi) in &self.intervals {
            let lo = lo.max(within.lo());
            let hi = hi.min(within.hi());
            if hi <= lo {
                continue;
            }
            if lo > cursor {
                out.push((cursor, lo));
            }
            cursor = cursor.max(hi);
        }
        if cursor < within.hi() {
            out.push((cursor, within.hi()));
        }
        Self { intervals: out }
    }

    /// Samples `χ` on a grid. Each node takes the mean of the one-sided
    /// limits that exist inside the grid interval, so a node on a jump gets
    /// `1/2` and the trapezoid integral of the indicator equals the measure
    /// whenever the endpoints are nodes.
    pub fn indicator(&self, interval: Interval, n: usize) -> Result<GridFunction1D> {
        let left = |x: f64| self.intervals.iter().any(|&(lo, hi)| lo < x && x <= hi);
        let right = |x: f64| self.intervals.iter().any(|&(lo, hi)| lo <= x && x < hi);
        let as_f = |b: bool| if b { 1.0 } else { 0.0 };
        let g = GridFunction1D::constant(interval, n, 0.0)?;
        let values = (0..=n)
            .map(|i| {
                let x = g.x(i);
                if i == 0 {
                    as_f(right(x))
                } else if i == n {
                    as_f(left(x))
                } else {
                    0.5 * (as_f(left(x)) + as_f(right(x)))
                }
            })
            .collect();
        Ok(g.with_values(values))
    }
}

const MAX_SVC_LEVEL: u32 = 20;

type Q = Ratio<i128>;
type Pieces = Vec<(Q, Q)>;

fn svc_exact(level: u32) -> Result<(Pieces, Pieces)> {
    if !(1..=MAX_SVC_LEVEL).contains(&level) {
        return Err(Error::invalid(format!(
            "SVC level must be in 1..={MAX_SVC_LEVEL}, got {level}"
        )));
    }
    let mut kept = vec![(Q::from_integer(0), Q::from_integer(1))];
    let mut removed = Vec::new();
    for k in 1..=level {
        let gap = Q::new(1, 1i128 << (2 * k));
        let half = gap / 2;
        let mut next = Vec::with_capacity(2 * kept.len());
        for (lo, hi) in kept {
            let mid = (lo + hi) / 2;
            next.push((lo, mid - half));
            next.push((mid + half, hi));
            removed.push((mid - half, mid + half));
        }
        kept = next;
    }
    removed.sort();
    Ok((kept, removed))
}

fn to_set(v: &[(Q, Q)]) -> IntervalSet {
    let f = |q: &Q| *q.numer() as f64 / *q.denom() as f64;
    IntervalSet {
        intervals: v.iter().map(|(lo, hi)| (f(lo), f(hi))).collect(),
    }
}

/// Level-`n` Smith–Volterra–Cantor approximant: stage `k` removes the open
/// middle interval of length `4^{-k}` from each of the `2^{k-1}` remaining
/// pieces. Endpoints are dyadic and exact in `f64`.
pub fn svc_set(level: u32) -> Result<IntervalSet> {
    Ok(to_set(&svc_exact(level)?.0))
}

/// The `2^level - 1` open intervals removed up to `level`, sorted.
pub fn svc_removed(level: u32) -> Result<IntervalSet> {
    Ok(to_set(&svc_exact(level)?.1))
}

/// Exact measure of [`svc_set`], `1/2 + 2^{-(level+1)}`.
pub fn svc_measure_exact(level: u32) -> Result<Ratio<i128>> {
    Ok(svc_exact(level)?.0.iter().map(|(lo, hi)| hi - lo).sum())
}

/// A pair of coefficients sharing one state, with the evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexamplePair {
    pub name: String,
    pub a: GridFunction1D,
    pub b: GridFunction1D,
    pub u: GridFunction1D,
    #[serde(rename = "f_or_F")]
    pub rhs: Source,
    pub residual_a: f64,
    pub residual_b: f64,
    pub residual_tol: f64,
    /// `‖a - b‖_{L1}`
    pub coeff_gap: f64,
    pub gap_floor: f64,
    pub bounds: CoefficientBounds,
    pub checks: BTreeMap<String, f64>,
}

impl CounterexamplePair {
    /// Both residuals below tolerance while the coefficients stay apart.
    pub fn is_certificate(&self) -> bool {
        self.residual_a < self.residual_tol
            && self.residual_b < self.residual_tol
            && self.coeff_gap > self.gap_floor
    }
}

/// Discrete weak-form residual `max_i |∫ (c u' + F) φ_i'|` over interior hat
/// functions, with cell averages for `c` and `F`. For `F' = f` this is the
/// weak form of `-(c u')' = f`.
pub fn weak_residual(
    c: &GridFunction1D,
    u: &GridFunction1D,
    big_f: &GridFunction1D,
) -> Result<f64> {
    c.check_same_grid(u)?;
    c.check_same_grid(big_f)?;
    let (cv, uv, fv) = (c.values(), u.values(), big_f.values());
    let h = c.h();
    let sigma: Vec<f64> = (0..c.n())
        .map(|k| 0.5 * (cv[k] + cv[k + 1]) * (uv[k + 1] - uv[k]) / h + 0.5 * (fv[k] + fv[k + 1]))
        .collect();
    Ok(sigma
        .windows(2)
        .map(|w| (w[0] - w[1]).abs())
        .fold(0.0, f64::max))
}

/// Smooth lobe on `(0, 1)` with peak 1 at `t = 1/2`.
fn lobe(t: f64) -> (f64, f64) {
    if t <= 0.0 || t >= 1.0 {
        return (0.0, 0.0);
    }
    let g = t * (1.0 - t);
    let e = 1.0 - 0.25 / g;
    if e < -700.0 {
        return (0.0, 0.0);
    }
    let v = e.exp();
    (v, v * 0.25 * (1.0 - 2.0 * t) / (g * g))
}

/// `w` and `w'` for one removed interval: a positive lobe on the left half
/// and its mirror image with opposite sign on the right half, so `∫_U w = 0`.
fn two_lobe(x: f64, lo: f64, hi: f64) -> (f64, f64) {
    let len = hi - lo;
    let s = (x - lo) / len;
    let (p, dp) = lobe(2.0 * s);
    let (q, dq) = lobe(2.0 * s - 1.0);
    (p - q, 2.0 * (dp - dq) / len)
}

const VOLTERRA_RESIDUAL_TOL: f64 = 1e-8;
const GAP_FLOOR: f64 = 0.1;

/// Volterra-type pair on `(0, 1)`: `w` is a sum of two-lobe bumps on the
/// intervals removed up to `level`, `u = ∫ w`, `F = -w` (so `f = -w'`),
/// `a = 1` and `b = 1 + amp χ_{S_n}`. Since `w = 0` on `S_n`, `a u' = b u'`
/// and both solve the same problem.
pub fn volterra_pair(level: u32, n: usize, amp: f64) -> Result<CounterexamplePair> {
    if !(amp.is_finite() && (0.0..=1.0).contains(&amp)) {
        return Err(Error::invalid(format!(
            "bump amplitude must lie in [0, 1], got {amp}"
        )));
    }
    let removed = svc_removed(level)?;
    let kept = svc_set(level)?;
    let required = 8usize << (2 * level);
    if n < required {
        return Err(Error::GridTooCoarse { n, required });
    }
    let iv = Interval::unit();
    let eval = |x: f64| {
        removed
            .intervals()
            .iter()
            .find(|&&(lo, hi)| lo < x && x < hi)
            .map_or((0.0, 0.0), |&(lo, hi)| two_lobe(x, lo, hi))
    };
    let w = GridFunction1D::from_fn(iv, n, |x| eval(x).0)?;
    let f = GridFunction1D::from_fn(iv, n, |x| -eval(x).1)?;
    let u = w.cumulative_integral();
    let big_f = w.scale(-1.0);
    let a = GridFunction1D::constant(iv, n, 1.0)?;
    let b = kept.indicator(iv, n)?.map(|v| 1.0 + amp * v);
    let bounds = CoefficientBounds::new(1.0, 2.0)?;
    bounds.check(&b)?;

    let w_inf = w.max_abs();
    let residual_a = weak_residual(&a, &u, &big_f)? / w_inf;
    let residual_b = weak_residual(&b, &u, &big_f)? / w_inf;
    for (what, value) in [("residual_a", residual_a), ("residual_b", residual_b)] {
        if !(value < VOLTERRA_RESIDUAL_TOL) {
            return Err(Error::ResidualTooLarge {
                what: format!("{what} (level {level}, n {n})"),
                value,
                tol: VOLTERRA_RESIDUAL_TOL,
            });
        }
    }

    let fv = f.values();
    let min_removed_sup_f = removed
        .intervals()
        .iter()
        .map(|&(lo, hi)| {
            (0..=n)
                .filter(|&i| lo < f.x(i) && f.x(i) < hi)
                .map(|i| fv[i].abs())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    let max_f_on_s = (0..=n)
        .filter(|&i| kept.contains_open(f.x(i)))
        .map(|i| fv[i].abs())
        .fold(0.0, f64::max);

    let mut checks = BTreeMap::new();
    checks.insert("boundary_u_right".into(), u.last());
    checks.insert("min_removed_sup_f".into(), min_removed_sup_f);
    checks.insert("max_f_on_s".into(), max_f_on_s);
    checks.insert("s_measure".into(), kept.measure());
    checks.insert("w_inf".into(), w_inf);

    Ok(CounterexamplePair {
        name: "volterra".into(),
        coeff_gap: lp_norm(&a.sub(&b)?, LpNorm::Finite(1.0)),
        a,
        b,
        u,
        rhs: Source::Primitive(big_f),
        residual_a,
        residual_b,
        residual_tol: VOLTERRA_RESIDUAL_TOL,
        gap_floor: GAP_FLOOR,
        bounds,
        checks,
    })
}

/// `u = -(x + 1/2)^2 / 2`, `a = 1 + 1/(x + 1/2)`, `b = 1`, `f = 1` on
/// `(0, 1)`: both fluxes have slope `-1`, but `u` has nonzero boundary
/// values.
pub fn inhomogeneous_pair(n: usize) -> Result<CounterexamplePair> {
    if n < 16 {
        return Err(Error::GridTooCoarse { n, required: 16 });
    }
    let iv = Interval::unit();
    let u = GridFunction1D::from_fn(iv, n, |x| -0.5 * (x + 0.5) * (x + 0.5))?;
    let du = GridFunction1D::from_fn(iv, n, |x| -(x + 0.5))?;
    let a = GridFunction1D::from_fn(iv, n, |x| 1.0 + 1.0 / (x + 0.5))?;
    let b = GridFunction1D::constant(iv, n, 1.0)?;
    let f = GridFunction1D::constant(iv, n, 1.0)?;
    let big_f = GridFunction1D::from_fn(iv, n, |x| x)?;
    let bounds = CoefficientBounds::new(1.0, 3.0)?;
    bounds.check(&a)?;

    let flux_a = a.zip_with(&du, |p, q| p * q)?;
    let flux_b = b.zip_with(&du, |p, q| p * q)?;
    let identity = |flux: &GridFunction1D, shift: f64| {
        (0..=n)
            .map(|i| (flux.values()[i] + flux.x(i) + 0.5 + shift).abs())
            .fold(0.0, f64::max)
    };
    let slope_defect = |flux: &GridFunction1D| -> Result<f64> {
        Ok(derivative(flux)?
            .values()
            .iter()
            .map(|d| (d + 1.0).abs())
            .fold(0.0, f64::max))
    };

    let h = iv.length() / n as f64;
    // Weak residuals are O(h^3); the rounding allowance covers large n.
    let tol = h * h + 64.0 * f64::EPSILON * n as f64;
    let residual_a = weak_residual(&a, &u, &big_f)?;
    let residual_b = weak_residual(&b, &u, &big_f)?;

    let mut checks = BTreeMap::new();
    checks.insert("flux_identity_a".into(), identity(&flux_a, 1.0));
    checks.insert("flux_identity_b".into(), identity(&flux_b, 0.0));
    checks.insert("flux_slope_defect_a".into(), slope_defect(&flux_a)?);
    checks.insert("flux_slope_defect_b".into(), slope_defect(&flux_b)?);
    checks.insert("u_left".into(), u.first());
    checks.insert("u_right".into(), u.last());

    Ok(CounterexamplePair {
        name: "inhomogeneous".into(),
        coeff_gap: lp_norm(&a.sub(&b)?, LpNorm::Finite(1.0)),
        a,
        b,
        u,
        rhs: Source::Density(f),
        residual_a,
        residual_b,
        residual_tol: tol,
        gap_floor: GAP_FLOOR,
        bounds,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svc_level_one() {
        let s = svc_set(1).unwrap();
        assert_eq!(s.intervals(), &[(0.0, 0.375), (0.625, 1.0)]);
        assert_eq!(s.measure(), 0.75);
        assert_eq!(svc_set(2).unwrap().measure(), 0.625);
        assert_eq!(svc_removed(2).unwrap().len(), 3);
    }

    #[test]
    fn svc_measure_formula_is_exact() {
        for level in 1..=20 {
            let exact = svc_measure_exact(level).unwrap();
            assert_eq!(
                exact,
                Ratio::new(1, 2) + Ratio::new(1, 1i128 << (level + 1))
            );
            let s = svc_set(level).unwrap();
            assert_eq!(s.len(), 1 << level);
            assert_eq!(s.measure(), 0.5 + 0.5f64.powi(level as i32 + 1));
        }
        assert!(svc_set(0).is_err());
        assert!(svc_set(21).is_err());
    }

    #[test]
    fn svc_complement_matches_removed() {
        let level = 4;
        let kept = svc_set(level).unwrap();
        assert_eq!(
            kept.complement(Interval::unit()),
            svc_removed(level).unwrap()
        );
    }

    #[test]
    fn indicator_integrates_to_measure() {
        let s = svc_set(3).unwrap();
        let chi = s.indicator(Interval::unit(), 1 << 10).unwrap();
        assert_eq!(chi.first(), 1.0);
        assert_eq!(chi.last(), 1.0);
        assert!((crate::grid::quadrature(&chi) - s.measure()).abs() < 1e-14);
        let mid = IntervalSet::new(vec![(0.25, 0.75)]).unwrap();
        let chi = mid.indicator(Interval::unit(), 8).unwrap();
        assert_eq!(chi.values(), &[0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn interval_set_validation() {
        assert!(IntervalSet::new(vec![(0.5, 0.2)]).is_err());
        assert!(IntervalSet::new(vec![(0.0, 0.5), (0.4, 0.6)]).is_err());
        assert!(IntervalSet::new(vec![(0.0, 0.5), (0.5, 0.6)]).is_ok());
    }

    #[test]
    fn lobe_pair_has_zero_mean() {
        let n = 4096;
        let g = GridFunction1D::from_fn(Interval::unit(), n, |x| two_lobe(x, 0.0, 1.0).0).unwrap();
        assert!(crate::grid::quadrature(&g).abs() < 1e-15);
        let h = 1e-6;
        for x in [0.1, 0.3, 0.55, 0.8] {
            let fd = (two_lobe(x + h, 0.0, 1.0).0 - two_lobe(x - h, 0.0, 1.0).0) / (2.0 * h);
            assert!((fd - two_lobe(x, 0.0, 1.0).1).abs() < 1e-6);
        }
    }

    #[test]
    fn volterra_small_certificate() {
        let p = volterra_pair(2, 1 << 12, 0.5).unwrap();
        assert!(p.is_certificate());
        assert!((p.coeff_gap - 0.5 * 0.625).abs() < 1e-12);
        assert!(p.checks["min_removed_sup_f"] > 0.0);
        assert_eq!(p.checks["max_f_on_s"], 0.0);
    }

    #[test]
    fn volterra_zero_amplitude_collapses() {
        let p = volterra_pair(2, 1 << 12, 0.0).unwrap();
        assert_eq!(p.a, p.b);
        assert_eq!(p.coeff_gap, 0.0);
        assert_eq!(p.residual_a, p.residual_b);
        assert!(!p.is_certificate());
    }

    #[test]
    fn volterra_rejects_coarse_grid() {
        assert!(matches!(
            volterra_pair(3, 256, 0.5),
            Err(Error::GridTooCoarse { .. })
        ));
        assert!(volterra_pair(3, 1 << 12, 1.5).is_err());
    }

    #[test]
    fn inhomogeneous_examples() {
        let p = inhomogeneous_pair(1024).unwrap();
        assert_eq!(p.a.first(), 3.0);
        assert!((p.a.last() - 5.0 / 3.0).abs() < 1e-15);
        assert!((p.coeff_gap - 3f64.ln()).abs() < 1e-6);
        assert!(p.checks["flux_identity_a"] < 1e-12);
        assert!(p.checks["flux_identity_b"] < 1e-12);
        assert!(p.is_certificate());
        assert!(inhomogeneous_pair(8).is_err());
    }
}

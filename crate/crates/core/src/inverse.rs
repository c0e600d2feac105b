//! Coefficient recovery from `(u', f)` in 1D.
//!
//! The flux identity `a u' = C - F` determines `a = (C - F) / u'` wherever
//! `u' != 0`. The constant `C` is read off at a zero of `u'`, which must exist
//! in the open interval because `∫u' = 0` under homogeneous boundary values.
//! Nodes where `|u'|` falls below a threshold carry no information about `a`;
//! they are masked and filled from the nearest unmasked node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{solve_with_primitive, ForwardTolerances, Source};
use crate::grid::{lp_norm, CoefficientBounds, GridFunction1D, LpNorm};
use crate::report::{Curve, ExperimentReport};

/// Where the integration constant was read off and what it is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub c: f64,
    /// Location of the zero of `u'` used for `c`.
    pub x0: f64,
    /// Every located zero of `u'` (sign changes and exact nodal zeros).
    pub candidates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub a: GridFunction1D,
    #[serde(rename = "C")]
    pub c: f64,
    pub x0: f64,
    pub threshold: f64,
    pub degenerate_mask: Vec<bool>,
    pub fraction_degenerate: f64,
    /// Unmasked nodes whose raw estimate fell outside the bounds.
    pub clamped_nodes: usize,
    pub candidates: Vec<f64>,
}

impl RecoveryResult {
    /// `‖a_rec - a‖_{L1}` counting only unmasked nodes.
    pub fn l1_error_unmasked(&self, truth: &GridFunction1D) -> Result<f64> {
        let diff = self.a.sub(truth)?;
        let masked = diff.with_values(
            diff.values()
                .iter()
                .zip(&self.degenerate_mask)
                .map(|(d, &m)| if m { 0.0 } else { *d })
                .collect(),
        );
        Ok(lp_norm(&masked, LpNorm::Finite(1.0)))
    }
}

/// `sqrt(h) * max|u'| * 1e-2`.
pub fn default_threshold(du: &GridFunction1D) -> f64 {
    du.h().sqrt() * du.max_abs() * 1e-2
}

/// Finds `C = F(x0)` at a zero `x0` of `u'`.
///
/// Sign changes between adjacent nodes are refined by linear interpolation;
/// among all located zeros the one bracketed by the smallest `|u'|` wins.
/// Without any sign change the interior minimizer of `|u'|` is accepted if it
/// lies below `threshold`.
pub fn recover_constant(
    du: &GridFunction1D,
    big_f: &GridFunction1D,
    threshold: f64,
) -> Result<ConstantEstimate> {
    du.check_same_grid(big_f)?;
    let n = du.n();
    if n < 2 {
        return Err(Error::GridTooCoarse { n, required: 2 });
    }
    let d = du.values();
    let fv = big_f.values();
    let h = du.h();

    // (score, x, C)
    let mut best: Option<(f64, f64, f64)> = None;
    let mut candidates = Vec::new();
    let consider = |score: f64, x: f64, c: f64, best: &mut Option<(f64, f64, f64)>| {
        if best.is_none_or(|b| score < b.0) {
            *best = Some((score, x, c));
        }
    };

    for i in 1..n {
        if d[i] == 0.0 {
            candidates.push(du.x(i));
            consider(0.0, du.x(i), fv[i], &mut best);
        }
    }
    for i in 0..n {
        let (l, r) = (d[i], d[i + 1]);
        if l * r < 0.0 {
            let t = l / (l - r);
            let x = du.x(i) + t * h;
            let c = fv[i] + t * (fv[i + 1] - fv[i]);
            candidates.push(x);
            consider(l.abs().min(r.abs()), x, c, &mut best);
        }
    }
    candidates.sort_by(f64::total_cmp);

    if let Some((_, x0, c)) = best {
        return Ok(ConstantEstimate { c, x0, candidates });
    }

    let (imin, min_abs) = (1..n)
        .map(|i| (i, d[i].abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n >= 2 leaves an interior node");
    if min_abs < threshold {
        Ok(ConstantEstimate {
            c: fv[imin],
            x0: du.x(imin),
            candidates: vec![du.x(imin)],
        })
    } else {
        Err(Error::NoZeroOfDerivative { min_abs })
    }
}

/// Recovers `a` from `u'` and the source. `threshold = None` uses
/// [`default_threshold`].
pub fn recover(
    du: &GridFunction1D,
    source: &Source,
    bounds: &CoefficientBounds,
    threshold: Option<f64>,
) -> Result<RecoveryResult> {
    let big_f = source.primitive();
    du.check_same_grid(&big_f)?;
    let threshold = threshold.unwrap_or_else(|| default_threshold(du));
    if !(threshold > 0.0) {
        return Err(Error::invalid(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let est = recover_constant(du, &big_f, threshold)?;

    let d = du.values();
    let mask: Vec<bool> = d.iter().map(|v| v.abs() < threshold).collect();
    if mask.iter().all(|&m| m) {
        return Err(Error::GradientVanishes);
    }

    let mut clamped = 0;
    let raw: Vec<Option<f64>> = d
        .iter()
        .zip(big_f.values())
        .zip(&mask)
        .map(|((&dv, &fv), &m)| {
            if m {
                None
            } else {
                let v = (est.c - fv) / dv;
                if !bounds.contains(v) {
                    clamped += 1;
                }
                Some(bounds.clamp(v))
            }
        })
        .collect();

    let a = du.with_values(nearest_fill(&raw));
    let masked = mask.iter().filter(|&&m| m).count();
    Ok(RecoveryResult {
        a,
        c: est.c,
        x0: est.x0,
        threshold,
        fraction_degenerate: masked as f64 / mask.len() as f64,
        degenerate_mask: mask,
        clamped_nodes: clamped,
        candidates: est.candidates,
    })
}

/// Fills `None` entries with the nearest `Some` (ties go left). At least one
/// entry must be `Some`.
fn nearest_fill(raw: &[Option<f64>]) -> Vec<f64> {
    let len = raw.len();
    let mut left: Vec<Option<(usize, f64)>> = vec![None; len];
    let mut last = None;
    for i in 0..len {
        if let Some(v) = raw[i] {
            last = Some((i, v));
        }
        left[i] = last;
    }
    let mut out = vec![0.0; len];
    let mut next: Option<(usize, f64)> = None;
    for i in (0..len).rev() {
        if let Some(v) = raw[i] {
            next = Some((i, v));
        }
        out[i] = match (left[i], next) {
            (Some((l, lv)), Some((r, rv))) => {
                if i - l <= r - i {
                    lv
                } else {
                    rv
                }
            }
            (Some((_, lv)), None) => lv,
            (None, Some((_, rv))) => rv,
            (None, None) => unreachable!("at least one unmasked node"),
        };
    }
    out
}

/// Spearman rank correlation; `None` when fewer than 3 points or a column
/// is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 3 {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// For each perturbed coefficient `a_n` tabulates `‖u'_{a_n} - u'_a‖_{L2}`
/// against `‖a_n - a‖_{L_p}` and tests whether the second column tracks the
/// first (Spearman correlation above 0.9).
pub fn convergence_study(
    a: &GridFunction1D,
    perturbations: &[GridFunction1D],
    source: &Source,
    p: LpNorm,
) -> Result<ExperimentReport> {
    let big_f = source.primitive();
    let tol = ForwardTolerances::default();
    let base = solve_with_primitive(a, &big_f, tol)?;
    let mut curve = Curve::new(&["index", "du_diff_l2", "a_diff_lp"]);
    let mut max_flux = base.relative_flux_residual(a);
    for (k, an) in perturbations.iter().enumerate() {
        let sol = solve_with_primitive(an, &big_f, tol)?;
        max_flux = max_flux.max(sol.relative_flux_residual(an));
        let du_diff = lp_norm(&sol.du.sub(&base.du)?, LpNorm::Finite(2.0));
        let a_diff = lp_norm(&an.sub(a)?, p);
        curve.push(vec![k as f64, du_diff, a_diff]);
    }

    let du_col = curve.column("du_diff_l2").unwrap_or_default();
    let a_col = curve.column("a_diff_lp").unwrap_or_default();
    let all_zero = du_col.iter().chain(&a_col).all(|&v| v == 0.0);
    let rho = spearman(&du_col, &a_col);

    let mut report = ExperimentReport::new("convergence_study");
    report
        .input("p", p.to_string())
        .input("n", a.n())
        .input("perturbations", perturbations.len())
        .metric("max_relative_flux_residual", max_flux);
    if let Some(r) = rho {
        report.metric("spearman", r);
    }
    if let (Some(first), Some(last)) = (du_col.first(), du_col.last()) {
        report
            .metric("du_diff_first", *first)
            .metric("du_diff_last", *last);
    }
    if let (Some(first), Some(last)) = (a_col.first(), a_col.last()) {
        report
            .metric("a_diff_first", *first)
            .metric("a_diff_last", *last);
    }
    let monotone = if all_zero {
        report.note("both columns identically zero");
        true
    } else {
        rho.is_some_and(|r| r > 0.9)
    };
    report.metric("monotone_trend", if monotone { 1.0 } else { 0.0 });
    report.curve("columns", curve);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::solve;
    use crate::grid::Interval;

    fn unit(n: usize, f: impl Fn(f64) -> f64) -> GridFunction1D {
        GridFunction1D::from_fn(Interval::unit(), n, f).unwrap()
    }

    fn bounds() -> CoefficientBounds {
        CoefficientBounds::new(0.5, 2.0).unwrap()
    }

    #[test]
    fn constant_from_linear_derivative() {
        let est = recover_constant(&unit(100, |x| 0.5 - x), &unit(100, |x| x), 1e-6).unwrap();
        assert!((est.c - 0.5).abs() < 1e-14);
        assert!((est.x0 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constant_roundtrip_with_cosine_source() {
        let n = 2048;
        let f = unit(n, |x| (2.0 * std::f64::consts::PI * x).cos());
        let sol = solve(&unit(n, |_| 1.0), &f, &bounds()).unwrap();
        let est = recover_constant(&sol.du, &sol.primitive, 1e-8).unwrap();
        assert!((est.c - sol.ca).abs() < 1e-6);
    }

    #[test]
    fn constant_roundtrip_variable_coefficient() {
        let n = 4096;
        let a = unit(n, |x| 1.0 + x);
        let sol = solve(&a, &unit(n, |_| 1.0), &bounds()).unwrap();
        let est = recover_constant(&sol.du, &sol.primitive, 1e-8).unwrap();
        assert!((est.c - sol.ca).abs() < 1e-6 * sol.ca.abs());
    }

    #[test]
    fn one_signed_derivative_is_rejected() {
        let err = recover_constant(&unit(50, |x| 1.0 + x), &unit(50, |x| x), 1e-6).unwrap_err();
        assert!(err.to_string().contains("no zero of u′"));
    }

    #[test]
    fn recover_linear_case() {
        let n = 100;
        let r = recover(
            &unit(n, |x| 0.5 - x),
            &Source::Density(unit(n, |_| 1.0)),
            &bounds(),
            Some(1e-6),
        )
        .unwrap();
        assert!(r.fraction_degenerate <= 2.0 / (n as f64 + 1.0));
        assert!(r.a.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(r.degenerate_mask[50]);
    }

    #[test]
    fn vanishing_source_is_degenerate() {
        let n = 64;
        let f = unit(n, |_| 0.0);
        let sol = solve(&unit(n, |_| 1.0), &f, &bounds()).unwrap();
        let err = recover(&sol.du, &Source::Density(f), &bounds(), Some(1e-12)).unwrap_err();
        assert!(matches!(err, Error::GradientVanishes));
    }

    #[test]
    fn roundtrip_sign_changing_source() {
        let n = 4096;
        let a = unit(n, |x| 1.0 + 0.5 * (3.0 * std::f64::consts::PI * x).sin());
        let f = unit(n, |x| 1.0 - 2.0 * x);
        let sol = solve(&a, &f, &bounds()).unwrap();
        let r = recover(&sol.du, &Source::Density(f), &bounds(), None).unwrap();
        let err = lp_norm(&r.a.sub(&a).unwrap(), LpNorm::Finite(1.0));
        assert!(err < 1e-3, "{err}");
        assert!((r.c - sol.ca).abs() < 1e-6 * sol.ca.abs());
    }

    #[test]
    fn nearest_fill_prefers_left_on_ties() {
        let raw = [None, Some(1.0), None, Some(3.0), None, None];
        assert_eq!(nearest_fill(&raw), vec![1.0, 1.0, 1.0, 3.0, 3.0, 3.0]);
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), None);
    }

    #[test]
    fn convergence_study_smooth_perturbations() {
        let n = 1024;
        let a = unit(n, |x| 1.0 + 0.3 * x);
        let perts: Vec<_> = (1..=8)
            .map(|k| {
                a.zip_with(
                    &unit(n, |x| (2.0 * std::f64::consts::PI * x).sin()),
                    |av, s| av + s / k as f64 * 0.4,
                )
                .unwrap()
            })
            .collect();
        let rep = convergence_study(
            &a,
            &perts,
            &Source::Density(unit(n, |_| 1.0)),
            LpNorm::Finite(1.0),
        )
        .unwrap();
        assert_eq!(rep.metrics["monotone_trend"], 1.0);
        assert!(rep.metrics["du_diff_last"] < rep.metrics["du_diff_first"]);
        assert!(rep.metrics["a_diff_last"] < rep.metrics["a_diff_first"]);

        let same = vec![a.clone(); 4];
        let rep = convergence_study(
            &a,
            &same,
            &Source::Density(unit(n, |_| 1.0)),
            LpNorm::Finite(1.0),
        )
        .unwrap();
        assert_eq!(rep.metrics["du_diff_last"], 0.0);
        assert_eq!(rep.metrics["a_diff_last"], 0.0);
        assert_eq!(rep.metrics["monotone_trend"], 1.0);
    }
}

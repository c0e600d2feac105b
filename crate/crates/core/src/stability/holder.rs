//! Hölder-type bounds `‖a - b‖_{L_p} <= C ‖u'_a - u'_b‖_{L_2}^γ`.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{solve_with_primitive, ForwardTolerances, Source};
use crate::grid::{lp_norm, CoefficientBounds, GridFunction1D, Interval, LpNorm};
use crate::random::{piecewise_linear_coefficient, rng};
use crate::report::{Curve, ExperimentReport};
use crate::stability::measure::{default_rho_grid, fit_exponents, ExponentFit};

/// Exponent of the stability bound for given `p` and bracket exponents:
/// `max{2β/((2+α)(2+β)), pβ/((p+α)(p+β))}` for `p <= 2`,
/// `4β/((2+α)(2+β)p)` for `p > 2`.
pub fn holder_exponent(p: f64, alpha: f64, beta: f64) -> f64 {
    let two = 2.0 * beta / ((2.0 + alpha) * (2.0 + beta));
    if p <= 2.0 {
        two.max(p * beta / ((p + alpha) * (p + beta)))
    } else {
        2.0 * two / p
    }
}

/// [`holder_exponent`] in exact rational arithmetic.
pub fn holder_exponent_exact(p: Ratio<i64>, alpha: Ratio<i64>, beta: Ratio<i64>) -> Ratio<i64> {
    let two = Ratio::from_integer(2);
    let at_two = two * beta / ((two + alpha) * (two + beta));
    if p <= two {
        let at_p = p * beta / ((p + alpha) * (p + beta));
        at_two.max(at_p)
    } else {
        two * at_two / p
    }
}

/// `lhs / rhs^exponent`, with `0/0 = 0`.
pub fn holder_constant(lhs: f64, rhs: f64, exponent: f64) -> f64 {
    if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs.powf(exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub p: f64,
    /// `‖a - b‖_{L_p}`
    pub lhs: f64,
    /// `‖u'_a - u'_b‖_{L_2}`
    pub rhs_norm: f64,
    pub exponent: f64,
    pub constant_needed: f64,
    /// `|C_a - C_b|`
    pub eta: f64,
    /// `η / ‖u'_a - u'_b‖_{L_p}^{p/(p+α)}`
    pub c0_implied: f64,
}

/// Measures both sides of the stability bound for one pair.
pub fn verify_holder(
    a: &GridFunction1D,
    b: &GridFunction1D,
    source: &Source,
    p: f64,
    fit: &ExponentFit,
    bounds: &CoefficientBounds,
) -> Result<HolderReport> {
    bounds.check(a)?;
    bounds.check(b)?;
    let lp = LpNorm::finite(p)?;
    if !(fit.beta > 0.0) {
        return Err(Error::invalid(format!(
            "stability exponent needs beta > 0, fit gave {}",
            fit.beta
        )));
    }
    let big_f = source.primitive();
    let tol = ForwardTolerances::default();
    let sa = solve_with_primitive(a, &big_f, tol)?;
    let sb = solve_with_primitive(b, &big_f, tol)?;
    let du_diff = sa.du.sub(&sb.du)?;
    let lhs = lp_norm(&a.sub(b)?, lp);
    let rhs_norm = lp_norm(&du_diff, LpNorm::Finite(2.0));
    let du_lp = lp_norm(&du_diff, lp);
    let eta = (sa.ca - sb.ca).abs();
    let exponent = holder_exponent(p, fit.alpha, fit.beta);

    if rhs_norm == 0.0 {
        let scale = 1.0 + lp_norm(a, lp);
        if lhs > 1e-12 * scale {
            return Err(Error::IdentifiabilityViolation { lhs });
        }
    }
    Ok(HolderReport {
        p,
        lhs,
        rhs_norm,
        exponent,
        constant_needed: holder_constant(lhs, rhs_norm, exponent),
        eta,
        c0_implied: holder_constant(eta, du_lp, p / (p + fit.alpha)),
    })
}

/// Random-pair sweep of [`verify_holder`] with piecewise-linear coefficients
/// on the unit interval. The exponent bracket is fitted from `f` itself.
pub fn holder_sweep(
    f: &GridFunction1D,
    p: f64,
    trials: usize,
    seed: u64,
    bounds: &CoefficientBounds,
) -> Result<ExperimentReport> {
    let source = Source::Density(f.clone());
    let big_f = source.primitive();
    let fit = fit_exponents(&big_f, &default_rho_grid(&big_f), 32)?;
    let interval: Interval = f.interval();
    let n = f.n();

    let mut r = rng(seed);
    let pairs: Vec<(GridFunction1D, GridFunction1D)> = (0..trials)
        .map(|_| {
            let a = piecewise_linear_coefficient(&mut r, interval, n, 8, bounds)?;
            let b = piecewise_linear_coefficient(&mut r, interval, n, 8, bounds)?;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;

    let reports: Vec<HolderReport> = pairs
        .par_iter()
        .map(|(a, b)| verify_holder(a, b, &source, p, &fit, bounds))
        .collect::<Result<_>>()?;

    let mut curve = Curve::new(&[
        "trial",
        "lhs",
        "rhs_norm",
        "constant_needed",
        "eta",
        "c0_implied",
    ]);
    for (k, h) in reports.iter().enumerate() {
        curve.push(vec![
            k as f64,
            h.lhs,
            h.rhs_norm,
            h.constant_needed,
            h.eta,
            h.c0_implied,
        ]);
    }
    let max_c = reports
        .iter()
        .map(|h| h.constant_needed)
        .fold(0.0, f64::max);
    let max_c0 = reports.iter().map(|h| h.c0_implied).fold(0.0, f64::max);

    let mut rep = ExperimentReport::new("holder_sweep");
    rep.input("p", p)
        .input("trials", trials)
        .input("seed", seed)
        .input("n", n)
        .input("bounds", bounds)
        .metric("alpha", fit.alpha)
        .metric("beta", fit.beta)
        .metric("exponent", holder_exponent(p, fit.alpha, fit.beta))
        .metric("max_constant_needed", max_c)
        .metric("max_c0_implied", max_c0)
        .check("constant_finite", max_c.is_finite())
        .curve("pairs", curve);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Interval;

    #[test]
    fn exponent_examples() {
        assert!((holder_exponent(2.0, 1.0, 1.0) - 2.0 / 9.0).abs() < 1e-15);
        assert!((holder_exponent(1.0, 1.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((holder_exponent(4.0, 1.0, 1.0) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn exact_exponents() {
        let r = |n: i64, d: i64| Ratio::new(n, d);
        assert_eq!(holder_exponent_exact(r(2, 1), r(1, 1), r(1, 1)), r(2, 9));
        assert_eq!(holder_exponent_exact(r(1, 1), r(1, 1), r(1, 1)), r(1, 4));
        assert_eq!(holder_exponent_exact(r(4, 1), r(1, 1), r(1, 1)), r(1, 9));
    }

    #[test]
    fn identical_pair_is_trivially_consistent() {
        let iv = Interval::unit();
        let a = GridFunction1D::from_fn(iv, 256, |x| 1.0 + 0.2 * x).unwrap();
        let f = GridFunction1D::constant(iv, 256, 1.0).unwrap();
        let big_f = crate::forward::primitive(&f);
        let fit = fit_exponents(&big_f, &default_rho_grid(&big_f), 16).unwrap();
        let b = CoefficientBounds::new(0.5, 2.0).unwrap();
        let rep = verify_holder(&a, &a, &Source::Density(f), 2.0, &fit, &b).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.rhs_norm, 0.0);
        assert_eq!(rep.constant_needed, 0.0);
    }

    #[test]
    fn constant_pair() {
        let iv = Interval::unit();
        let n = 512;
        let f = GridFunction1D::constant(iv, n, 1.0).unwrap();
        let big_f = crate::forward::primitive(&f);
        let fit = fit_exponents(&big_f, &default_rho_grid(&big_f), 16).unwrap();
        let b = CoefficientBounds::new(0.5, 2.0).unwrap();
        let rep = verify_holder(
            &GridFunction1D::constant(iv, n, 1.0).unwrap(),
            &GridFunction1D::constant(iv, n, 1.5).unwrap(),
            &Source::Density(f),
            2.0,
            &fit,
            &b,
        )
        .unwrap();
        assert!((rep.lhs - 0.5).abs() < 1e-12);
        assert!(rep.constant_needed.is_finite() && rep.constant_needed > 0.0);
        assert!(rep.eta < 1e-12);
    }

    #[test]
    fn sweep_is_deterministic() {
        let f = GridFunction1D::constant(Interval::unit(), 256, 1.0).unwrap();
        let b = CoefficientBounds::new(0.5, 2.0).unwrap();
        let r1 = holder_sweep(&f, 2.0, 10, 7, &b).unwrap();
        let r2 = holder_sweep(&f, 2.0, 10, 7, &b).unwrap();
        assert_eq!(r1.to_json(), r2.to_json());
        assert!(r1.passed);
    }
}

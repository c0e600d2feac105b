//! Grid functions on an interval and the numeric primitives built on them.
//!
//! Every 1D quantity in the crate (coefficients, sources, primitives,
//! solutions and their derivatives) is a [`GridFunction1D`]: nodal values on
//! a uniform partition of an [`Interval`]. Integrals use the composite
//! trapezoid rule, which is exact for the piecewise-linear interpolant of the
//! nodal values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    /// The unit interval (0, 1).
    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    /// The symmetric interval (-1, 1).
    pub fn symmetric() -> Self {
        Self { lo: -1.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Nodal values `values[i] = g(lo + i h)`, `h = (hi - lo) / n`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridFunction1D {
    interval: Interval,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    interval: Interval,
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<GridRepr> for GridFunction1D {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        if r.values.len() != r.n + 1 {
            return Err(Error::InvalidGrid(format!(
                "n = {} but {} values",
                r.n,
                r.values.len()
            )));
        }
        GridFunction1D::new(r.interval, r.values)
    }
}

impl From<GridFunction1D> for GridRepr {
    fn from(g: GridFunction1D) -> Self {
        GridRepr {
            interval: g.interval,
            n: g.n(),
            values: g.values,
        }
    }
}

impl GridFunction1D {
    pub fn new(interval: Interval, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidGrid(format!("{} values", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite value {} at node {i}",
                values[i]
            )));
        }
        Ok(Self { interval, values })
    }

    /// Samples `f` at the `n + 1` nodes of the uniform partition.
    pub fn from_fn(interval: Interval, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("n = 0".into()));
        }
        let values = (0..=n).map(|i| f(node(interval, n, i))).collect();
        Self::new(interval, values)
    }

    pub fn constant(interval: Interval, n: usize, c: f64) -> Result<Self> {
        Self::from_fn(interval, n, |_| c)
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// Number of cells.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn h(&self) -> f64 {
        self.interval.length() / self.n() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        node(self.interval, self.n(), i)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n()).map(move |i| self.x(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.n()]
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Same grid, new values. Panics if `values` has the wrong length.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            self.values.len(),
            "value count must match the grid"
        );
        Self {
            interval: self.interval,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Nodewise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.interval == other.interval && self.values.len() == other.values.len()
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}] with n = {} vs [{}, {}] with n = {}",
                self.interval.lo,
                self.interval.hi,
                self.n(),
                other.interval.lo,
                other.interval.hi,
                other.n()
            )))
        }
    }

    /// Value of the piecewise-linear interpolant at `x` (clamped to the interval).
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.n();
        let s = ((x - self.interval.lo) / self.h()).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let t = s - i as f64;
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// Cumulative trapezoid integral starting from zero at `lo`.
    pub fn cumulative_integral(&self) -> Self {
        let h = self.h();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        self.with_values(out)
    }

    pub fn quadrature(&self) -> f64 {
        quadrature(self)
    }
}

fn node(interval: Interval, n: usize, i: usize) -> f64 {
    if i == n {
        interval.hi
    } else {
        interval.lo + i as f64 * (interval.length() / n as f64)
    }
}

/// The admissibility box `0 < lambda <= a <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds {
    lambda: f64,
    #[serde(rename = "Lambda")]
    upper: f64,
}

impl CoefficientBounds {
    pub fn new(lambda: f64, upper: f64) -> Result<Self> {
        if lambda > 0.0 && upper > lambda && upper.is_finite() {
            Ok(Self { lambda, upper })
        } else {
            Err(Error::InvalidBounds { lambda, upper })
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The upper bound Λ.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lambda && v <= self.upper
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lambda, self.upper)
    }

    /// Errors with the first node outside the box.
    pub fn check(&self, a: &GridFunction1D) -> Result<()> {
        match a.values().iter().position(|&v| !self.contains(v)) {
            None => Ok(()),
            Some(i) => Err(Error::NotAdmissible {
                x: a.x(i),
                value: a.values()[i],
                lambda: self.lambda,
                upper: self.upper,
            }),
        }
    }
}

/// Exponent of an `L_p` norm; `Infinity` is the sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpNorm {
    Finite(f64),
    Infinity,
}

impl LpNorm {
    pub fn finite(p: f64) -> Result<Self> {
        if p >= 1.0 && p.is_finite() {
            Ok(LpNorm::Finite(p))
        } else if p == f64::INFINITY {
            Ok(LpNorm::Infinity)
        } else {
            Err(Error::invalid(format!(
                "L_p exponent must be >= 1, got {p}"
            )))
        }
    }

    pub fn exponent(&self) -> f64 {
        match self {
            LpNorm::Finite(p) => *p,
            LpNorm::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for LpNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpNorm::Finite(p) => write!(f, "{p}"),
            LpNorm::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for LpNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "Inf" | "infinity" | "∞" => Ok(LpNorm::Infinity),
            t => {
                let p: f64 = t
                    .parse()
                    .map_err(|_| Error::invalid(format!("cannot parse L_p exponent {t:?}")))?;
                LpNorm::finite(p)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
    /// Composite Simpson; odd cell counts finish with a 3/8 panel.
    Simpson,
}

/// Composite trapezoid integral of the nodal values.
pub fn quadrature(g: &GridFunction1D) -> f64 {
    quadrature_with(g, QuadratureRule::Trapezoid)
}

pub fn quadrature_with(g: &GridFunction1D, rule: QuadratureRule) -> f64 {
    let v = g.values();
    let n = g.n();
    let h = g.h();
    match rule {
        QuadratureRule::Simpson if n >= 2 => {
            let (even_part, tail) = if n.is_multiple_of(2) {
                (n, 0)
            } else {
                (n - 3, 3)
            };
            let mut s = 0.0;
            for k in (0..even_part).step_by(2) {
                s += v[k] + 4.0 * v[k + 1] + v[k + 2];
            }
            s *= h / 3.0;
            if tail == 3 {
                let k = even_part;
                s += 3.0 * h / 8.0 * (v[k] + 3.0 * v[k + 1] + 3.0 * v[k + 2] + v[k + 3]);
            }
            s
        }
        _ => {
            let inner: f64 = v[1..n].iter().sum();
            h * (inner + 0.5 * (v[0] + v[n]))
        }
    }
}

/// `(∫|g|^p)^(1/p)` by trapezoid quadrature of `|g|^p`; `max |g|` for `p = ∞`.
pub fn lp_norm(g: &GridFunction1D, p: LpNorm) -> f64 {
    match p {
        LpNorm::Infinity => g.max_abs(),
        LpNorm::Finite(1.0) => quadrature(&g.map(f64::abs)),
        LpNorm::Finite(2.0) => quadrature(&g.map(|v| v * v)).sqrt(),
        LpNorm::Finite(p) => quadrature(&g.map(|v| v.abs().powf(p))).powf(1.0 / p),
    }
}

/// Second-order finite-difference derivative: central differences inside,
/// one-sided three-point stencils at the endpoints.
pub fn derivative(g: &GridFunction1D) -> Result<GridFunction1D> {
    let n = g.n();
    if n < 2 {
        return Err(Error::GridTooCoarse { n, required: 2 });
    }
    let v = g.values();
    let inv2h = 0.5 / g.h();
    let mut d = vec![0.0; n + 1];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv2h;
    d[n] = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) * inv2h;
    for i in 1..n {
        d[i] = (v[i + 1] - v[i - 1]) * inv2h;
    }
    Ok(g.with_values(d))
}

/// Whether every nodal value lies in `[lambda, Lambda]`.
pub fn admissible(a: &GridFunction1D, bounds: &CoefficientBounds) -> bool {
    a.values().iter().all(|&v| bounds.contains(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, f: impl Fn(f64) -> f64) -> GridFunction1D {
        GridFunction1D::from_fn(Interval::unit(), n, f).unwrap()
    }

    #[test]
    fn quadrature_examples() {
        assert_eq!(quadrature(&unit(10, |_| 1.0)), 1.0);
        for n in [1, 3, 10, 77] {
            assert!((quadrature(&unit(n, |x| x)) - 0.5).abs() < 1e-15);
        }
        let sq = quadrature(&unit(1000, |x| x * x));
        assert!((sq - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        for n in [2, 3, 8, 9] {
            let g = unit(n, |x| x * x * x - x);
            let s = quadrature_with(&g, QuadratureRule::Simpson);
            assert!((s - (0.25 - 0.5)).abs() < 1e-14, "n = {n}: {s}");
        }
    }

    #[test]
    fn lp_norm_examples() {
        assert_eq!(lp_norm(&unit(10, |_| 2.0), LpNorm::Finite(1.0)), 2.0);
        assert_eq!(lp_norm(&unit(10, |x| x), LpNorm::Infinity), 1.0);
        let g = unit(1000, |x| 0.5 - x);
        assert!((lp_norm(&g, LpNorm::Finite(2.0)) - (1.0f64 / 12.0).sqrt()).abs() < 1e-6);
        let g3 = unit(1000, |x| x);
        assert!((lp_norm(&g3, LpNorm::Finite(3.0)) - 0.25f64.powf(1.0 / 3.0)).abs() < 1e-5);
    }

    #[test]
    fn derivative_examples() {
        let d = derivative(&unit(17, |x| x)).unwrap();
        assert!(d.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let d = derivative(&unit(17, |_| 3.5)).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
        let g = unit(100, |x| x * x);
        let d = derivative(&g).unwrap();
        for (x, v) in g.nodes().zip(d.values()) {
            assert!((v - 2.0 * x).abs() < 1e-3);
        }
    }

    #[test]
    fn derivative_needs_two_cells() {
        let g = unit(1, |x| x);
        assert!(matches!(
            derivative(&g),
            Err(Error::GridTooCoarse { n: 1, required: 2 })
        ));
    }

    #[test]
    fn admissibility() {
        let b = CoefficientBounds::new(0.5, 2.0).unwrap();
        assert!(admissible(&unit(8, |_| 1.0), &b));
        assert!(!admissible(&unit(8, |_| 3.0), &b));
        let b12 = CoefficientBounds::new(1.0, 2.0).unwrap();
        assert!(admissible(&unit(8, |x| 1.0 + x), &b12));
        assert!(CoefficientBounds::new(0.0, 1.0).is_err());
        assert!(CoefficientBounds::new(2.0, 1.0).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::NAN).is_err());
        assert!(GridFunction1D::new(Interval::unit(), vec![1.0]).is_err());
        assert!(GridFunction1D::new(Interval::unit(), vec![1.0, f64::INFINITY]).is_err());
        assert!("0.5".parse::<LpNorm>().is_err());
        assert_eq!("inf".parse::<LpNorm>().unwrap(), LpNorm::Infinity);
    }

    #[test]
    fn last_node_is_exactly_hi() {
        let g = GridFunction1D::from_fn(Interval::new(0.1, 0.7).unwrap(), 3, |x| x).unwrap();
        assert_eq!(g.x(3), 0.7);
        assert_eq!(g.last(), 0.7);
    }

    #[test]
    fn interpolation_hits_nodes() {
        let g = unit(4, |x| x * x);
        assert_eq!(g.interpolate(0.5), 0.25);
        assert!((g.interpolate(0.375) - 0.5 * (0.0625 + 0.25)).abs() < 1e-15);
        assert_eq!(g.interpolate(2.0), 1.0);
    }
}

//! Inline function literals for 1D inputs.
//!
//! `const:c` is the constant `c`, `linear:a,b` is `a + b x`, and `csv:<path>`
//! (or a bare path) reads an `x,value` table. Formula literals are sampled on
//! the grid of the first CSV input, or on `n` uniform cells of `[0, 1]`.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use coeffid_core::io::read_grid_csv_file;
use coeffid_core::{GridFunction1D, Interval};

pub const DEFAULT_N: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Const(f64),
    Linear(f64, f64),
    Csv(PathBuf),
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("not a number: {s:?}"))?;
    if !v.is_finite() {
        return Err(format!("not finite: {s:?}"));
    }
    Ok(v)
}

impl FromStr for Literal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(c) = s.strip_prefix("const:") {
            return Ok(Literal::Const(number(c)?));
        }
        if let Some(ab) = s.strip_prefix("linear:") {
            let (a, b) = ab
                .split_once(',')
                .ok_or_else(|| format!("expected linear:a,b, got {s:?}"))?;
            return Ok(Literal::Linear(number(a)?, number(b)?));
        }
        let path = s.strip_prefix("csv:").unwrap_or(s);
        if path.is_empty() {
            return Err("empty input literal".into());
        }
        Ok(Literal::Csv(PathBuf::from(path)))
    }
}

impl Literal {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            Literal::Const(c) => c,
            Literal::Linear(a, b) => a + b * x,
            Literal::Csv(_) => unreachable!("csv inputs are read, not evaluated"),
        }
    }
}

/// Turns literals into grid functions on one common grid.
///
/// Every CSV path read is appended to `read` so it can be checksummed.
pub fn materialize(
    lits: &[&Literal],
    n: Option<usize>,
    read: &mut Vec<PathBuf>,
) -> Result<Vec<GridFunction1D>> {
    let mut loaded: Vec<Option<GridFunction1D>> = Vec::with_capacity(lits.len());
    let mut reference: Option<(Interval, usize)> = None;
    for lit in lits {
        if let Literal::Csv(path) = lit {
            let g =
                read_grid_csv_file(path).with_context(|| format!("reading {}", path.display()))?;
            read.push(path.clone());
            match reference {
                None => reference = Some((g.interval(), g.n())),
                Some((iv, m)) if iv != g.interval() || m != g.n() => {
                    bail!(
                        "{} is not on the grid of the other CSV inputs",
                        path.display()
                    )
                }
                Some(_) => {}
            }
            loaded.push(Some(g));
        } else {
            loaded.push(None);
        }
    }
    let (interval, n) = match (reference, n) {
        (Some((_, m)), Some(n)) if m != n => bail!("--n {n} conflicts with CSV input of {m} cells"),
        (Some(r), _) => r,
        (None, n) => (Interval::unit(), n.unwrap_or(DEFAULT_N)),
    };
    lits.iter()
        .zip(loaded)
        .map(|(lit, g)| match g {
            Some(g) => Ok(g),
            None => Ok(GridFunction1D::from_fn(interval, n, |x| lit.eval(x))?),
        })
        .collect()
}

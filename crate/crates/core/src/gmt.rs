//! Total variation, level-set perimeters and the coarea identity
//! `TV(h) = ∫ P({h > t}) dt` for piecewise-linear grid functions on an open
//! interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction1D;
use crate::report::{Curve, ExperimentReport};

/// Lowest level scanned by [`good_levels`].
pub const LEVEL_FLOOR: f64 = 1e-9;
/// Levels per octave in the [`good_levels`] scan.
pub const LEVELS_PER_OCTAVE: u32 = 8;
pub const COAREA_TOLERANCE: f64 = 1e-12;

/// Exact total variation of the piecewise-linear interpolant.
pub fn total_variation(h: &GridFunction1D) -> f64 {
    h.values().windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Perimeter of `{h > t}` inside the open interval: the number of sign
/// changes of `h - t` along the nodes, skipping nodes where `h = t` exactly.
pub fn level_perimeter(h: &GridFunction1D, t: f64) -> f64 {
    let mut prev = 0i8;
    let mut count = 0usize;
    for &v in h.values() {
        let s = if v > t {
            1
        } else if v < t {
            -1
        } else {
            0
        };
        if s != 0 {
            if prev != 0 && s != prev {
                count += 1;
            }
            prev = s;
        }
    }
    count as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetProfile {
    levels: Vec<f64>,
    perimeters: Vec<f64>,
}

impl LevelSetProfile {
    pub fn new(levels: Vec<f64>, perimeters: Vec<f64>) -> Result<Self> {
        if levels.len() != perimeters.len() {
            return Err(Error::invalid("levels and perimeters differ in length"));
        }
        if levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("levels must be strictly increasing"));
        }
        if perimeters.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("perimeters must be nonnegative"));
        }
        Ok(Self { levels, perimeters })
    }

    /// `nlevels` uniformly spaced levels strictly inside the range of `h`.
    pub fn sample(h: &GridFunction1D, nlevels: usize) -> Result<Self> {
        let (lo, hi) = (h.min(), h.max());
        if hi <= lo {
            return Self::new(vec![lo], vec![level_perimeter(h, lo)]);
        }
        let levels: Vec<f64> = (0..nlevels)
            .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / nlevels as f64)
            .collect();
        let perimeters = levels.iter().map(|&t| level_perimeter(h, t)).collect();
        Self::new(levels, perimeters)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn perimeters(&self) -> &[f64] {
        &self.perimeters
    }
}

/// `∫ P({h > t}) dt`, integrated exactly. Between consecutive distinct nodal
/// values the perimeter is constant and equals the number of cells whose
/// value range covers that gap, accumulated with a difference array.
pub fn coarea_integral(h: &GridFunction1D) -> f64 {
    let v = h.values();
    let mut levels = v.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < 2 {
        return 0.0;
    }
    let idx = |x: f64| levels.partition_point(|&l| l < x);
    let mut diff = vec![0i64; levels.len()];
    for w in v.windows(2) {
        let (i, j) = (idx(w[0]), idx(w[1]));
        let (i, j) = (i.min(j), i.max(j));
        if i < j {
            diff[i] += 1;
            diff[j] -= 1;
        }
    }
    let mut count = 0i64;
    let mut total = 0.0;
    for k in 0..levels.len() - 1 {
        count += diff[k];
        total += count as f64 * (levels[k + 1] - levels[k]);
    }
    total
}

/// Compares [`total_variation`] with [`coarea_integral`] and samples the
/// perimeter profile at `nlevels` levels.
pub fn coarea_check(h: &GridFunction1D, nlevels: usize) -> Result<ExperimentReport> {
    if nlevels < 16 {
        return Err(Error::invalid(format!(
            "need at least 16 levels, got {nlevels}"
        )));
    }
    let tv = total_variation(h);
    let integral = coarea_integral(h);
    let rel = if tv == 0.0 && integral == 0.0 {
        0.0
    } else {
        (tv - integral).abs() / tv.abs().max(integral.abs())
    };
    let profile = LevelSetProfile::sample(h, nlevels)?;
    let mut curve = Curve::new(&["t", "perimeter"]);
    for (t, p) in profile.levels().iter().zip(profile.perimeters()) {
        curve.push(vec![*t, *p]);
    }
    let mut rep = ExperimentReport::new("coarea");
    rep.input("n", h.n())
        .input("nlevels", nlevels)
        .metric("total_variation", tv)
        .metric("coarea_integral", integral)
        .metric("relative_error", rel)
        .check("coarea_identity", rel < COAREA_TOLERANCE)
        .curve("profile", curve);
    Ok(rep)
}

/// The admissibility threshold `1 / (t |ln t|)` for a good level.
pub fn level_budget(t: f64) -> f64 {
    1.0 / (t * t.ln().abs())
}

/// Scans `t_start · 2^{-k/8}` down to [`LEVEL_FLOOR`] and keeps every level
/// with `P({h > t}) <= 1/(t |ln t|)`. The result is strictly decreasing.
pub fn good_levels(h: &GridFunction1D, t_start: f64) -> Result<Vec<f64>> {
    if !(t_start > 0.0 && t_start < 1.0) {
        return Err(Error::invalid(format!(
            "t_start must lie in (0, 1), got {t_start}"
        )));
    }
    if !(h.max() >= 0.0) {
        return Err(Error::invalid("h must be nonnegative somewhere"));
    }
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let t = t_start * 2f64.powf(-(k as f64) / LEVELS_PER_OCTAVE as f64);
        if t < LEVEL_FLOOR {
            break;
        }
        if level_perimeter(h, t) <= level_budget(t) {
            out.push(t);
        }
        k += 1;
    }
    if out.is_empty() {
        return Err(Error::TvBudgetViolated {
            t_start,
            floor: LEVEL_FLOOR,
        });
    }
    Ok(out)
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CoefficientBounds;

/// Largest supported mesh resolution.
pub const MAX_RESOLUTION: usize = 512;

/// Tiling of the unit square into `nx × ny` equal axis-aligned blocks,
/// numbered row-major (`index = iy * nx + ix`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition2D {
    nx: usize,
    ny: usize,
}

/// One block `[x0, x1] × [y0, y1]` of a [`Partition2D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub ix: usize,
    pub iy: usize,
    pub nx: usize,
    pub ny: usize,
}

impl Block {
    pub fn index(&self) -> usize {
        self.iy * self.nx + self.ix
    }

    /// The whole unit square as a single block.
    pub fn unit_square() -> Self {
        Self {
            ix: 0,
            iy: 0,
            nx: 1,
            ny: 1,
        }
    }

    /// Cell range `[c0, c1) × [r0, r1)` on an `m × m` mesh.
    pub fn cells(&self, m: usize) -> (usize, usize, usize, usize) {
        let (sx, sy) = (m / self.nx, m / self.ny);
        (
            self.ix * sx,
            (self.ix + 1) * sx,
            self.iy * sy,
            (self.iy + 1) * sy,
        )
    }

    pub fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let (nx, ny) = (self.nx as f64, self.ny as f64);
        (
            (self.ix as f64 / nx, (self.ix + 1) as f64 / nx),
            (self.iy as f64 / ny, (self.iy + 1) as f64 / ny),
        )
    }
}

impl Partition2D {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid(format!(
                "partition needs nx, ny >= 1, got {nx} x {ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn block(&self, index: usize) -> Block {
        Block {
            ix: index % self.nx,
            iy: index / self.nx,
            nx: self.nx,
            ny: self.ny,
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = Block> + '_ {
        (0..self.len()).map(|k| self.block(k))
    }

    /// Block index of mesh cell `(ci, cj)` on an aligned `m × m` mesh.
    pub fn block_of_cell(&self, m: usize, ci: usize, cj: usize) -> usize {
        (cj * self.ny / m) * self.nx + ci * self.nx / m
    }

    /// `m` must be a multiple of both `nx` and `ny`, and at most
    /// [`MAX_RESOLUTION`].
    pub fn check_mesh(&self, m: usize) -> Result<()> {
        if m == 0 || !m.is_multiple_of(self.nx) || !m.is_multiple_of(self.ny) {
            return Err(Error::MeshNotAligned {
                m,
                nx: self.nx,
                ny: self.ny,
            });
        }
        if m > MAX_RESOLUTION {
            return Err(Error::invalid(format!(
                "mesh resolution {m} exceeds {MAX_RESOLUTION}"
            )));
        }
        Ok(())
    }
}

/// `Σ_j a_j χ_{D_j}` on a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwConstCoefficient {
    partition: Partition2D,
    coeffs: Vec<f64>,
    bounds: CoefficientBounds,
}

impl PwConstCoefficient {
    pub fn new(
        partition: Partition2D,
        coeffs: Vec<f64>,
        bounds: CoefficientBounds,
    ) -> Result<Self> {
        if coeffs.len() != partition.len() {
            return Err(Error::invalid(format!(
                "{} coefficients for {} blocks",
                coeffs.len(),
                partition.len()
            )));
        }
        for (k, &c) in coeffs.iter().enumerate() {
            if !bounds.contains(c) {
                return Err(Error::NotAdmissible {
                    x: k as f64,
                    value: c,
                    lambda: bounds.lambda(),
                    upper: bounds.upper(),
                });
            }
        }
        Ok(Self {
            partition,
            coeffs,
            bounds,
        })
    }

    pub fn constant(partition: Partition2D, value: f64, bounds: CoefficientBounds) -> Result<Self> {
        Self::new(partition, vec![value; partition.len()], bounds)
    }

    pub fn partition(&self) -> Partition2D {
        self.partition
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn bounds(&self) -> CoefficientBounds {
        self.bounds
    }

    pub fn with_coeff(&self, block: usize, value: f64) -> Result<Self> {
        let mut c = self.coeffs.clone();
        c[block] = value;
        Self::new(self.partition, c, self.bounds)
    }

    /// Coefficient on every cell of an aligned `m × m` mesh, row-major.
    pub fn cell_values(&self, m: usize) -> Result<Vec<f64>> {
        self.partition.check_mesh(m)?;
        Ok((0..m * m)
            .map(|k| self.coeffs[self.partition.block_of_cell(m, k % m, k / m)])
            .collect())
    }
}

/// Nodal values on the `(m+1) × (m+1)` grid of the unit square, row-major in
/// `y` (node `(i, j)` at `(i/m, j/m)` is entry `j (m+1) + i`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalField {
    m: usize,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("mesh resolution must be positive"));
        }
        if values.len() != (m + 1) * (m + 1) {
            return Err(Error::GridMismatch(format!(
                "{} values for an m = {m} mesh (need {})",
                values.len(),
                (m + 1) * (m + 1)
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("nodal values must be finite"));
        }
        Ok(Self { m, values })
    }

    pub fn from_fn(m: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = 1.0 / m.max(1) as f64;
        let values = (0..(m + 1) * (m + 1))
            .map(|k| f((k % (m + 1)) as f64 * h, (k / (m + 1)) as f64 * h))
            .collect();
        Self::new(m, values)
    }

    pub fn constant(m: usize, c: f64) -> Result<Self> {
        Self::new(m, vec![c; (m + 1) * (m + 1)])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.m + 1) + i]
    }

    pub fn check_resolution(&self, m: usize) -> Result<()> {
        if self.m != m {
            return Err(Error::GridMismatch(format!(
                "field has resolution {}, expected {m}",
                self.m
            )));
        }
        Ok(())
    }

    pub fn sub(&self, other: &NodalField) -> Result<NodalField> {
        other.check_resolution(self.m)?;
        Ok(NodalField {
            m: self.m,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, s: f64) -> NodalField {
        NodalField {
            m: self.m,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

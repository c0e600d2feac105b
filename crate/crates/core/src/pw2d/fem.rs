//! P1 finite elements on the uniform `m × m` mesh of the unit square, each
//! cell split along its lower-left/upper-right diagonal.

use crate::error::{Error, Result};
use crate::pw2d::mesh::{Block, NodalField, Partition2D, PwConstCoefficient};
use crate::pw2d::sparse::{pcg, CsrMatrix};

/// Relative residual target for the linear solves.
pub const CG_TOLERANCE: f64 = 1e-10;

/// Scaled vertex gradients `h ∇φ` of the two triangles of a cell. Vertex
/// order: `00, 10, 11` for the lower triangle and `00, 11, 01` for the upper.
const GRAD_LOWER: [(f64, f64); 3] = [(-1.0, 0.0), (1.0, -1.0), (0.0, 1.0)];
const GRAD_UPPER: [(f64, f64); 3] = [(0.0, -1.0), (1.0, 0.0), (-1.0, 1.0)];

fn cell_triangles(m: usize, ci: usize, cj: usize) -> [[usize; 3]; 2] {
    let n00 = cj * (m + 1) + ci;
    let (n10, n01, n11) = (n00 + 1, n00 + m + 1, n00 + m + 2);
    [[n00, n10, n11], [n00, n11, n01]]
}

/// Stiffness matrix, load vector and the free (unconstrained) nodes for one
/// rectangular region of cells; every node on the region boundary carries a
/// homogeneous Dirichlet condition.
#[derive(Debug, Clone)]
pub struct FemSystem {
    m: usize,
    free: Vec<usize>,
    matrix: CsrMatrix,
    load: Vec<f64>,
}

impl FemSystem {
    /// `cell_coeff` is row-major over all `m²` cells; only cells inside
    /// `region` are used.
    pub fn assemble(m: usize, cell_coeff: &[f64], f: &NodalField, region: Block) -> Result<Self> {
        f.check_resolution(m)?;
        let (c0, c1, r0, r1) = region.cells(m);
        let mut slot = vec![usize::MAX; (m + 1) * (m + 1)];
        let mut free = Vec::new();
        for j in r0 + 1..r1 {
            for i in c0 + 1..c1 {
                let node = j * (m + 1) + i;
                slot[node] = free.len();
                free.push(node);
            }
        }
        let area = 0.5 / (m * m) as f64;
        let fv = f.values();
        let mut triplets = Vec::with_capacity(free.len() * 7);
        let mut load = vec![0.0; free.len()];
        for cj in r0..r1 {
            for ci in c0..c1 {
                let a = cell_coeff[cj * m + ci];
                for (tri, grads) in cell_triangles(m, ci, cj)
                    .iter()
                    .zip([GRAD_LOWER, GRAD_UPPER])
                {
                    let fsum: f64 = tri.iter().map(|&v| fv[v]).sum();
                    for (p, &vp) in tri.iter().enumerate() {
                        let rp = slot[vp];
                        if rp == usize::MAX {
                            continue;
                        }
                        load[rp] += area / 12.0 * (fv[vp] + fsum);
                        for (q, &vq) in tri.iter().enumerate() {
                            let rq = slot[vq];
                            if rq == usize::MAX {
                                continue;
                            }
                            let k = 0.5 * a * (grads[p].0 * grads[q].0 + grads[p].1 * grads[q].1);
                            triplets.push((rp, rq, k));
                        }
                    }
                }
            }
        }
        Ok(Self {
            m,
            free,
            matrix: CsrMatrix::from_triplets(load.len(), triplets),
            load,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    /// CG solve, optionally warm-started from a previous nodal field.
    pub fn solve(&self, warm: Option<&NodalField>) -> Result<NodalField> {
        let x0: Option<Vec<f64>> = warm.map(|w| self.free.iter().map(|&k| w.values()[k]).collect());
        let out = pcg(
            &self.matrix,
            &self.load,
            x0.as_deref(),
            CG_TOLERANCE,
            20 * self.free.len().max(10),
        )?;
        self.scatter(&out.x)
    }

    fn scatter(&self, x: &[f64]) -> Result<NodalField> {
        let mut values = vec![0.0; (self.m + 1) * (self.m + 1)];
        for (&node, &v) in self.free.iter().zip(x) {
            values[node] = v;
        }
        NodalField::new(self.m, values)
    }

    /// `max_i |b_i - (A u)_i|` over the free nodes.
    pub fn galerkin_residual(&self, u: &NodalField) -> f64 {
        let x: Vec<f64> = self.free.iter().map(|&k| u.values()[k]).collect();
        let mut ax = vec![0.0; x.len()];
        self.matrix.matvec(&x, &mut ax);
        ax.iter()
            .zip(&self.load)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }
}

/// Whole-square system for a fixed partition and source, with the stiffness
/// matrix kept as one value array per block: `A(a) = Σ_i a_i A_i`. Repeated
/// solves for different block values then skip assembly.
#[derive(Debug, Clone)]
pub struct PwOperator {
    partition: Partition2D,
    base: FemSystem,
    block_values: Vec<Vec<f64>>,
}

impl PwOperator {
    pub fn new(partition: Partition2D, f: &NodalField, m: usize) -> Result<Self> {
        partition.check_mesh(m)?;
        let mut base = None;
        let mut block_values = Vec::with_capacity(partition.len());
        for i in 0..partition.len() {
            let cells: Vec<f64> = (0..m * m)
                .map(|k| f64::from(u8::from(partition.block_of_cell(m, k % m, k / m) == i)))
                .collect();
            let sys = FemSystem::assemble(m, &cells, f, Block::unit_square())?;
            block_values.push(sys.matrix.values().to_vec());
            base.get_or_insert(sys);
        }
        Ok(Self {
            partition,
            base: base.expect("partition has at least one block"),
            block_values,
        })
    }

    pub fn system(&self, a: &PwConstCoefficient) -> Result<FemSystem> {
        if a.partition() != self.partition {
            return Err(Error::invalid(
                "coefficient partition differs from the operator's",
            ));
        }
        let mut vals = vec![0.0; self.base.matrix.nnz()];
        for (c, bv) in a.coeffs().iter().zip(&self.block_values) {
            for (v, b) in vals.iter_mut().zip(bv) {
                *v += c * b;
            }
        }
        Ok(FemSystem {
            m: self.base.m,
            free: self.base.free.clone(),
            matrix: self.base.matrix.with_values(vals),
            load: self.base.load.clone(),
        })
    }

    pub fn solve(&self, a: &PwConstCoefficient, warm: Option<&NodalField>) -> Result<NodalField> {
        self.system(a)?.solve(warm)
    }
}

/// P1 Galerkin solution of `-div(a ∇u) = f` with `u = 0` on the boundary.
pub fn fem_solve(a: &PwConstCoefficient, f: &NodalField, m: usize) -> Result<NodalField> {
    fem_solve_warm(a, f, m, None)
}

pub fn fem_solve_warm(
    a: &PwConstCoefficient,
    f: &NodalField,
    m: usize,
    warm: Option<&NodalField>,
) -> Result<NodalField> {
    let cells = a.cell_values(m)?;
    FemSystem::assemble(m, &cells, f, Block::unit_square())?.solve(warm)
}

/// Gradient of a P1 field on both triangles of cell `(ci, cj)`.
fn cell_gradients(v: &NodalField, ci: usize, cj: usize) -> [(f64, f64); 2] {
    let m = v.m();
    let h = 1.0 / m as f64;
    let (v00, v10, v01, v11) = (
        v.at(ci, cj),
        v.at(ci + 1, cj),
        v.at(ci, cj + 1),
        v.at(ci + 1, cj + 1),
    );
    [
        ((v10 - v00) / h, (v11 - v10) / h),
        ((v11 - v01) / h, (v01 - v00) / h),
    ]
}

/// `‖∇v‖_{L2}` over the cells of one block.
pub fn block_gradient_norm(v: &NodalField, block: Block) -> f64 {
    let m = v.m();
    let area = 0.5 / (m * m) as f64;
    let (c0, c1, r0, r1) = block.cells(m);
    let mut s = 0.0;
    for cj in r0..r1 {
        for ci in c0..c1 {
            for (gx, gy) in cell_gradients(v, ci, cj) {
                s += area * (gx * gx + gy * gy);
            }
        }
    }
    s.sqrt()
}

/// [`block_gradient_norm`] for every block of a partition.
pub fn block_gradient_norms(v: &NodalField, partition: Partition2D) -> Result<Vec<f64>> {
    partition.check_mesh(v.m())?;
    Ok(partition
        .blocks()
        .map(|b| block_gradient_norm(v, b))
        .collect())
}

/// `‖f‖_{H^{-1}(block)}` through its Riesz representative: solves `-Δw = f`
/// on the block with `w = 0` on its boundary and returns `‖∇w‖_{L2}`.
pub fn hminus1_norm(f: &NodalField, block: Block, m: usize) -> Result<f64> {
    Partition2D::new(block.nx, block.ny)?.check_mesh(m)?;
    let ones = vec![1.0; m * m];
    let w = FemSystem::assemble(m, &ones, f, block)?.solve(None)?;
    Ok(block_gradient_norm(&w, block))
}

/// Discrete `‖v‖_{L2}` of a nodal field (lumped quadrature).
pub fn nodal_l2(v: &NodalField) -> f64 {
    let m = v.m();
    let h = 1.0 / m as f64;
    let mut s = 0.0;
    for j in 0..=m {
        for i in 0..=m {
            let w =
                if i == 0 || i == m { 0.5 } else { 1.0 } * if j == 0 || j == m { 0.5 } else { 1.0 };
            s += w * v.at(i, j).powi(2);
        }
    }
    (s * h * h).sqrt()
}

/// `∫ v` of the P1 interpolant (exact: one third of the vertex sum per
/// triangle).
pub fn integral(v: &NodalField) -> f64 {
    let m = v.m();
    let area = 0.5 / (m * m) as f64;
    let mut s = 0.0;
    for cj in 0..m {
        for ci in 0..m {
            for tri in cell_triangles(m, ci, cj) {
                s += area / 3.0 * tri.iter().map(|&k| v.values()[k]).sum::<f64>();
            }
        }
    }
    s
}

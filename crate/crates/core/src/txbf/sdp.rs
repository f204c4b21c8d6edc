//! Primal-dual interior-point solver for small complex block-diagonal SDPs.
//!
//! Solves
//!
//! ```text
//! minimize  <C, X>   subject to  <A_i, X> = b_i,  X >= 0
//! maximize  b^T y    subject to  sum_i y_i A_i + Z = C,  Z >= 0
//! ```
//!
//! where every matrix is block diagonal with Hermitian blocks and
//! `<A, B> = Re tr(A B)`. Search directions are HKM with a Mehrotra
//! predictor-corrector; the start point is infeasible.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen_desc, hermitian_part, re_trace_product, CMat, C64};

/// Block-diagonal Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMat {
    pub blocks: Vec<CMat>,
}

impl BlockMat {
    pub fn zeros(sizes: &[usize]) -> Self {
        BlockMat { blocks: sizes.iter().map(|&n| CMat::zeros(n, n)).collect() }
    }

    pub fn identity(sizes: &[usize]) -> Self {
        BlockMat { blocks: sizes.iter().map(|&n| CMat::identity(n, n)).collect() }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    /// Total order of the matrix.
    pub fn order(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn inner(&self, other: &BlockMat) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| re_trace_product(a, b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &BlockMat) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b * C64::from(alpha);
        }
    }

    pub fn scaled(&self, alpha: f64) -> BlockMat {
        BlockMat { blocks: self.blocks.iter().map(|b| b * C64::from(alpha)).collect() }
    }

    fn map2(&self, other: &BlockMat, f: impl Fn(&CMat, &CMat) -> CMat) -> BlockMat {
        BlockMat { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect() }
    }

    fn symmetrize(&mut self) {
        for b in &mut self.blocks {
            *b = hermitian_part(b);
        }
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| hermitian_eigen_desc(b).0.last().copied().unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub c: BlockMat,
    pub a: Vec<BlockMat>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings { tolerance: 1e-7, max_iterations: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: BlockMat,
    pub y: Vec<f64>,
    pub z: BlockMat,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

fn cholesky(m: &CMat) -> Option<Cholesky<C64, nalgebra::Dyn>> {
    Cholesky::new(hermitian_part(m))
}

fn inverse_pd(m: &CMat) -> Option<CMat> {
    cholesky(m).map(|c| c.inverse())
}

/// Largest `alpha` with `x + alpha dx` positive semidefinite (infinite if
/// every direction is nonnegative). `None` when `x` is not positive definite.
fn max_step(x: &BlockMat, dx: &BlockMat) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.blocks.iter().zip(&dx.blocks) {
        let lmin = if xb.nrows() == 1 {
            let x0 = xb[(0, 0)].re;
            if x0 <= 0.0 {
                return None;
            }
            db[(0, 0)].re / x0
        } else {
            let l = cholesky(xb)?.unpack();
            let t = l.solve_lower_triangular(db)?;
            let s = l.solve_lower_triangular(&t.adjoint())?;
            hermitian_eigen_desc(&s).0.last().copied().unwrap_or(0.0)
        };
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    Some(alpha)
}

fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some(ch.solve(rhs));
    }
    m.clone().lu().solve(rhs)
}

/// Run the interior-point method to the configured relative tolerance.
pub fn solve(problem: &SdpProblem, settings: SdpSettings) -> Result<SdpSolution> {
    let m = problem.a.len();
    if problem.b.len() != m {
        return Err(Error::Dimension("constraint count differs from right-hand side".into()));
    }
    let sizes = problem.c.sizes();
    if problem.a.iter().any(|a| a.sizes() != sizes) {
        return Err(Error::Dimension("constraint block sizes differ from the objective".into()));
    }
    let n = problem.c.order() as f64;
    let b = DVector::from_column_slice(&problem.b);
    let b_norm = b.norm();
    let c_norm = problem.c.norm();
    let a_norms: Vec<f64> = problem.a.iter().map(|a| a.norm()).collect();

    let xi = a_norms
        .iter()
        .zip(&problem.b)
        .map(|(an, bi)| (1.0 + bi.abs()) / (1.0 + an))
        .fold(n.sqrt().max(10.0), f64::max);
    let eta = a_norms.iter().copied().fold(n.sqrt().max(10.0).max(c_norm), f64::max);
    let mut x = BlockMat::identity(&sizes).scaled(xi);
    let mut z = BlockMat::identity(&sizes).scaled(eta);
    let mut y = DVector::<f64>::zeros(m);

    for iter in 0..=settings.max_iterations {
        let ax = DVector::from_iterator(m, problem.a.iter().map(|a| a.inner(&x)));
        let rp = &b - &ax;
        let mut rd = problem.c.clone();
        for (i, a) in problem.a.iter().enumerate() {
            rd.axpy(-y[i], a);
        }
        rd.axpy(-1.0, &z);

        let pobj = problem.c.inner(&x);
        let dobj = b.dot(&y);
        let mu = x.inner(&z) / n;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = rd.norm() / (1.0 + c_norm);
        let complementarity = x.inner(&z) / (1.0 + pobj.abs() + dobj.abs());
        if gap.max(complementarity) <= settings.tolerance && pinf <= settings.tolerance && dinf <= settings.tolerance {
            return Ok(SdpSolution {
                x,
                y: y.iter().copied().collect(),
                z,
                primal_objective: pobj,
                dual_objective: dobj,
                iterations: iter,
            });
        }
        if iter == settings.max_iterations {
            break;
        }

        let zinv = BlockMat {
            blocks: z
                .blocks
                .iter()
                .map(|zb| inverse_pd(zb))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Solver("dual iterate lost definiteness".into()))?,
        };
        // X A_j Z^{-1} for every constraint, reused by the Schur complement.
        let xaz: Vec<BlockMat> = problem
            .a
            .iter()
            .map(|a| BlockMat {
                blocks: x
                    .blocks
                    .iter()
                    .zip(&a.blocks)
                    .zip(&zinv.blocks)
                    .map(|((xb, ab), zb)| xb * ab * zb)
                    .collect(),
            })
            .collect();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = problem.a[i].inner(&xaz[j]);
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let x_rd_zinv = BlockMat {
            blocks: x
                .blocks
                .iter()
                .zip(&rd.blocks)
                .zip(&zinv.blocks)
                .map(|((xb, rb), zb)| xb * rb * zb)
                .collect(),
        };
        let base: Vec<f64> = problem.a.iter().map(|a| a.inner(&x_rd_zinv)).collect();
        let a_zinv: Vec<f64> = problem.a.iter().map(|a| a.inner(&zinv)).collect();

        let direction = |sigma_mu: f64, extra: Option<&BlockMat>| -> Result<(BlockMat, DVector<f64>, BlockMat)> {
            let rhs = DVector::from_iterator(
                m,
                (0..m).map(|i| {
                    problem.b[i] - sigma_mu * a_zinv[i] + base[i] + extra.map_or(0.0, |e| problem.a[i].inner(e))
                }),
            );
            let dy = solve_spd(&schur, &rhs).ok_or_else(|| Error::Solver("singular Schur complement".into()))?;
            let mut dz = rd.clone();
            for (i, a) in problem.a.iter().enumerate() {
                dz.axpy(-dy[i], a);
            }
            let mut dx = BlockMat {
                blocks: x
                    .blocks
                    .iter()
                    .zip(&dz.blocks)
                    .zip(&zinv.blocks)
                    .map(|((xb, dzb), zb)| zb * C64::from(sigma_mu) - xb - xb * dzb * zb)
                    .collect(),
            };
            if let Some(e) = extra {
                dx.axpy(-1.0, e);
            }
            dx.symmetrize();
            dz.symmetrize();
            Ok((dx, dy, dz))
        };
        let steps = |dx: &BlockMat, dz: &BlockMat, gamma: f64| -> Result<(f64, f64)> {
            let ap = max_step(&x, dx).ok_or_else(|| Error::Solver("primal iterate lost definiteness".into()))?;
            let ad = max_step(&z, dz).ok_or_else(|| Error::Solver("dual iterate lost definiteness".into()))?;
            Ok(((gamma * ap).min(1.0), (gamma * ad).min(1.0)))
        };

        let (dx_aff, _, dz_aff) = direction(0.0, None)?;
        let (ap, ad) = steps(&dx_aff, &dz_aff, 1.0)?;
        let mut x_aff = x.clone();
        x_aff.axpy(ap, &dx_aff);
        let mut z_aff = z.clone();
        z_aff.axpy(ad, &dz_aff);
        let mu_aff = x_aff.inner(&z_aff) / n;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let cross = dx_aff.map2(&dz_aff, |a, b| a * b).map2(&zinv, |p, zb| p * zb);
        let (dx, dy, dz) = direction(sigma * mu, Some(&cross))?;
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let (ap, ad) = steps(&dx, &dz, gamma)?;
        x.axpy(ap, &dx);
        z.axpy(ad, &dz);
        y += dy * ad;
        x.symmetrize();
        z.symmetrize();
    }
    Err(Error::Solver(format!("no convergence within {} iterations", settings.max_iterations)))
}

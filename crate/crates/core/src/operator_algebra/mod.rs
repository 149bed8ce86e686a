//! Alternating Schwartz scheme for inverting `I - (G_1 + ... + G_n)`.
//!
//! Conventions: the reflection of `G` is `Γ` with `I - Γ = (I - G)^{-1}`.
//! `γ_ij` solve `L γ = diag(Γ_1, ..., Γ_n)` where `L` carries the identity on
//! the diagonal and `Γ_i` in every off-diagonal slot of row `i`.

mod banded;
mod ops;
pub mod random;

pub use banded::BlockRowSystem;
pub use ops::{densify, DenseOp, FnOp, LinearOp};

use crate::linalg::{self, checked_inverse, identity, matmul, CMatrix, LinalgError, C64, ZERO};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgebraError {
    #[error("singular operator: {0}")]
    Singular(#[from] LinalgError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty operator family")]
    Empty,
    #[error("alternating series precondition violated: block norm estimate {norm:.4} >= 1")]
    SeriesPrecondition { norm: f64 },
    #[error("alternating series diverged after {terms} terms (last term norm {last:.3e})")]
    Diverged { terms: usize, last: f64 },
}

/// `grid[i][j]` holds the `(i, j)` component.
pub type OpGrid = Vec<Vec<DenseOp>>;

fn common_dim(ops: &[DenseOp]) -> Result<usize, AlgebraError> {
    let d = ops.first().ok_or(AlgebraError::Empty)?.dim();
    for op in ops {
        if op.dim() != d {
            return Err(AlgebraError::DimensionMismatch { expected: d, found: op.dim() });
        }
    }
    Ok(d)
}

/// `Γ = -G (I - G)^{-1}`, so that `I - Γ = (I - G)^{-1}`.
pub fn reflection_of(g: &DenseOp, cond_cap: f64) -> Result<DenseOp, AlgebraError> {
    let d = g.dim();
    let inv = checked_inverse(&(identity(d) - g.matrix()), cond_cap)?;
    Ok(DenseOp::new(identity(d) - inv))
}

/// Block matrix with identities on the diagonal and `Γ_i` off the diagonal in row `i`.
pub fn assemble_l(gamma: &[DenseOp]) -> Result<DenseOp, AlgebraError> {
    let d = common_dim(gamma)?;
    let n = gamma.len();
    let mut l = identity(n * d);
    for (i, gi) in gamma.iter().enumerate() {
        for j in 0..n {
            if j != i {
                l.view_mut((i * d, j * d), (d, d)).copy_from(gi.matrix());
            }
        }
    }
    Ok(DenseOp::new(l))
}

fn split_blocks(m: &CMatrix, n: usize, d: usize) -> OpGrid {
    (0..n).map(|i| (0..n).map(|j| DenseOp::new(m.view((i * d, j * d), (d, d)).into_owned())).collect()).collect()
}

/// Solves `L γ = diag(Γ)` for the component grid.
pub fn solve_gamma(l: &DenseOp, gamma: &[DenseOp], cond_cap: f64) -> Result<OpGrid, AlgebraError> {
    let d = common_dim(gamma)?;
    let n = gamma.len();
    if l.dim() != n * d {
        return Err(AlgebraError::DimensionMismatch { expected: n * d, found: l.dim() });
    }
    let mut rhs = CMatrix::zeros(n * d, n * d);
    for (i, gi) in gamma.iter().enumerate() {
        rhs.view_mut((i * d, i * d), (d, d)).copy_from(gi.matrix());
    }
    let sol = linalg::checked_solve(l.matrix(), &rhs, cond_cap)?;
    Ok(split_blocks(&sol, n, d))
}

/// `Γ = Σ_ij γ_ij`.
pub fn total_reflection(grid: &OpGrid) -> Result<DenseOp, AlgebraError> {
    let first = grid.first().and_then(|r| r.first()).ok_or(AlgebraError::Empty)?;
    let d = first.dim();
    let mut acc = CMatrix::zeros(d, d);
    for row in grid {
        for op in row {
            if op.dim() != d {
                return Err(AlgebraError::DimensionMismatch { expected: d, found: op.dim() });
            }
            acc += op.matrix();
        }
    }
    Ok(DenseOp::new(acc))
}

/// `γ_ij = -δ_ij G_j - G_i (I - Γ) G_j`.
pub fn recover_components(g: &[DenseOp], total: &DenseOp) -> Result<OpGrid, AlgebraError> {
    let d = common_dim(g)?;
    if total.dim() != d {
        return Err(AlgebraError::DimensionMismatch { expected: d, found: total.dim() });
    }
    let i_minus = identity(d) - total.matrix();
    let right: Vec<CMatrix> = g.iter().map(|gj| matmul(&i_minus, gj.matrix())).collect();
    Ok(g.iter()
        .enumerate()
        .map(|(i, gi)| {
            right
                .iter()
                .enumerate()
                .map(|(j, r)| {
                    let mut m = -matmul(gi.matrix(), r);
                    if i == j {
                        m -= g[j].matrix();
                    }
                    DenseOp::new(m)
                })
                .collect()
        })
        .collect())
}

/// `I - Γ = (I - Γ_2)(I - Γ_1 Γ_2)^{-1}(I - Γ_1)` for two perturbations.
/// Takes the reflections `Γ_1`, `Γ_2`, not the perturbations.
pub fn two_term_inverse(gamma1: &DenseOp, gamma2: &DenseOp, cond_cap: f64) -> Result<DenseOp, AlgebraError> {
    let d = common_dim(&[gamma1.clone(), gamma2.clone()])?;
    let id = identity(d);
    let mid = checked_inverse(&(&id - matmul(gamma1.matrix(), gamma2.matrix())), cond_cap)?;
    let left = &id - gamma2.matrix();
    let right = &id - gamma1.matrix();
    Ok(DenseOp::new(matmul(&matmul(&left, &mid), &right)))
}

/// `ω_ij = (I - G_i) δ_ij + G_i (I - Γ)(I - G_j)`.
pub fn omega_components(g: &[DenseOp], total: &DenseOp) -> Result<OpGrid, AlgebraError> {
    let d = common_dim(g)?;
    let id = identity(d);
    let i_minus = &id - total.matrix();
    let right: Vec<CMatrix> = g.iter().map(|gj| matmul(&i_minus, &(&id - gj.matrix()))).collect();
    Ok(g.iter()
        .enumerate()
        .map(|(i, gi)| {
            right
                .iter()
                .enumerate()
                .map(|(j, r)| {
                    let mut m = matmul(gi.matrix(), r);
                    if i == j {
                        m += &id - gi.matrix();
                    }
                    DenseOp::new(m)
                })
                .collect()
        })
        .collect())
}

/// Off-diagonal block operator `𝚪` (so that `L = I + 𝚪`).
pub fn off_diagonal_block(gamma: &[DenseOp]) -> Result<DenseOp, AlgebraError> {
    let l = assemble_l(gamma)?;
    let n = l.dim();
    Ok(DenseOp::new(l.matrix() - identity(n)))
}

/// Power-iteration estimate of the spectral norm of a dense operator.
pub fn norm_estimate(a: &CMatrix, iters: usize) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<C64> = (0..n).map(|k| C64::new(1.0 + 0.1 * (k % 7) as f64, 0.05 * (k % 3) as f64)).collect();
    let ah = a.adjoint();
    let mut est = 0.0;
    for _ in 0..iters {
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let w = linalg::matvec(&ah, &linalg::matvec(a, &v));
        est = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().sqrt();
        v = w;
    }
    est
}

/// Partial sums of `Σ Γ_i - Σ_{i≠j} Γ_i Γ_j + Σ Γ_i Γ_j Γ_k - ...` over chains
/// with consecutive indices distinct.
pub fn alternating_series(gamma: &[DenseOp], max_terms: usize, tol: f64) -> Result<DenseOp, AlgebraError> {
    let d = common_dim(gamma)?;
    let n = gamma.len();
    if n > 1 {
        let block = off_diagonal_block(gamma)?;
        let norm = norm_estimate(block.matrix(), 60);
        if norm >= 1.0 {
            return Err(AlgebraError::SeriesPrecondition { norm });
        }
    }
    // chains[i]: sum of all chains of the current length starting with index i
    let mut chains: Vec<CMatrix> = gamma.iter().map(|g| g.matrix().clone()).collect();
    let mut sum = CMatrix::zeros(d, d);
    let mut sign = 1.0;
    let mut prev = f64::INFINITY;
    let mut growth = 0;
    for term_idx in 1..=max_terms {
        let mut term = CMatrix::zeros(d, d);
        for c in &chains {
            term += c;
        }
        let tn = linalg::frobenius(&term);
        sum += &term * C64::new(sign, 0.0);
        if tn <= tol * linalg::frobenius(&sum).max(1e-300) || tn == 0.0 || n == 1 {
            return Ok(DenseOp::new(sum));
        }
        if tn >= prev {
            growth += 1;
            if growth >= 3 {
                return Err(AlgebraError::Diverged { terms: term_idx, last: tn });
            }
        } else {
            growth = 0;
        }
        prev = tn;
        let total: CMatrix = chains.iter().fold(CMatrix::zeros(d, d), |acc, c| acc + c);
        chains = gamma.iter().zip(chains.iter()).map(|(g, own)| matmul(g.matrix(), &(&total - own))).collect();
        sign = -sign;
    }
    Err(AlgebraError::Diverged { terms: max_terms, last: prev })
}

/// `(I + 𝚪)^{-1} = (I - 𝚪 + 𝚪²)(I + 𝚪³)^{-1}`.
pub fn cube_inverse(block: &DenseOp, cond_cap: f64) -> Result<DenseOp, AlgebraError> {
    let n = block.dim();
    let id = identity(n);
    let g = block.matrix();
    let g2 = matmul(g, g);
    let g3 = matmul(&g2, g);
    let inv = checked_inverse(&(&id + &g3), cond_cap)?;
    let poly = &id - g + &g2;
    Ok(DenseOp::new(matmul(&poly, &inv)))
}

/// The whole alternating Schwartz construction for one family `G_1..G_n`.
#[derive(Debug, Clone)]
pub struct SchwartzSystem {
    pub g: Vec<DenseOp>,
    pub gamma: Vec<DenseOp>,
    pub l: DenseOp,
    pub components: OpGrid,
    pub total: DenseOp,
    pub omega: Option<OpGrid>,
}

impl SchwartzSystem {
    pub fn build(g: Vec<DenseOp>, cond_cap: f64, with_omega: bool) -> Result<Self, AlgebraError> {
        common_dim(&g)?;
        let gamma = g.iter().map(|gi| reflection_of(gi, cond_cap)).collect::<Result<Vec<_>, _>>()?;
        let l = assemble_l(&gamma)?;
        let components = solve_gamma(&l, &gamma, cond_cap)?;
        let total = total_reflection(&components)?;
        let omega = if with_omega { Some(omega_components(&g, &total)?) } else { None };
        Ok(SchwartzSystem { g, gamma, l, components, total, omega })
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn dim(&self) -> usize {
        self.g[0].dim()
    }

    pub fn g_sum(&self) -> CMatrix {
        self.g.iter().fold(CMatrix::zeros(self.dim(), self.dim()), |acc, g| acc + g.matrix())
    }
}

/// Relative residuals of the identities satisfied by a [`SchwartzSystem`].
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct IdentityResiduals {
    /// `(I - Γ_i)(I - G_i) - I`, worst over `i`.
    pub reflection: f64,
    /// `(I - Γ)(I - G) - I`.
    pub total: f64,
    /// `γ_ij - Γ_i(δ_ij - Σ_{k≠i} γ_kj)`.
    pub gamma_row: f64,
    /// `γ_ij - (δ_ij - Σ_{k≠j} γ_ik) Γ_j`.
    pub gamma_column: f64,
    /// solved versus recovered components.
    pub recovery: f64,
    /// `L ω - I`, if ω was built.
    pub omega: f64,
}

impl SchwartzSystem {
    pub fn residuals(&self) -> IdentityResiduals {
        let d = self.dim();
        let n = self.n();
        let id = identity(d);
        let scale = |m: &CMatrix| linalg::frobenius(m).max(1.0);
        let mut r = IdentityResiduals::default();
        for (g, gam) in self.g.iter().zip(&self.gamma) {
            let p = matmul(&(&id - gam.matrix()), &(&id - g.matrix())) - &id;
            r.reflection = r.reflection.max(linalg::frobenius(&p) / scale(&id));
        }
        let p = matmul(&(&id - self.total.matrix()), &(&id - self.g_sum())) - &id;
        r.total = linalg::frobenius(&p) / scale(&id);
        let gref = scale(self.total.matrix());
        for i in 0..n {
            for j in 0..n {
                let mut inner = if i == j { id.clone() } else { CMatrix::zeros(d, d) };
                for k in (0..n).filter(|&k| k != i) {
                    inner -= self.components[k][j].matrix();
                }
                let row = matmul(self.gamma[i].matrix(), &inner) - self.components[i][j].matrix();
                r.gamma_row = r.gamma_row.max(linalg::frobenius(&row) / gref);

                let mut inner = if i == j { id.clone() } else { CMatrix::zeros(d, d) };
                for k in (0..n).filter(|&k| k != j) {
                    inner -= self.components[i][k].matrix();
                }
                let col = matmul(&inner, self.gamma[j].matrix()) - self.components[i][j].matrix();
                r.gamma_column = r.gamma_column.max(linalg::frobenius(&col) / gref);
            }
        }
        if let Ok(rec) = recover_components(&self.g, &self.total) {
            for i in 0..n {
                for j in 0..n {
                    let diff = rec[i][j].matrix() - self.components[i][j].matrix();
                    r.recovery = r.recovery.max(linalg::frobenius(&diff) / gref);
                }
            }
        }
        if let Some(omega) = &self.omega {
            let mut om = CMatrix::zeros(n * d, n * d);
            for i in 0..n {
                for j in 0..n {
                    om.view_mut((i * d, j * d), (d, d)).copy_from(omega[i][j].matrix());
                }
            }
            let p = matmul(self.l.matrix(), &om) - identity(n * d);
            r.omega = linalg::frobenius(&p) / (n as f64 * d as f64).sqrt();
        }
        r
    }
}

/// Scalar helper for tests and examples.
pub fn scalar(v: f64) -> DenseOp {
    DenseOp::new(CMatrix::from_element(1, 1, C64::new(v, 0.0)))
}

/// Entry `(0,0)` of a 1×1 operator.
pub fn scalar_value(op: &DenseOp) -> C64 {
    if op.dim() == 0 {
        ZERO
    } else {
        op.matrix()[(0, 0)]
    }
}


/// Worst residuals over a batch of random Schwartz systems.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct SuiteReport {
    pub systems: usize,
    pub dim: usize,
    pub n: usize,
    pub norm: f64,
    pub worst: IdentityResiduals,
    /// Two-term inverse against `(I - G_i - G_j)^{-1}`, worst over pairs.
    pub two_term: f64,
}

impl SuiteReport {
    pub fn max_residual(&self) -> f64 {
        let w = &self.worst;
        [w.reflection, w.total, w.gamma_row, w.gamma_column, w.recovery, w.omega, self.two_term].into_iter().fold(0.0, f64::max)
    }
}

/// Builds `systems` random families of `n` operators of norm `norm` in
/// dimension `dim` and records every identity residual.
pub fn identity_suite<R: rand::Rng + ?Sized>(
    rng: &mut R,
    systems: usize,
    n: usize,
    dim: usize,
    norm: f64,
) -> Result<SuiteReport, AlgebraError> {
    let mut rep = SuiteReport { systems, dim, n, norm, ..Default::default() };
    for _ in 0..systems {
        let g = random::random_family(rng, n, dim, norm);
        let sys = SchwartzSystem::build(g.clone(), linalg::DEFAULT_COND_CAP, true)?;
        let r = sys.residuals();
        let w = &mut rep.worst;
        w.reflection = w.reflection.max(r.reflection);
        w.total = w.total.max(r.total);
        w.gamma_row = w.gamma_row.max(r.gamma_row);
        w.gamma_column = w.gamma_column.max(r.gamma_column);
        w.recovery = w.recovery.max(r.recovery);
        w.omega = w.omega.max(r.omega);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = two_term_inverse(&sys.gamma[i], &sys.gamma[j], linalg::DEFAULT_COND_CAP)?;
                let direct = checked_inverse(&(identity(dim) - g[i].matrix() - g[j].matrix()), linalg::DEFAULT_COND_CAP)?;
                rep.two_term = rep.two_term.max(linalg::rel_diff(v.matrix(), &direct));
            }
        }
    }
    Ok(rep)
}

//! Schwartz scheme for operators that are nonzero only on one block row each.
//!
//! The space is `X = X_1 ⊕ ... ⊕ X_n` and `G_i` maps `X` into `X_i`, given by
//! its block row `B_i` (`d_i × D`).  Every reflection and component then also
//! lives on a single block row, so the block system `L` of size `n·D` shrinks
//! to a `D × D` system.

use crate::linalg::{checked_inverse, identity, matmul, CMatrix, LinalgError};

use super::AlgebraError;

#[derive(Debug, Clone)]
pub struct BlockRowSystem {
    offsets: Vec<usize>,
    rows: Vec<CMatrix>,
}

impl BlockRowSystem {
    pub fn new(rows: Vec<CMatrix>) -> Result<Self, AlgebraError> {
        if rows.is_empty() {
            return Err(AlgebraError::Empty);
        }
        let mut offsets = vec![0];
        for r in &rows {
            offsets.push(offsets.last().unwrap() + r.nrows());
        }
        let total = *offsets.last().unwrap();
        for r in &rows {
            if r.ncols() != total {
                return Err(AlgebraError::DimensionMismatch { expected: total, found: r.ncols() });
            }
        }
        Ok(BlockRowSystem { offsets, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn row(&self, i: usize) -> &CMatrix {
        &self.rows[i]
    }

    /// `G = Σ G_i` as a `D × D` matrix.
    pub fn g_total(&self) -> CMatrix {
        stack(&self.rows)
    }

    /// `G_i` embedded as a `D × D` matrix.
    pub fn g_embedded(&self, i: usize) -> CMatrix {
        self.embed(i, &self.rows[i])
    }

    fn embed(&self, i: usize, row: &CMatrix) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        let r = self.block_range(i);
        m.view_mut((r.start, 0), (r.len(), self.dim())).copy_from(row);
        m
    }

    /// Block rows of the reflections: `Γ_i = -(I - B_ii)^{-1} B_i`.
    pub fn reflection_rows(&self, cond_cap: f64) -> Result<Vec<CMatrix>, AlgebraError> {
        (0..self.n())
            .map(|i| {
                let r = self.block_range(i);
                let bii = self.rows[i].columns(r.start, r.len()).into_owned();
                let inv = checked_inverse(&(identity(r.len()) - bii), cond_cap)?;
                Ok(-matmul(&inv, &self.rows[i]))
            })
            .collect()
    }

    /// Compressed `L = I + 𝚪`: block row `i` is `Γ_i` with its own diagonal block removed.
    pub fn block_l(&self, refl: &[CMatrix]) -> CMatrix {
        let mut l = identity(self.dim());
        for (i, gi) in refl.iter().enumerate() {
            let r = self.block_range(i);
            let mut row = gi.clone();
            row.columns_mut(r.start, r.len()).fill(crate::linalg::ZERO);
            let mut view = l.view_mut((r.start, 0), (r.len(), self.dim()));
            view += row;
        }
        l
    }

    /// Off-diagonal part `𝚪` of the compressed block system.
    pub fn block_gamma(&self, refl: &[CMatrix]) -> CMatrix {
        self.block_l(refl) - identity(self.dim())
    }

    /// Total reflection `Γ = Σ_ij γ_ij`, by solving `L Γ = [Γ_1; ...; Γ_n]`.
    pub fn total_reflection(&self, refl: &[CMatrix], cond_cap: f64) -> Result<CMatrix, AlgebraError> {
        let linv = checked_inverse(&self.block_l(refl), cond_cap)?;
        Ok(matmul(&linv, &stack(refl)))
    }

    /// Column `j` of the component grid, stacked over `i`: `L^{-1} E_j Γ_j`.
    pub fn component_column(&self, j: usize, refl: &[CMatrix], cond_cap: f64) -> Result<CMatrix, AlgebraError> {
        let linv = checked_inverse(&self.block_l(refl), cond_cap)?;
        let r = self.block_range(j);
        Ok(matmul(&linv.columns(r.start, r.len()).into_owned(), &refl[j]))
    }

    /// `γ_ij = -δ_ij G_j - G_i (I - Γ) G_j`, returned as the `d_i × D` block row.
    pub fn recover_component(&self, i: usize, j: usize, total: &CMatrix) -> CMatrix {
        let rj = self.block_range(j);
        let i_minus = identity(self.dim()) - total;
        let cols = i_minus.columns(rj.start, rj.len()).into_owned();
        let mut out = -matmul(&self.rows[i], &matmul(&cols, &self.rows[j]));
        if i == j {
            out -= &self.rows[j];
        }
        out
    }

    /// `(I - G)^{-1}` directly.
    pub fn direct_inverse(&self, cond_cap: f64) -> Result<CMatrix, LinalgError> {
        checked_inverse(&(identity(self.dim()) - self.g_total()), cond_cap)
    }
}

fn stack(rows: &[CMatrix]) -> CMatrix {
    let total: usize = rows.iter().map(|r| r.nrows()).sum();
    let ncols = rows.first().map_or(0, |r| r.ncols());
    let mut m = CMatrix::zeros(total, ncols);
    let mut off = 0;
    for r in rows {
        m.view_mut((off, 0), (r.nrows(), ncols)).copy_from(r);
        off += r.nrows();
    }
    m
}

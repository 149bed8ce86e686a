//! Inversion of `A = I - A_1` on `X³`, where `A_1` has rows spanned by three
//! functions `φ_r` against the functionals `ψ_ab` (`a ≠ b`).
//!
//! Block `(r, c)` of `A_1` is `φ_r ⟨F_rc, ·⟩` with `F_rr = Σ_{t≠r} ψ_rt` and
//! `F_rc = ψ_rt` for `c ≠ r`, `t` the remaining index.  Writing
//! `W = A^{-1} - I = (φ_r α_rc)`, the equation `A_1 W = W - A_1` reduces, column by
//! column, to `(I - G) α_{·c} = F_{·c}` with the Gram matrix `G_rm = ⟨F_rm, φ_m⟩`.
//! Functions and functionals live in `C^d` with the bilinear pairing `Σ ψ_n f_n`.

use serde::{Deserialize, Serialize};

use super::SeparationError;
use crate::linalg::{checked_inverse, CMatrix, LinalgError, C64};

/// Default cap on the condition number of `I - G`.
pub const FINITE_RANK_COND_CAP: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRankSystem {
    /// `φ_1, φ_2, φ_3`.
    pub phi: [Vec<C64>; 3],
    /// `psi[a][b] = ψ_ab` for `a ≠ b`; the diagonal is ignored.
    pub psi: [[Vec<C64>; 3]; 3],
}

fn pair(f: &[C64], g: &[C64]) -> C64 {
    f.iter().zip(g).map(|(a, b)| a * b).sum()
}

fn third(a: usize, b: usize) -> usize {
    3 - a - b
}

impl FiniteRankSystem {
    /// The realization in `C^3` with `φ_c = e_c` and `ψ_ab = (g[a][b][c])_c`, so that
    /// `⟨ψ_ab, φ_c⟩ = g[a][b][c]`.
    pub fn from_gram(g: [[[C64; 3]; 3]; 3]) -> Self {
        let e = |c: usize| (0..3).map(|n| C64::new(if n == c { 1.0 } else { 0.0 }, 0.0)).collect::<Vec<_>>();
        let psi = std::array::from_fn(|a| std::array::from_fn(|b| if a == b { Vec::new() } else { g[a][b].to_vec() }));
        FiniteRankSystem { phi: [e(0), e(1), e(2)], psi }
    }

    pub fn dim(&self) -> usize {
        self.phi[0].len()
    }

    pub fn validate(&self) -> Result<(), SeparationError> {
        let d = self.dim();
        let ok = d > 0
            && self.phi.iter().all(|f| f.len() == d)
            && (0..3).all(|a| (0..3).all(|b| a == b || self.psi[a][b].len() == d))
            && self.phi.iter().flatten().chain(self.psi.iter().flatten().flatten()).all(|z| z.re.is_finite() && z.im.is_finite());
        if ok {
            Ok(())
        } else {
            Err(SeparationError::InvalidInput(format!(
                "finite-rank system needs φ and ψ_ab (a ≠ b) of one common finite length {d}"
            )))
        }
    }

    /// `⟨ψ_ab, φ_c⟩`.
    pub fn gram_scalar(&self, a: usize, b: usize, c: usize) -> C64 {
        pair(&self.psi[a][b], &self.phi[c])
    }

    /// The functional `F_rc` of block `(r, c)` of `A_1`.
    pub fn block_functional(&self, r: usize, c: usize) -> Vec<C64> {
        if r == c {
            let (s, t) = ((r + 1) % 3, (r + 2) % 3);
            self.psi[r][s].iter().zip(&self.psi[r][t]).map(|(a, b)| a + b).collect()
        } else {
            self.psi[r][third(r, c)].clone()
        }
    }

    /// `G_rm = ⟨F_rm, φ_m⟩`.
    pub fn gram(&self) -> CMatrix {
        CMatrix::from_fn(3, 3, |r, m| pair(&self.block_functional(r, m), &self.phi[m]))
    }

    /// Dense `A_1` on `C^{3d}`.
    pub fn dense_a1(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(3 * d, 3 * d);
        for r in 0..3 {
            for c in 0..3 {
                let f = self.block_functional(r, c);
                for i in 0..d {
                    for j in 0..d {
                        m[(r * d + i, c * d + j)] = self.phi[r][i] * f[j];
                    }
                }
            }
        }
        m
    }

    /// Dense `A = I - A_1`.
    pub fn dense_a(&self) -> CMatrix {
        let d = self.dim();
        CMatrix::identity(3 * d, 3 * d) - self.dense_a1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRankInverse {
    /// `alpha[r][c] = α_rc`.
    pub alpha: [[Vec<C64>; 3]; 3],
    pub phi: [Vec<C64>; 3],
    /// Condition number (1-norm) of `I - G`.
    pub condition: f64,
}

impl FiniteRankInverse {
    /// Dense `W` with blocks `φ_r α_rc`.
    pub fn dense_w(&self) -> CMatrix {
        let d = self.phi[0].len();
        let mut m = CMatrix::zeros(3 * d, 3 * d);
        for r in 0..3 {
            for c in 0..3 {
                for i in 0..d {
                    for j in 0..d {
                        m[(r * d + i, c * d + j)] = self.phi[r][i] * self.alpha[r][c][j];
                    }
                }
            }
        }
        m
    }

    /// `(I + W) u` for `u ∈ C^{3d}` without forming `W`.
    pub fn apply(&self, u: &[C64]) -> Vec<C64> {
        let d = self.phi[0].len();
        let mut out = u.to_vec();
        for r in 0..3 {
            let s: C64 = (0..3).map(|c| pair(&self.alpha[r][c], &u[c * d..(c + 1) * d])).sum();
            for i in 0..d {
                out[r * d + i] += self.phi[r][i] * s;
            }
        }
        out
    }
}

/// Solves for `W = A^{-1} - I`.  `IllConditioned` when `cond(I - G)` exceeds `cap`.
pub fn finite_rank_invert(system: &FiniteRankSystem, cap: f64) -> Result<FiniteRankInverse, SeparationError> {
    system.validate()?;
    let g = system.gram();
    let inv = checked_inverse(&(CMatrix::identity(3, 3) - &g), cap).map_err(|e| match e {
        LinalgError::Singular { cond, cap } => SeparationError::IllConditioned { cond, cap },
        other => SeparationError::InvalidInput(other.to_string()),
    })?;
    let condition = crate::linalg::norm1(&(CMatrix::identity(3, 3) - &g)) * crate::linalg::norm1(&inv);
    let d = system.dim();
    let alpha = std::array::from_fn(|r| {
        std::array::from_fn(|c| {
            let mut a = vec![C64::new(0.0, 0.0); d];
            for m in 0..3 {
                let f = system.block_functional(m, c);
                for (x, y) in a.iter_mut().zip(&f) {
                    *x += inv[(r, m)] * y;
                }
            }
            a
        })
    });
    Ok(FiniteRankInverse { alpha, phi: system.phi.clone(), condition })
}

/// `max_p ‖A (I + W) u_p - u_p‖ / ‖u_p‖` over the probe vectors.
pub fn inverse_residual(system: &FiniteRankSystem, inverse: &FiniteRankInverse, probes: &[Vec<C64>]) -> f64 {
    let a = system.dense_a();
    probes
        .iter()
        .map(|u| {
            let v = CMatrix::from_column_slice(u.len(), 1, &inverse.apply(u));
            let au = &a * v;
            let diff: f64 = au.iter().zip(u).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            diff / u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

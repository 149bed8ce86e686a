//! Dense complex linear algebra used across the crate.
//!
//! nalgebra supplies the matrix type; products and LU go through
//! `matrixmultiply::zgemm`, which is much faster than the generic complex
//! paths for the matrix sizes used by the assembly module.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Default cap on the 1-norm condition estimate before a matrix counts as singular.
pub const DEFAULT_COND_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is numerically singular (condition estimate {cond:.3e}, cap {cap:.3e})")]
    Singular { cond: f64, cap: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// `c = alpha * a * b + beta * c` on raw column-major views.
#[allow(clippy::too_many_arguments)]
fn gemm_raw(
    m: usize,
    k: usize,
    n: usize,
    alpha: C64,
    a: *const C64,
    lda: usize,
    b: *const C64,
    ldb: usize,
    beta: C64,
    c: *mut C64,
    ldc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: Complex<f64> is repr(C) with layout [re, im]; callers pass
    // valid column-major views with the given leading dimensions.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a as *const [f64; 2],
            1,
            lda as isize,
            b as *const [f64; 2],
            1,
            ldb as isize,
            [beta.re, beta.im],
            c as *mut [f64; 2],
            1,
            ldc as isize,
        );
    }
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    let (m, k) = a.shape();
    let n = b.ncols();
    let mut c = CMatrix::zeros(m, n);
    if k == 0 {
        return c;
    }
    gemm_raw(m, k, n, ONE, a.as_ptr(), m, b.as_ptr(), k, ZERO, c.as_mut_ptr(), m);
    c
}

/// `c += alpha * a * b`
pub fn gemm_acc(c: &mut CMatrix, alpha: C64, a: &CMatrix, b: &CMatrix) {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(c.shape(), (a.nrows(), b.ncols()));
    let (m, k) = a.shape();
    let n = b.ncols();
    if k == 0 {
        return;
    }
    let ldc = c.nrows();
    gemm_raw(m, k, n, alpha, a.as_ptr(), m, b.as_ptr(), k, ONE, c.as_mut_ptr(), ldc);
}

pub fn matvec(a: &CMatrix, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![ZERO; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        let col = a.column(j);
        for (yi, aij) in y.iter_mut().zip(col.iter()) {
            *yi += aij * xj;
        }
    }
    y
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn norm1(a: &CMatrix) -> f64 {
    a.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative Frobenius distance `|a-b| / max(|b|, tiny)`.
pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a - b)) / frobenius(b).max(1e-300)
}

pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

const BLOCK: usize = 64;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    anorm1: f64,
}

impl Lu {
    /// Factorizes `a`; returns `None` only on an exactly zero pivot.
    pub fn factor(a: CMatrix) -> Option<Lu> {
        assert!(a.is_square(), "LU of non-square matrix");
        let n = a.nrows();
        let anorm1 = norm1(&a);
        let mut lu = a;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut k0 = 0;
        while k0 < n {
            let nb = BLOCK.min(n - k0);
            // unblocked panel factorization of columns k0..k0+nb over rows k0..n
            for k in k0..k0 + nb {
                let mut p = k;
                let mut best = lu[(k, k)].norm();
                for i in k + 1..n {
                    let v = lu[(i, k)].norm();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                if best == 0.0 {
                    return None;
                }
                if p != k {
                    lu.swap_rows(k, p);
                    perm.swap(k, p);
                }
                let inv = ONE / lu[(k, k)];
                for i in k + 1..n {
                    lu[(i, k)] *= inv;
                }
                // update the rest of the panel only
                for j in k + 1..k0 + nb {
                    let ukj = lu[(k, j)];
                    if ukj == ZERO {
                        continue;
                    }
                    for i in k + 1..n {
                        let lik = lu[(i, k)];
                        lu[(i, j)] -= lik * ukj;
                    }
                }
            }
            let k1 = k0 + nb;
            if k1 < n {
                // U12 = L11^{-1} A12
                for j in k1..n {
                    for k in k0..k1 {
                        let ukj = lu[(k, j)];
                        if ukj == ZERO {
                            continue;
                        }
                        for i in k + 1..k1 {
                            let lik = lu[(i, k)];
                            lu[(i, j)] -= lik * ukj;
                        }
                    }
                }
                // A22 -= L21 U12
                let ld = n;
                let base = lu.as_mut_ptr();
                // SAFETY: the three views are disjoint column-major blocks of `lu`.
                unsafe {
                    let l21 = base.add(k0 * ld + k1);
                    let u12 = base.add(k1 * ld + k0);
                    let a22 = base.add(k1 * ld + k1);
                    gemm_raw(n - k1, nb, n - k1, -ONE, l21, ld, u12, ld, ONE, a22, ld);
                }
            }
            k0 = k1;
        }
        Some(Lu { lu, perm, anorm1 })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solves `A X = B` in place of a copy of `B`.
    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        let n = self.dim();
        assert_eq!(b.nrows(), n);
        let m = b.ncols();
        let mut x = CMatrix::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            for j in 0..m {
                x[(i, j)] = b[(p, j)];
            }
        }
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let bm = CMatrix::from_column_slice(b.len(), 1, b);
        self.solve(&bm).as_slice().to_vec()
    }

    fn forward(&self, x: &mut CMatrix) {
        let n = self.dim();
        let m = x.ncols();
        let mut k0 = 0;
        while k0 < n {
            let nb = BLOCK.min(n - k0);
            let k1 = k0 + nb;
            for j in 0..m {
                for k in k0..k1 {
                    let xk = x[(k, j)];
                    if xk == ZERO {
                        continue;
                    }
                    for i in k + 1..k1 {
                        x[(i, j)] -= self.lu[(i, k)] * xk;
                    }
                }
            }
            if k1 < n {
                let ld = x.nrows();
                let l = self.lu.as_ptr();
                let xp = x.as_mut_ptr();
                // SAFETY: rows k0..k1 and k1..n of x are disjoint.
                unsafe {
                    gemm_raw(n - k1, nb, m, -ONE, l.add(k0 * n + k1), n, xp.add(k0), ld, ONE, xp.add(k1), ld);
                }
            }
            k0 = k1;
        }
    }

    fn backward(&self, x: &mut CMatrix) {
        let n = self.dim();
        let m = x.ncols();
        let mut k1 = n;
        while k1 > 0 {
            let nb = BLOCK.min(k1);
            let k0 = k1 - nb;
            for j in 0..m {
                for k in (k0..k1).rev() {
                    let xk = x[(k, j)] / self.lu[(k, k)];
                    x[(k, j)] = xk;
                    if xk == ZERO {
                        continue;
                    }
                    for i in k0..k {
                        x[(i, j)] -= self.lu[(i, k)] * xk;
                    }
                }
            }
            if k0 > 0 {
                let ld = x.nrows();
                let u = self.lu.as_ptr();
                let xp = x.as_mut_ptr();
                // SAFETY: rows 0..k0 and k0..k1 of x are disjoint.
                unsafe {
                    gemm_raw(k0, nb, m, -ONE, u.add(k0 * n), n, xp.add(k0), ld, ONE, xp, ld);
                }
            }
            k1 = k0;
        }
    }

    pub fn inverse(&self) -> CMatrix {
        self.solve(&identity(self.dim()))
    }

    /// Exact 1-norm condition number from an explicit inverse.
    pub fn condition_from_inverse(&self, inv: &CMatrix) -> f64 {
        self.anorm1 * norm1(inv)
    }
}

/// Inverse of `a` with a condition check against `cap`.
pub fn checked_inverse(a: &CMatrix, cap: f64) -> Result<CMatrix, LinalgError> {
    let lu = Lu::factor(a.clone()).ok_or(LinalgError::Singular { cond: f64::INFINITY, cap })?;
    let inv = lu.inverse();
    let cond = lu.condition_from_inverse(&inv);
    if !cond.is_finite() || cond > cap {
        return Err(LinalgError::Singular { cond, cap });
    }
    Ok(inv)
}

/// Solves `a x = b` with a condition check; the inverse is formed once so the
/// estimate is exact.
pub fn checked_solve(a: &CMatrix, b: &CMatrix, cap: f64) -> Result<CMatrix, LinalgError> {
    let inv = checked_inverse(a, cap)?;
    Ok(matmul(&inv, b))
}

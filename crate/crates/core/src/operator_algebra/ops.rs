use crate::linalg::{matvec, CMatrix, C64};

/// A linear map on `C^dim`.
pub trait LinearOp: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    /// Dense realization, when one is available.
    fn to_dense(&self) -> Option<CMatrix> {
        None
    }
}

/// Dense complex matrix backend.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOp {
    mat: CMatrix,
}

impl DenseOp {
    pub fn new(mat: CMatrix) -> Self {
        assert!(mat.is_square(), "operator matrix must be square");
        DenseOp { mat }
    }

    pub fn zeros(dim: usize) -> Self {
        DenseOp::new(CMatrix::zeros(dim, dim))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }
}

impl LinearOp for DenseOp {
    fn dim(&self) -> usize {
        self.mat.nrows()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        matvec(&self.mat, x)
    }

    fn to_dense(&self) -> Option<CMatrix> {
        Some(self.mat.clone())
    }
}

/// Matrix-free operator given by a closure.
pub struct FnOp<F> {
    dim: usize,
    f: F,
}

impl<F> FnOp<F>
where
    F: Fn(&[C64]) -> Vec<C64> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnOp { dim, f }
    }
}

impl<F> LinearOp for FnOp<F>
where
    F: Fn(&[C64]) -> Vec<C64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        (self.f)(x)
    }
}

/// Dense matrix of any operator by applying it to the basis vectors.
pub fn densify(op: &dyn LinearOp) -> CMatrix {
    if let Some(m) = op.to_dense() {
        return m;
    }
    let n = op.dim();
    let mut m = CMatrix::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        let col = op.apply(&e);
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
        e[j] = C64::new(0.0, 0.0);
    }
    m
}

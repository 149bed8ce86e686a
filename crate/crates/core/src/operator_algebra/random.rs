//! Reproducible random operators with a prescribed spectral norm.

use rand::Rng;

use crate::linalg::{spectral_norm, CMatrix, C64};

use super::DenseOp;

/// Uniform sample from the closed complex unit disc.
pub fn unit_disc<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    loop {
        let z = C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        if z.norm_sqr() <= 1.0 {
            return z;
        }
    }
}

/// Random `dim × dim` operator whose spectral norm equals `norm`.
pub fn random_operator<R: Rng + ?Sized>(rng: &mut R, dim: usize, norm: f64) -> DenseOp {
    let m = CMatrix::from_fn(dim, dim, |_, _| unit_disc(rng));
    let s = spectral_norm(&m);
    DenseOp::new(if s > 0.0 { m * C64::new(norm / s, 0.0) } else { m })
}

/// Random family of `n` operators, each of spectral norm `norm`.
pub fn random_family<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize, norm: f64) -> Vec<DenseOp> {
    (0..n).map(|_| random_operator(rng, dim, norm)).collect()
}

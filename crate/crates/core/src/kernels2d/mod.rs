//! Plane kernels: Jacobi coordinates, the free outgoing Green's function of
//! `-Δ - λ`, the channel resolvent of `-Δ + v(x)` and its far-field form.

mod channel;

pub use channel::{
    channel_resolvent, channel_resolvent_contour, channel_resolvent_with, gamma_channel_kernel, ChannelExtent, ChannelKernel,
    ChannelOptions, ContourOptions,
};

use serde::{Deserialize, Serialize};

use crate::linalg::C64;
use crate::onebody::{JostTable, OneBodyError, PairPotential};
use crate::special::hankel1_0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("line coordinates do not sum to zero (sum = {0:e})")]
    NotOnPlane(f64),
    #[error("pair index {0} out of range 0..3")]
    BadPair(usize),
    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,
    #[error("degenerate saddle geometry")]
    DegenerateGeometry,
    #[error("invalid spectral point: {0}")]
    InvalidSpectralPoint(String),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error(transparent)]
    OneBody(#[from] OneBodyError),
}

/// A point of the centre-of-mass plane in the Jacobi coordinates of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        PlanePoint { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(&self, other: &PlanePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// `λ = E + iε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub energy: f64,
    pub eps: f64,
}

impl SpectralPoint {
    pub fn new(energy: f64, eps: f64) -> Result<Self, KernelError> {
        if !(energy.is_finite() && energy > 0.0) {
            return Err(KernelError::InvalidSpectralPoint(format!("energy {energy} must be positive")));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(KernelError::InvalidSpectralPoint(format!("eps {eps} must be non-negative")));
        }
        Ok(SpectralPoint { energy, eps })
    }

    /// Checks `c1 <= E <= c2`.
    pub fn in_window(self, c1: f64, c2: f64) -> Result<Self, KernelError> {
        if self.energy < c1 || self.energy > c2 {
            return Err(KernelError::InvalidSpectralPoint(format!("energy {} outside window [{c1}, {c2}]", self.energy)));
        }
        Ok(self)
    }

    pub fn lambda(&self) -> C64 {
        C64::new(self.energy, self.eps)
    }

    /// `√(λ - p²)` on the branch with non-negative imaginary part.
    pub fn transverse_momentum(&self, p: f64) -> C64 {
        sqrt_upper(self.lambda() - p * p)
    }
}

/// Square root with `Im ≥ 0`; on the positive axis the positive root (outgoing limit).
pub fn sqrt_upper(z: C64) -> C64 {
    let r = z.sqrt();
    let r = if r.im < 0.0 { -r } else { r };
    debug_assert!(r.im >= 0.0);
    r
}

/// Jacobi coordinates of pair `i` (0-based; `(i, j, k)` cyclic):
/// `x_i = (z_k - z_j)/√2`, `y_i = √(3/2) z_i`.
pub fn jacobi_transform(z: [f64; 3], pair: usize) -> Result<PlanePoint, KernelError> {
    if pair > 2 {
        return Err(KernelError::BadPair(pair));
    }
    let sum = z[0] + z[1] + z[2];
    let scale = z.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if sum.abs() > 1e-12 * scale {
        return Err(KernelError::NotOnPlane(sum));
    }
    let (i, j, k) = (pair, (pair + 1) % 3, (pair + 2) % 3);
    Ok(PlanePoint::new((z[k] - z[j]) / 2f64.sqrt(), (1.5f64).sqrt() * z[i]))
}

/// Line coordinates of a point given in the Jacobi coordinates of `pair`.
pub fn jacobi_inverse(p: PlanePoint, pair: usize) -> [f64; 3] {
    let (i, j, k) = (pair % 3, (pair + 1) % 3, (pair + 2) % 3);
    let zi = p.y * (2.0f64 / 3.0).sqrt();
    let diff = 2f64.sqrt() * p.x;
    let mut z = [0.0; 3];
    z[i] = zi;
    z[k] = 0.5 * (-zi + diff);
    z[j] = 0.5 * (-zi - diff);
    z
}

/// Re-expresses a point given in the coordinates of pair `from` in those of pair `to`.
pub fn change_pair(p: PlanePoint, from: usize, to: usize) -> PlanePoint {
    let z = jacobi_inverse(p, from);
    let (i, j, k) = (to % 3, (to + 1) % 3, (to + 2) % 3);
    PlanePoint::new((z[k] - z[j]) / 2f64.sqrt(), (1.5f64).sqrt() * z[i])
}

/// Outgoing Green's function of `-Δ - λ` in the plane, `(i/4) H0^(1)(√λ |z - z'|)`.
pub fn free_resolvent_2d(z: PlanePoint, zp: PlanePoint, lambda: C64) -> Result<C64, KernelError> {
    let r = z.dist(&zp);
    if r == 0.0 {
        return Err(KernelError::CoincidentPoints);
    }
    Ok(free_kernel_at(r, sqrt_upper(lambda)))
}

/// `(i/4) H0^(1)(k r)` for `r > 0`, `Im k ≥ 0`.
pub(crate) fn free_kernel_at(r: f64, k: C64) -> C64 {
    0.25 * C64::i() * hankel1_0(k * r)
}

/// `e^{iπ/4} / (2√(2π) λ^{1/4}) · e^{i√λ r} / √r`.
pub fn far_field_2d(r: f64, lambda: C64) -> C64 {
    let pref = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4) / (2.0 * (2.0 * std::f64::consts::PI).sqrt());
    let sl = sqrt_upper(lambda);
    pref / sl.sqrt() * (C64::i() * sl * r).exp() / r.sqrt()
}

/// Stationary point of `Φ(k) = k x' + √(λ - k²) dy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleData {
    pub k0: C64,
    pub phase: C64,
    pub second_derivative: C64,
    /// `|x'√(λ - k0²) - k0 dy|`.
    pub residual: f64,
}

pub fn saddle_point(lambda: C64, xprime: f64, dy: f64) -> Result<SaddleData, KernelError> {
    let r = xprime.hypot(dy);
    if !(r > 0.0) || !r.is_finite() {
        return Err(KernelError::DegenerateGeometry);
    }
    let sl = sqrt_upper(lambda);
    let k0 = sl * (xprime / r);
    let kt = sl * (dy / r); // √(λ - k0²) on the saddle
    let phase = k0 * xprime + kt * dy;
    let second_derivative = -lambda * dy / (kt * kt * kt);
    let residual = (xprime * sqrt_upper(lambda - k0 * k0) - k0 * dy).norm();
    Ok(SaddleData { k0, phase, second_derivative, residual })
}

/// Source of `φ_+(x, k)` for the far-field formula.
pub trait JostProvider {
    fn phi_plus(&self, x: f64, k: C64) -> Result<C64, KernelError>;
}

impl JostProvider for PairPotential {
    fn phi_plus(&self, x: f64, k: C64) -> Result<C64, KernelError> {
        if self.is_zero() {
            return Ok((-C64::i() * k * x).exp());
        }
        Ok(JostTable::new(self, k)?.phi_plus(x))
    }
}

impl JostProvider for JostTable {
    fn phi_plus(&self, x: f64, _k: C64) -> Result<C64, KernelError> {
        Ok(JostTable::phi_plus(self, x))
    }
}

/// Far-field form of the channel resolvent for `x` bounded and `x'`, `y - y'` large:
/// `φ_+(x, k0) e^{iπ/4}/(2√(2π) λ^{1/4}) e^{i√λ r0}/√r0`, `r0 = √(x'² + (y - y')²)`,
/// `k0 = √λ |x'|/r0`.  For `x' < 0` the mirrored solution `φ_+(-x, k0)` is used.
pub fn channel_asymptotic(z: PlanePoint, zp: PlanePoint, lambda: C64, jost: &dyn JostProvider) -> Result<C64, KernelError> {
    let dy = (z.y - zp.y).abs();
    let sd = saddle_point(lambda, zp.x.abs(), dy)?;
    let r0 = zp.x.hypot(dy);
    let x = if zp.x >= 0.0 { z.x } else { -z.x };
    let phi = jost.phi_plus(x, sd.k0)?;
    Ok(phi * far_field_2d(r0, lambda))
}

//! Spectral diagnostic for the cutoff-potential system: `I + Γ̃³` is invertible
//! when no eigenvalue of the cube of the block reflection operator lies near `-1`.

use nalgebra::Schur;
use serde::Serialize;

use super::{power_spectral_radius, ReflectionFactors, SeparationError};
use crate::assembly::{BandDiscretization, BandOptions, PairTerm};
use crate::linalg::{matmul, CMatrix, C64};

/// Power-iteration steps for the spectral radius of `G̃`.
const G_RADIUS_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuardReport {
    pub lambda: C64,
    pub t: f64,
    pub delta: f64,
    pub dim: usize,
    /// Spectral radius estimate of `G̃ = -Ṽ R0`.
    pub g_radius: f64,
    /// Spectral radius of the block operator cubed.
    pub cube_radius: f64,
    /// `min |w + 1|` over eigenvalues `w` of the cube (infinite when there are none).
    pub distance_to_minus_one: f64,
    /// Eigenvalues with `|w + 1| < δ`.
    pub flagged: Vec<C64>,
}

impl GuardReport {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Eigenvalues of a dense complex matrix via the Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>, SeparationError> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| SeparationError::Singular("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Eigenvalues of the cube of an explicit block operator, with the report.
pub fn guard_from_blocks(block: &CMatrix, g: &CMatrix, lambda: C64, t: f64, delta: f64) -> Result<GuardReport, SeparationError> {
    let cube = matmul(block, &matmul(block, block));
    let eig = eigenvalues(&cube)?;
    let cube_radius = eig.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let distance_to_minus_one = eig.iter().map(|w| (w + 1.0).norm()).fold(f64::INFINITY, f64::min);
    let flagged = eig.into_iter().filter(|w| (w + 1.0).norm() < delta).collect();
    Ok(GuardReport {
        lambda,
        t,
        delta,
        dim: block.nrows(),
        g_radius: power_spectral_radius(g, G_RADIUS_ITERS),
        cube_radius,
        distance_to_minus_one,
        flagged,
    })
}

/// Assembles the cutoff bands (`ṽ = χ_T v`) at `λ` and checks the spectrum
/// of `Γ̃³` against `-1`.
pub fn spectral_guard(terms: &[PairTerm], lambda: C64, t: f64, delta: f64) -> Result<GuardReport, SeparationError> {
    if !(delta > 0.0) {
        return Err(SeparationError::InvalidInput(format!("guard radius {delta} must be positive")));
    }
    let bands = BandDiscretization::new(terms, BandOptions::new(t).with_cutoff(t))?;
    if bands.dim() == 0 {
        return Ok(GuardReport {
            lambda,
            t,
            delta,
            dim: 0,
            g_radius: 0.0,
            cube_radius: 0.0,
            distance_to_minus_one: f64::INFINITY,
            flagged: Vec::new(),
        });
    }
    let factors = ReflectionFactors::new(&bands, lambda)?;
    guard_from_blocks(&factors.block_operator(), &factors.g_matrix(), lambda, t, delta)
}

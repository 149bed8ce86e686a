//! Cutoffs and the separation of reflection products into a finite-rank
//! outgoing part and a faster-decaying remainder, plus the inversion of the
//! finite-rank block operator and a spectral diagnostic for the cutoff system.

mod cutoff;
mod finite_rank;
mod guard;
mod products;
mod rank_two;
mod triple;


pub use cutoff::{make_cutoffs, smoothstep, CutoffFamily};
pub use finite_rank::{finite_rank_invert, inverse_residual, FiniteRankInverse, FiniteRankSystem, FINITE_RANK_COND_CAP};
pub use guard::{eigenvalues, guard_from_blocks, spectral_guard, GuardReport};
pub use products::{Columns, ReflectionFactors, SampledProduct};
pub use rank_two::{
    decay_certificate, fit_window, psi_ray, rank_two_extract, rank_two_split, remainder_levels, upper_envelope, DecayCertificate,
    ProfileComparison, ProfileReading, RankTwoSeparation, RayFit, RayKind, FIT_INNER_TRIM, FIT_MIN_SPAN, SOURCE_RADIUS_FACTOR,
    THRESHOLD_MOMENTUM,
};
pub use triple::{
    ab_decompose_triple, b_part_spectral_radius, power_spectral_radius, triple_cutoff_sweep, RemainderNorm, TripleSeparation,
    TripleSweep, REMAINDER_SOURCE_RADIUS, TRIPLE_BAND_FACTOR,
};

use crate::analysis::AnalysisError;
use crate::assembly::AssemblyError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeparationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("decay fit failed: {0}")]
    FitFailure(String),
    #[error("singular band system: {0}")]
    Singular(String),
    #[error("finite-rank system ill-conditioned (condition {cond:.3e}, cap {cap:.3e})")]
    IllConditioned { cond: f64, cap: f64 },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

impl From<AnalysisError> for SeparationError {
    fn from(e: AnalysisError) -> Self {
        SeparationError::FitFailure(e.to_string())
    }
}

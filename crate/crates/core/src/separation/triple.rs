//! Triple products `Γ_i Γ_j Γ_k`: the rank-two split and the comparison with
//! the same product built from cutoff potentials.
//!
//! With `ṽ = χ_T v` the remainder splits as `B_ijk = Γ̃_i Γ̃_j Γ̃_k + E_ijk`.
//! The long product is computed once on bands long enough for the largest
//! `T`; each `T` then only needs the short cutoff bands.

use serde::Serialize;

use super::{rank_two_extract, Columns, RankTwoSeparation, ReflectionFactors, SampledProduct, SeparationError};
use crate::assembly::{BandDiscretization, BandOptions, PairTerm};
use crate::kernels2d::{change_pair, PlanePoint};
use crate::linalg::{CMatrix, C64};

/// Band half-length as a multiple of the largest `T`: the fit window ends at
/// `4T`, and the rest keeps the truncation of the band away from it.
pub const TRIPLE_BAND_FACTOR: f64 = 6.0;
/// `‖E‖` is taken over the columns with `|z'|` at most this, the same set for every `T`.
pub const REMAINDER_SOURCE_RADIUS: f64 = 4.0;

/// `‖E_ijk‖` at one cutoff radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemainderNorm {
    pub t: f64,
    /// `max |E(z, z')| / |v(x)|` over band rows with `|y| ≤ 4T` and columns with
    /// `|z'| ≤ REMAINDER_SOURCE_RADIUS`.
    pub e_norm: f64,
    /// The same maximum for `B_ijk`, for scale.
    pub b_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TripleSeparation {
    pub separation: RankTwoSeparation,
    pub remainder: RemainderNorm,
}

/// All cutoff radii of one triple product.
#[derive(Debug, Clone)]
pub struct TripleSweep {
    pub sequence: [usize; 3],
    pub lambda: C64,
    pub product: SampledProduct,
    pub results: Vec<TripleSeparation>,
}

impl TripleSweep {
    /// `‖E_T‖` strictly decreasing in `T`.
    pub fn e_norm_decreasing(&self) -> bool {
        self.results.windows(2).all(|w| w[1].remainder.e_norm < w[0].remainder.e_norm)
    }
}

fn check_triple(seq: [usize; 3], ts: &[f64]) -> Result<(), SeparationError> {
    if seq.iter().any(|&p| p > 2) || seq[0] == seq[1] || seq[1] == seq[2] {
        return Err(SeparationError::InvalidInput(format!("triple {seq:?} needs i ≠ j ≠ k")));
    }
    if ts.is_empty() || ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(SeparationError::InvalidInput(format!("bad cutoff radii {ts:?}")));
    }
    Ok(())
}

/// Separation and cutoff remainder of `Γ_i Γ_j Γ_k` for a single `T`.
pub fn ab_decompose_triple(
    seq: [usize; 3],
    lambda: C64,
    t: f64,
    terms: &[PairTerm],
    cols: &Columns,
) -> Result<TripleSeparation, SeparationError> {
    let mut sweep = triple_cutoff_sweep(seq, lambda, &[t], terms, cols)?;
    Ok(sweep.results.remove(0))
}

/// [`ab_decompose_triple`] over several cutoff radii sharing one long product.
pub fn triple_cutoff_sweep(
    seq: [usize; 3],
    lambda: C64,
    ts: &[f64],
    terms: &[PairTerm],
    cols: &Columns,
) -> Result<TripleSweep, SeparationError> {
    check_triple(seq, ts)?;
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let long = BandDiscretization::new(terms, BandOptions::new(TRIPLE_BAND_FACTOR * t_max))?;
    let factors = ReflectionFactors::new(&long, lambda)?;
    let product = factors.product(&seq, cols)?;
    let mut results = Vec::with_capacity(ts.len());
    for &t in ts {
        let separation = rank_two_extract(&product, t, lambda)?;
        let remainder = cutoff_remainder(&product, &separation, seq, lambda, t, terms)?;
        results.push(TripleSeparation { separation, remainder });
    }
    Ok(TripleSweep { sequence: seq, lambda, product, results })
}

/// `E = B - Γ̃_i Γ̃_j Γ̃_k` on the rows with `|y| ≤ 4T`.
fn cutoff_remainder(
    product: &SampledProduct,
    sep: &RankTwoSeparation,
    seq: [usize; 3],
    lambda: C64,
    t: f64,
    terms: &[PairTerm],
) -> Result<RemainderNorm, SeparationError> {
    let rows: Vec<usize> = (0..product.rows_local.len())
        .filter(|&r| product.rows_local[r].y.abs() <= 4.0 * t && product.row_potential[r] != 0.0)
        .collect();
    if rows.is_empty() {
        return Ok(RemainderNorm { t, e_norm: 0.0, b_norm: 0.0 });
    }
    let pair = product.pair();
    let points: Vec<PlanePoint> = rows.iter().map(|&r| change_pair(product.rows_local[r], pair, 0)).collect();
    let short = BandDiscretization::new(terms, BandOptions::new(t).with_cutoff(t))?;
    let cut_factors = ReflectionFactors::new(&short, lambda)?;
    if product.col_weights.is_some() {
        return Err(SeparationError::InvalidInput("cutoff remainder needs point columns".into()));
    }
    let cols: Vec<usize> = (0..product.cols.len()).filter(|&c| product.cols[c].norm() <= REMAINDER_SOURCE_RADIUS).collect();
    if cols.is_empty() {
        return Err(SeparationError::InvalidInput(format!("no columns within |z'| ≤ {REMAINDER_SOURCE_RADIUS}")));
    }
    let col_points: Vec<PlanePoint> = cols.iter().map(|&c| product.cols[c]).collect();
    let cut = cut_factors.product_at(&seq, &points, &col_points)?;
    let (mut e_norm, mut b_norm) = (0.0f64, 0.0f64);
    for (m, &r) in rows.iter().enumerate() {
        let v = product.row_potential[r].abs();
        for (n, &c) in cols.iter().enumerate() {
            let b = sep.b_part[(r, c)];
            b_norm = b_norm.max(b.norm() / v);
            e_norm = e_norm.max((b - cut[(m, n)]).norm() / v);
        }
    }
    Ok(RemainderNorm { t, e_norm, b_norm })
}

/// Spectral radius of a square matrix by power iteration: the geometric mean
/// of the growth factors over the second half of `iters` steps.
pub fn power_spectral_radius(m: &CMatrix, iters: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = CMatrix::from_fn(n, 1, |i, _| C64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()));
    let mut growth = Vec::with_capacity(iters);
    for _ in 0..iters {
        let nx = x.norm();
        if nx == 0.0 {
            return 0.0;
        }
        x.unscale_mut(nx);
        let y = m * &x;
        growth.push(y.norm());
        x = y;
    }
    // averaging damps the beating between eigenvalues of similar modulus
    let tail = &growth[growth.len() / 2..];
    (tail.iter().map(|g| g.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / tail.len() as f64).exp()
}

/// Spectral radius of the B-part of `Γ_i Γ_j Γ_k` acting on band-`i` densities.
pub fn b_part_spectral_radius(
    seq: [usize; 3],
    lambda: C64,
    t: f64,
    terms: &[PairTerm],
    iters: usize,
) -> Result<(f64, CMatrix), SeparationError> {
    check_triple(seq, &[t])?;
    let bands = BandDiscretization::new(terms, BandOptions::new(TRIPLE_BAND_FACTOR * t))?;
    let factors = ReflectionFactors::new(&bands, lambda)?;
    let product = factors.product(&seq, &Columns::Band(seq[0]))?;
    let sep = super::rank_two_split(&product, t, lambda)?;
    Ok((power_spectral_radius(&sep.b_part, iters), sep.b_part))
}

//! Rank-two extraction of the outgoing in-band part of a product kernel.
//!
//! Far along the band of the leftmost pair the kernel behaves like
//! `v(x) φ(x) |y|^{-1/2} e^{i√λ|y|} ψ_±(z')` in each direction.  The profile
//! `φ` is the threshold solution of the pair (the momentum-zero reading);
//! `ψ_±` are the per-column least-squares projections of the far window onto
//! that profile.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::{CutoffFamily, SampledProduct, SeparationError};
use crate::analysis::power_law_fit;
use crate::kernels2d::{change_pair, sqrt_upper, PlanePoint};
use crate::linalg::{CMatrix, C64};
use crate::onebody::{JostTable, PairPotential};

/// Fraction of the window `[2T, 4T]` dropped at its inner end.
pub const FIT_INNER_TRIM: f64 = 0.1;
/// Radius ratio required of a certificate fit (the window spans 1.82).
pub const FIT_MIN_SPAN: f64 = 1.5;
/// Momentum standing in for the threshold when tabulating `φ(x, 0)`.
pub const THRESHOLD_MOMENTUM: f64 = 1e-3;
/// Remainder certificates use sources within this multiple of `T`, where
/// the far window `|y| ≥ 2.2 T` is asymptotic relative to the source.
pub const SOURCE_RADIUS_FACTOR: f64 = 1.0;
/// Explicit singular values are only computed up to this many columns.
const SVD_MAX_COLS: usize = 512;

/// Radii `[2T (1 + trim), 4T]` used by every asymptotic fit.
pub fn fit_window(t: f64) -> (f64, f64) {
    (2.0 * t * (1.0 + FIT_INNER_TRIM), 4.0 * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileReading {
    /// `φ_+(x, k)` as `k → 0`, normalized.
    Threshold,
    /// `φ_+(x, √λ)`: the label read as normal incidence.
    OnShell,
}

/// Agreement (|cosine|) of the empirical far-field `x`-profile with each reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileComparison {
    pub threshold: f64,
    pub on_shell: f64,
    pub best: ProfileReading,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RayKind {
    /// Remainder along the band, weighted by `(1+|z'|)^{1/2} / |v|`.
    Remainder,
    /// `|ψ_σ|` along a column ray.
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayFit {
    pub kind: RayKind,
    /// Far direction `σ = ±1` along the band.
    pub direction: i8,
    /// Ray angle in the global frame.
    pub angle: f64,
    /// Decay rate: `|g| ≈ C r^{-exponent}`.
    pub exponent: f64,
    pub constant: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub rays: Vec<RayFit>,
    /// Smallest remainder decay rate over both directions.
    pub b_exponent: f64,
    /// Smallest `ψ` decay rate over all column rays, if columns lie on rays.
    pub psi_exponent: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RankTwoSeparation {
    pub t: f64,
    pub lambda: C64,
    /// `Φ_±` on the rows.
    pub phi: [Vec<C64>; 2],
    /// `ψ_±` on the columns.
    pub psi: [Vec<C64>; 2],
    pub a_part: CMatrix,
    pub b_part: CMatrix,
    /// Leading singular values of `a_part` (empty when not computed).
    pub a_singular_values: Vec<f64>,
    pub profile: Option<ProfileComparison>,
    /// `None` for an identically vanishing product.
    pub certificate: Option<DecayCertificate>,
}

impl RankTwoSeparation {
    /// `σ_3 / σ_1` of the A-part (zero for rank ≤ 2 or a vanishing A-part).
    pub fn rank_ratio(&self) -> Option<f64> {
        let s = &self.a_singular_values;
        match s.first() {
            None => None,
            Some(&0.0) => Some(0.0),
            Some(&s1) => Some(s.get(2).copied().unwrap_or(0.0) / s1),
        }
    }
}

/// Splits a sampled product kernel into `A + B` with `A` of rank two and
/// certifies the decay of `B` and `ψ_±`.
pub fn rank_two_extract(product: &SampledProduct, t: f64, lambda: C64) -> Result<RankTwoSeparation, SeparationError> {
    let mut sep = rank_two_split(product, t, lambda)?;
    if sep.profile.is_some() {
        sep.certificate = Some(decay_certificate(product, &sep)?);
    }
    Ok(sep)
}

/// The split alone, without the decay certificate.
pub fn rank_two_split(product: &SampledProduct, t: f64, lambda: C64) -> Result<RankTwoSeparation, SeparationError> {
    let cut = CutoffFamily::new(t)?;
    let (n_rows, n_cols) = product.values.shape();
    let (w0, w1) = fit_window(t);
    let vanishing = product.values.iter().all(|v| *v == C64::new(0.0, 0.0));
    if vanishing {
        return Ok(RankTwoSeparation {
            t,
            lambda,
            phi: [vec![C64::new(0.0, 0.0); n_rows], vec![C64::new(0.0, 0.0); n_rows]],
            psi: [vec![C64::new(0.0, 0.0); n_cols], vec![C64::new(0.0, 0.0); n_cols]],
            a_part: CMatrix::zeros(n_rows, n_cols),
            b_part: product.values.clone(),
            a_singular_values: vec![0.0; n_cols.min(n_rows).min(3)],
            profile: None,
            certificate: None,
        });
    }
    let reach = product.rows_local.iter().map(|z| z.y.abs()).fold(0.0, f64::max);
    if reach + 0.5 < w1 {
        return Err(SeparationError::FitFailure(format!("band reaches |y| = {reach:.2}, the fit window needs {w1:.2}")));
    }

    let k = sqrt_upper(lambda);
    let shape = threshold_profile(&product.potential)?;
    let scale = product.rows_local.iter().map(|z| shape.eval(z.x).norm()).fold(0.0, f64::max);
    let mut phi = [vec![C64::new(0.0, 0.0); n_rows], vec![C64::new(0.0, 0.0); n_rows]];
    let mut psi = [vec![C64::new(0.0, 0.0); n_cols], vec![C64::new(0.0, 0.0); n_cols]];
    let mut a_part = CMatrix::zeros(n_rows, n_cols);
    for (s, sigma) in [1.0f64, -1.0].into_iter().enumerate() {
        for (r, z) in product.rows_local.iter().enumerate() {
            let chi = cut.chi_plus(sigma * z.y);
            if chi > 0.0 {
                let y = z.y.abs();
                phi[s][r] = product.row_potential[r] * shape.eval(z.x) / scale * chi * (C64::i() * k * y).exp() / y.sqrt();
            }
        }
        let window: Vec<usize> = (0..n_rows)
            .filter(|&r| {
                let y = sigma * product.rows_local[r].y;
                y >= w0 && y <= w1
            })
            .collect();
        let norm: f64 = window.iter().map(|&r| phi[s][r].norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(SeparationError::FitFailure("far window carries no profile".into()));
        }
        for c in 0..n_cols {
            let dot: C64 = window.iter().map(|&r| phi[s][r].conj() * product.values[(r, c)]).sum();
            psi[s][c] = dot / norm;
        }
        for r in 0..n_rows {
            if phi[s][r] != C64::new(0.0, 0.0) {
                for c in 0..n_cols {
                    a_part[(r, c)] += phi[s][r] * psi[s][c];
                }
            }
        }
    }
    let b_part = &product.values - &a_part;
    let a_singular_values = if n_cols <= SVD_MAX_COLS {
        let mut sv: Vec<f64> = a_part.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv.truncate(3);
        sv
    } else {
        Vec::new()
    };
    let profile = compare_profiles(product, lambda, t, &shape)?;
    Ok(RankTwoSeparation { t, lambda, phi, psi, a_part, b_part, a_singular_values, profile, certificate: None })
}

/// Threshold profile `φ_+(x, k → 0)` (unnormalized).
struct Profile {
    table: Option<JostTable>,
}

impl Profile {
    fn eval(&self, x: f64) -> C64 {
        self.table.as_ref().map_or(C64::new(1.0, 0.0), |t| t.phi_plus(x))
    }
}

fn threshold_profile(v: &PairPotential) -> Result<Profile, SeparationError> {
    if v.is_zero() {
        return Ok(Profile { table: None });
    }
    let table = JostTable::new(v, C64::new(THRESHOLD_MOMENTUM, 0.0)).map_err(|e| SeparationError::InvalidInput(e.to_string()))?;
    Ok(Profile { table: Some(table) })
}

fn key(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

/// Leading left singular vector over the `x` nodes of the scaled far-window data,
/// compared with both readings of the profile.
fn compare_profiles(
    product: &SampledProduct,
    lambda: C64,
    t: f64,
    shape: &Profile,
) -> Result<Option<ProfileComparison>, SeparationError> {
    let (w0, w1) = fit_window(t);
    let k = sqrt_upper(lambda);
    let mut xs: BTreeMap<i64, usize> = BTreeMap::new();
    let mut ys: BTreeMap<i64, usize> = BTreeMap::new();
    for (r, z) in product.rows_local.iter().enumerate() {
        let y = z.y.abs();
        if y >= w0 && y <= w1 && product.row_potential[r] != 0.0 {
            let nx = xs.len();
            xs.entry(key(z.x)).or_insert(nx);
            let ny = ys.len();
            ys.entry(key(z.y)).or_insert(ny);
        }
    }
    if xs.len() < 2 {
        return Ok(None);
    }
    let n_cols = product.values.ncols();
    let mut m = DMatrix::<C64>::zeros(xs.len(), ys.len() * n_cols);
    for (r, z) in product.rows_local.iter().enumerate() {
        let (Some(&i), Some(&j)) = (xs.get(&key(z.x)), ys.get(&key(z.y))) else { continue };
        let y = z.y.abs();
        let scale = y.sqrt() * (-C64::i() * k * y).exp() / product.row_potential[r];
        for c in 0..n_cols {
            m[(i, j * n_cols + c)] = product.values[(r, c)] * scale;
        }
    }
    let gram = &m * m.adjoint();
    let eig = SymmetricEigen::new(gram);
    let lead = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    let e = eig.eigenvectors.column(lead).into_owned();
    let mut x_of = vec![0.0; xs.len()];
    for (r, z) in product.rows_local.iter().enumerate() {
        if let Some(&i) = xs.get(&key(z.x)) {
            x_of[i] = product.rows_local[r].x;
        }
    }
    let on_shell = if product.potential.is_zero() {
        None
    } else {
        Some(JostTable::new(&product.potential, k).map_err(|e| SeparationError::InvalidInput(e.to_string()))?)
    };
    let cosine = |f: &dyn Fn(f64) -> C64| {
        let q: Vec<C64> = x_of.iter().map(|&x| f(x)).collect();
        let dot: C64 = e.iter().zip(&q).map(|(a, b)| a.conj() * b).sum();
        let nq = q.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        dot.norm() / (e.norm() * nq)
    };
    let threshold = cosine(&|x| shape.eval(x));
    let on_shell = cosine(&|x| on_shell.as_ref().map_or(C64::new(1.0, 0.0), |t| t.phi_plus(x)));
    let best = if threshold >= on_shell { ProfileReading::Threshold } else { ProfileReading::OnShell };
    Ok(Some(ProfileComparison { threshold, on_shell, best }))
}

/// Non-increasing envelope `g̃(r) = max_{r' ≥ r} g(r')` of samples sorted by radius:
/// a power law fitted to it is an upper bound of the form `C r^{-γ}`.
pub fn upper_envelope(mut samples: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut run = 0.0f64;
    for s in samples.iter_mut().rev() {
        run = run.max(s.1);
        s.1 = run;
    }
    samples
}

/// Envelope of `max_{x, z'} |B| (1+|z'|)^{1/2} / |v(x)|` per band level `σ y`
/// in the fit window, over the columns with `|z'| ≤ source_radius`.
pub fn remainder_levels(product: &SampledProduct, b_part: &CMatrix, t: f64, sigma: i8, source_radius: f64) -> Vec<(f64, f64)> {
    let (w0, w1) = fit_window(t);
    let n_cols = product.values.ncols();
    let cols: Vec<(usize, f64)> = (0..n_cols)
        .filter(|&c| product.cols[c].norm() <= source_radius)
        .map(|c| {
            let w = product.col_weights.as_ref().map_or(1.0, |w| w[c]);
            (c, (1.0 + product.cols[c].norm()).sqrt() / w)
        })
        .collect();
    let mut levels: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for (r, z) in product.rows_local.iter().enumerate() {
        let y = sigma as f64 * z.y;
        let v = product.row_potential[r].abs();
        if y < w0 || y > w1 || v == 0.0 {
            continue;
        }
        let g = cols.iter().map(|&(c, wc)| b_part[(r, c)].norm() * wc).fold(0.0, f64::max) / v;
        let e = levels.entry(key(y)).or_insert((y, 0.0));
        e.1 = e.1.max(g);
    }
    upper_envelope(levels.into_values().collect())
}

/// `(r, |ψ_σ|)` along column ray `a` inside the fit window.
pub fn psi_ray(product: &SampledProduct, sep: &RankTwoSeparation, sigma: i8, a: usize) -> Vec<(f64, f64)> {
    let (w0, w1) = fit_window(sep.t);
    let s = if sigma > 0 { 0 } else { 1 };
    let samples = match &product.col_rays {
        None => Vec::new(),
        Some((_, radii)) => radii
            .iter()
            .enumerate()
            .filter(|(_, &r)| r >= w0 && r <= w1)
            .map(|(m, &r)| (r, sep.psi[s][a * radii.len() + m].norm()))
            .collect(),
    };
    upper_envelope(samples)
}

/// Power-law fits of the remainder along both band directions and of `|ψ_±|`
/// along every column ray.
pub fn decay_certificate(product: &SampledProduct, sep: &RankTwoSeparation) -> Result<DecayCertificate, SeparationError> {
    let mut rays = Vec::new();
    for sigma in [1i8, -1] {
        let levels = remainder_levels(product, &sep.b_part, sep.t, sigma, SOURCE_RADIUS_FACTOR * sep.t);
        let fit = power_law_fit(&levels, FIT_MIN_SPAN)?;
        let dir = change_pair(PlanePoint::new(0.0, sigma as f64), product.pair(), 0);
        rays.push(RayFit {
            kind: RayKind::Remainder,
            direction: sigma,
            angle: dir.y.atan2(dir.x),
            exponent: -fit.exponent,
            constant: fit.constant,
            r2: fit.r2,
        });
    }
    let b_exponent = rays.iter().map(|r| r.exponent).fold(f64::INFINITY, f64::min);
    let mut psi_exponent = None;
    if let Some((angles, _)) = &product.col_rays {
        let mut worst = f64::INFINITY;
        for sigma in [1i8, -1] {
            for (a, &angle) in angles.iter().enumerate() {
                let fit = power_law_fit(&psi_ray(product, sep, sigma, a), FIT_MIN_SPAN)?;
                worst = worst.min(-fit.exponent);
                rays.push(RayFit {
                    kind: RayKind::Psi,
                    direction: sigma,
                    angle,
                    exponent: -fit.exponent,
                    constant: fit.constant,
                    r2: fit.r2,
                });
            }
        }
        psi_exponent = Some(worst);
    }
    Ok(DecayCertificate { rays, b_exponent, psi_exponent })
}

//! Function-space diagnostics: a discrete weighted Hölder norm, dyadic
//! `L_q` tables of Fourier transforms, and power-law decay fits.

use rustfft::FftPlanner;
use serde::Serialize;

use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("exponents outside the admissible window: {0}")]
    WindowViolation(String),
    #[error("power-law fit failed: {0}")]
    FitFailure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Samples of a function on a tensor grid; `values[j * xs.len() + i] = f(xs[i], ys[j])`.
#[derive(Debug, Clone)]
pub struct SampledField {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<C64>,
}

impl SampledField {
    pub fn from_fn<F: Fn(f64, f64) -> C64>(xs: Vec<f64>, ys: Vec<f64>, f: F) -> Self {
        let mut values = Vec::with_capacity(xs.len() * ys.len());
        for &y in &ys {
            for &x in &xs {
                values.push(f(x, y));
            }
        }
        SampledField { xs, ys, values }
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[j * self.xs.len() + i]
    }
}

/// Uniform axis of `n` points on `[a, b]`.
pub fn uniform_axis(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|m| a + (b - a) * m as f64 / (n - 1) as f64).collect()
}

/// Index offsets `(di, dj)` with `max(|di|, |dj|) <= reach`, excluding zero.
pub fn default_offsets(reach: isize) -> Vec<(isize, isize)> {
    let mut out = Vec::new();
    for dj in -reach..=reach {
        for di in -reach..=reach {
            if (di, dj) != (0, 0) {
                out.push((di, dj));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderWitness {
    pub mu: f64,
    pub theta: f64,
    pub norm_value: f64,
    /// Weighted sup-norm part alone.
    pub sup_part: f64,
    pub xi: [f64; 2],
    pub eta: [f64; 2],
}

fn holder_term(w: f64, f0: C64, f1: C64, eta_len: f64, mu: f64) -> f64 {
    w * (f0.norm() + (f1 - f0).norm() / eta_len.powf(mu))
}

/// `sup (1 + |ξ|^{1+θ}) (|f(ξ)| + |f(ξ+η) - f(ξ)| / |η|^μ)` over grid points `ξ`
/// and offsets `η` landing on the grid.  A lower bound of the continuous norm.
pub fn holder_norm(f: &SampledField, mu: f64, theta: f64, offsets: &[(isize, isize)]) -> Result<HolderWitness, AnalysisError> {
    if !(mu > 0.0 && mu < 1.0 && theta > 0.0 && theta < 1.0) {
        return Err(AnalysisError::WindowViolation(format!("μ = {mu}, θ = {theta} must lie in (0, 1)")));
    }
    let (nx, ny) = (f.xs.len(), f.ys.len());
    if nx == 0 || ny == 0 || f.values.len() != nx * ny {
        return Err(AnalysisError::InvalidInput("sample grid shape mismatch".into()));
    }
    let min_step = f.xs.windows(2).chain(f.ys.windows(2)).map(|w| (w[1] - w[0]).abs()).fold(f64::INFINITY, f64::min);
    let max_abs = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let weight = |i: usize, j: usize| 1.0 + f.xs[i].hypot(f.ys[j]).powf(1.0 + theta);

    let mut sup_part = 0.0f64;
    let mut order: Vec<(f64, usize, usize)> = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let w = weight(i, j);
            let own = w * f.at(i, j).norm();
            sup_part = sup_part.max(own);
            let bound = if min_step.is_finite() { w * (f.at(i, j).norm() + 2.0 * max_abs / min_step.powf(mu)) } else { own };
            order.push((bound, i, j));
        }
    }
    order.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut best = HolderWitness { mu, theta, norm_value: 0.0, sup_part, xi: [0.0; 2], eta: [0.0; 2] };
    for &(bound, i, j) in &order {
        if bound <= best.norm_value {
            break;
        }
        let w = weight(i, j);
        let f0 = f.at(i, j);
        if w * f0.norm() > best.norm_value {
            best.norm_value = w * f0.norm();
            best.xi = [f.xs[i], f.ys[j]];
            best.eta = [0.0; 2];
        }
        for &(di, dj) in offsets {
            let (ii, jj) = (i as isize + di, j as isize + dj);
            if ii < 0 || jj < 0 || ii >= nx as isize || jj >= ny as isize {
                continue;
            }
            let (ii, jj) = (ii as usize, jj as usize);
            let eta = [f.xs[ii] - f.xs[i], f.ys[jj] - f.ys[j]];
            let len = eta[0].hypot(eta[1]);
            let val = holder_term(w, f0, f.at(ii, jj), len, mu);
            if val > best.norm_value {
                best.norm_value = val;
                best.xi = [f.xs[i], f.ys[j]];
                best.eta = eta;
            }
        }
    }
    Ok(best)
}

/// Directional threshold `p / (p + pμ - 1)`.
pub fn q_threshold_directional(p: f64, mu: f64) -> f64 {
    p / (p + p * mu - 1.0)
}

/// Full-space threshold `pn / (pn + μp - n)`.
pub fn q_threshold_full(p: f64, mu: f64, n: usize) -> f64 {
    let n = n as f64;
    p * n / (p * n + mu * p - n)
}

/// Checks the exponent window of the `L_q` statement for dimension `n`.
pub fn check_window(p: f64, mu: f64, n: usize) -> Result<(), AnalysisError> {
    let nf = n as f64;
    let (p_lo, mu_lo) = match n {
        0 => return Err(AnalysisError::WindowViolation("dimension must be positive".into())),
        1 => (1.0, 1.0 / p - 0.5),
        _ => ((2.0 * nf / (2.0 + nf)).min(1.0), nf * (1.0 / p - 0.5)),
    };
    if !(p > p_lo && p < 2.0) {
        return Err(AnalysisError::WindowViolation(format!("p = {p} outside ({p_lo}, 2)")));
    }
    if !(mu > mu_lo && mu < 1.0) {
        return Err(AnalysisError::WindowViolation(format!("μ = {mu} outside ({mu_lo}, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Growing,
}

/// Increments must shrink at least by this mean factor for a `Bounded` verdict.
pub const GEOMETRIC_RATIO: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicTable {
    pub label: String,
    /// `2^m`, `m = 1..=M`.
    pub radii: Vec<f64>,
    /// `∫_{1<|ξ|<2^m} |f̂|^q`.
    pub partial: Vec<f64>,
    pub increments: Vec<f64>,
    /// Geometric mean of consecutive increment ratios over the upper half of the table.
    pub ratio: f64,
    pub verdict: Verdict,
}

impl DyadicTable {
    fn from_partial(label: String, radii: Vec<f64>, partial: Vec<f64>) -> Self {
        let mut increments = Vec::with_capacity(partial.len());
        let mut prev = 0.0;
        for &v in &partial {
            increments.push(v - prev);
            prev = v;
        }
        let m = increments.len();
        let start = (m / 2).max(1);
        let logs: Vec<f64> = (start..m).map(|i| (increments[i].max(1e-300) / increments[i - 1].max(1e-300)).ln()).collect();
        let ratio = if logs.is_empty() { f64::NAN } else { (logs.iter().sum::<f64>() / logs.len() as f64).exp() };
        let verdict = if ratio < GEOMETRIC_RATIO { Verdict::Bounded } else { Verdict::Growing };
        DyadicTable { label, radii, partial, increments, ratio, verdict }
    }
}

/// Uniformly sampled input of the Fourier check: `n_side^n` values with spacing `h`,
/// row-major for `n = 2`.
#[derive(Debug, Clone)]
pub struct UniformSamples {
    pub n: usize,
    pub n_side: usize,
    pub h: f64,
    pub values: Vec<f64>,
}

impl UniformSamples {
    /// Samples `f` on `[-n_side h / 2, n_side h / 2)^n`.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(n: usize, n_side: usize, h: f64, f: F) -> Self {
        let x = |m: usize| (m as f64 - (n_side / 2) as f64) * h;
        let values = match n {
            1 => (0..n_side).map(|i| f(&[x(i)])).collect(),
            _ => {
                let mut v = Vec::with_capacity(n_side * n_side);
                for j in 0..n_side {
                    for i in 0..n_side {
                        v.push(f(&[x(i), x(j)]));
                    }
                }
                v
            }
        };
        UniformSamples { n, n_side, h, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LqReport {
    pub p: f64,
    pub mu: f64,
    pub n: usize,
    pub q: f64,
    pub q_threshold_directional: f64,
    pub q_threshold_full: Option<f64>,
    pub tables: Vec<DyadicTable>,
    /// Full-space table for `n >= 2`, the first direction for `n = 1`.
    pub verdict: Verdict,
}

/// `|f̂|` on the FFT frequency grid (continuous-transform scaling).
fn fft_magnitudes(s: &UniformSamples) -> Vec<f64> {
    let n = s.n_side;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut data: Vec<C64> = s.values.iter().map(|&v| C64::new(v, 0.0)).collect();
    if s.n == 1 {
        fft.process(&mut data);
        return data.iter().map(|v| v.norm() * s.h).collect();
    }
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![C64::default(); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = data[j * n + i];
        }
        fft.process(&mut col);
        for j in 0..n {
            data[j * n + i] = col[j];
        }
    }
    data.iter().map(|v| v.norm() * s.h * s.h).collect()
}

fn freq(m: usize, n: usize, h: f64) -> f64 {
    let k = if m < n.div_ceil(2) { m as f64 } else { m as f64 - n as f64 };
    2.0 * std::f64::consts::PI * k / (n as f64 * h)
}

/// Bilinear interpolation of the periodic magnitude grid at `(ξ1, ξ2)`.
fn interp_2d(mag: &[f64], n: usize, h: f64, xi: [f64; 2]) -> f64 {
    let dxi = 2.0 * std::f64::consts::PI / (n as f64 * h);
    let pos = |v: f64| {
        let t = v / dxi;
        let f = t.floor();
        (f as i64, t - f)
    };
    let wrap = |k: i64| k.rem_euclid(n as i64) as usize;
    let ((i0, ti), (j0, tj)) = (pos(xi[0]), pos(xi[1]));
    let g = |i: i64, j: i64| mag[wrap(j) * n + wrap(i)];
    (1.0 - ti) * (1.0 - tj) * g(i0, j0)
        + ti * (1.0 - tj) * g(i0 + 1, j0)
        + (1.0 - ti) * tj * g(i0, j0 + 1)
        + ti * tj * g(i0 + 1, j0 + 1)
}

/// Dyadic `L_q` tables of `f̂` along the given directions (angles, for `n = 2`)
/// and, for `n = 2`, over the plane.
pub fn lq_fourier_check(f: &UniformSamples, p: f64, mu: f64, q: f64, directions: &[f64]) -> Result<LqReport, AnalysisError> {
    let n = f.n;
    check_window(p, mu, n)?;
    if n > 2 {
        return Err(AnalysisError::InvalidInput("only n = 1, 2 are sampled".into()));
    }
    if f.values.len() != f.n_side.pow(n as u32) || !f.n_side.is_power_of_two() {
        return Err(AnalysisError::InvalidInput("samples must be a power-of-two grid".into()));
    }
    let ns = f.n_side;
    let xi_max = std::f64::consts::PI / f.h;
    let m_max = (0.5 * xi_max).log2().floor() as i32;
    if m_max < 3 {
        return Err(AnalysisError::InvalidInput("grid too coarse for a dyadic table".into()));
    }
    let radii: Vec<f64> = (1..=m_max).map(|m| 2f64.powi(m)).collect();
    let mag = fft_magnitudes(f);
    let dxi = 2.0 * std::f64::consts::PI / (ns as f64 * f.h);
    let mut tables = Vec::new();

    let line_table = |label: String, along: &dyn Fn(f64) -> f64| {
        // Riemann sums on the FFT spacing, both signs of t
        let mut partial = Vec::with_capacity(radii.len());
        let steps = (radii[radii.len() - 1] / dxi).ceil() as usize;
        let mut acc = 0.0;
        let mut ri = 0;
        for s in 1..=steps {
            let t = s as f64 * dxi;
            while ri < radii.len() && t > radii[ri] {
                partial.push(acc);
                ri += 1;
            }
            if t > 1.0 {
                acc += (along(t).powf(q) + along(-t).powf(q)) * dxi;
            }
        }
        while partial.len() < radii.len() {
            partial.push(acc);
        }
        DyadicTable::from_partial(label, radii.clone(), partial)
    };

    if n == 1 {
        let idx = |t: f64| {
            let k = (t / dxi).round() as i64;
            mag[k.rem_euclid(ns as i64) as usize]
        };
        tables.push(line_table("direction 0".into(), &idx));
    } else {
        for &ang in directions {
            let (c, s) = (ang.cos(), ang.sin());
            let along = |t: f64| interp_2d(&mag, ns, f.h, [t * c, t * s]);
            tables.push(line_table(format!("direction {ang:.6}"), &along));
        }
        let mut partial = vec![0.0; radii.len()];
        for j in 0..ns {
            for i in 0..ns {
                let r = freq(i, ns, f.h).hypot(freq(j, ns, f.h));
                if r <= 1.0 {
                    continue;
                }
                let v = mag[j * ns + i].powf(q) * dxi * dxi;
                for (m, &rad) in radii.iter().enumerate() {
                    if r < rad {
                        partial[m] += v;
                    }
                }
            }
        }
        tables.push(DyadicTable::from_partial("full".into(), radii.clone(), partial));
    }
    let verdict = tables.last().map(|t| t.verdict).unwrap_or(Verdict::Growing);
    let verdict = if n == 1 { tables[0].verdict } else { verdict };
    Ok(LqReport {
        p,
        mu,
        n,
        q,
        q_threshold_directional: q_threshold_directional(p, mu),
        q_threshold_full: (n >= 2).then(|| q_threshold_full(p, mu, n)),
        tables,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Slope of `ln |g|` against `ln r`.
    pub exponent: f64,
    pub constant: f64,
    pub r2: f64,
    /// Slope magnitude above 3: not a plausible algebraic law.
    pub steep: bool,
}

pub const MIN_FIT_POINTS: usize = 8;
pub const DEFAULT_MIN_SPAN: f64 = 4.0;
pub const MIN_R2: f64 = 0.9;

/// Log-log least squares of `(r, |g|)` samples.
pub fn decay_fit(samples: &[(f64, f64)], min_span: f64) -> Result<DecayFit, AnalysisError> {
    let fit = power_law_fit(samples, min_span)?;
    if fit.r2 < MIN_R2 {
        return Err(AnalysisError::FitFailure(format!("R² = {:.3}", fit.r2)));
    }
    Ok(fit)
}

/// [`decay_fit`] without the goodness-of-fit gate, for envelopes used as
/// upper bounds (plateaus are legitimate there).
pub fn power_law_fit(samples: &[(f64, f64)], min_span: f64) -> Result<DecayFit, AnalysisError> {
    if samples.len() < MIN_FIT_POINTS {
        return Err(AnalysisError::FitFailure(format!("{} radii, need {MIN_FIT_POINTS}", samples.len())));
    }
    if samples.iter().any(|&(r, g)| !(r > 0.0 && g > 0.0 && r.is_finite() && g.is_finite())) {
        return Err(AnalysisError::FitFailure("radii and magnitudes must be positive".into()));
    }
    let rmin = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let rmax = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if rmax / rmin < min_span {
        return Err(AnalysisError::FitFailure(format!("radius span {:.3} below {min_span}", rmax / rmin)));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(r, g)| (r.ln(), g.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(DecayFit { exponent: slope, constant: intercept.exp(), r2, steep: slope.abs() > 3.0 })
}

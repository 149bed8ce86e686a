//! Hankel function of the first kind, order zero, for arguments in the
//! closed upper half plane.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::linalg::C64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this modulus the power series is used.
pub const SERIES_RADIUS: f64 = 2.0;

/// Above this modulus the asymptotic expansion is used.
pub const ASYMPTOTIC_RADIUS: f64 = 14.0;

/// `H_0^{(1)}(w)` for `Im w >= 0`, `w != 0`.
pub fn hankel1_0(w: C64) -> C64 {
    debug_assert!(w.im >= -1e-12, "argument below the real axis: {w}");
    let m = w.norm();
    if m <= SERIES_RADIUS {
        hankel1_0_series(w)
    } else if m < ASYMPTOTIC_RADIUS {
        hankel1_0_integral(w)
    } else {
        hankel1_0_asymptotic(w)
    }
}

/// Ascending series `J0 + i Y0`.
pub fn hankel1_0_series(w: C64) -> C64 {
    let q = -(w * w) / 4.0;
    let mut term = C64::new(1.0, 0.0);
    let mut j0 = term;
    // sum_{k>=1} (-1)^{k+1} H_k (w^2/4)^k / (k!)^2 == -sum H_k q^k/(k!)^2
    let mut tail = C64::new(0.0, 0.0);
    let mut harmonic = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        j0 += term;
        tail -= term * harmonic;
        if term.norm() < 1e-18 * j0.norm().max(1e-300) {
            break;
        }
    }
    let y0 = (2.0 / PI) * (((w / 2.0).ln() + EULER_GAMMA) * j0 + tail);
    j0 + C64::i() * y0
}

/// Steepest-descent integral
/// `H0(w) = sqrt(2/(pi w)) e^{i(w - pi/4)} (2/sqrt(pi)) int_0^inf e^{-s^2} (1 + i s^2/(2w))^{-1/2} ds`,
/// evaluated with the trapezoidal rule, which is spectrally accurate here.
pub fn hankel1_0_integral(w: C64) -> C64 {
    const H: f64 = 0.2;
    const STEPS: usize = 34;
    static TABLE: OnceLock<[(f64, f64); STEPS]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        std::array::from_fn(|k| {
            let s = (k + 1) as f64 * H;
            (s * s, (-s * s).exp())
        })
    });
    let c = C64::i() / (2.0 * w);
    let mut acc = C64::new(0.5, 0.0);
    for &(s2, g) in table {
        acc += g / (C64::new(1.0, 0.0) + c * s2).sqrt();
    }
    let integral = acc * (H * 2.0 / PI.sqrt());
    (2.0 / (PI * w)).sqrt() * (C64::i() * (w - PI / 4.0)).exp() * integral
}

/// Hankel asymptotic expansion, summed until the terms stop shrinking.
pub fn hankel1_0_asymptotic(w: C64) -> C64 {
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let step = -C64::i() / (8.0 * w);
    for k in 1..60 {
        let kf = k as f64;
        let next = term * step * ((2.0 * kf - 1.0).powi(2) / kf);
        if next.norm() >= term.norm() {
            break;
        }
        term = next;
        sum += term;
        if term.norm() < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * w)).sqrt() * (C64::i() * (w - PI / 4.0)).exp() * sum
}

/// `H0(k r)` tabulated along `r` for a fixed `k`: outside the series disc the
/// smooth envelope `H0(k r) e^{-i k r} √r` is interpolated piecewise by
/// Chebyshev polynomials on geometrically growing panels.
#[derive(Debug, Clone)]
pub struct HankelTable {
    k: C64,
    r_split: f64,
    r_max: f64,
    breaks: Vec<f64>,
    coeffs: Vec<[C64; CHEB_DEG]>,
}

const CHEB_DEG: usize = 18;
const PANEL_RATIO: f64 = 1.5;

impl HankelTable {
    pub fn new(k: C64, r_max: f64) -> Self {
        let r_split = SERIES_RADIUS / k.norm();
        let mut breaks = vec![r_split];
        while *breaks.last().unwrap() < r_max {
            let b = breaks.last().unwrap() * PANEL_RATIO;
            breaks.push(b);
        }
        let nodes: Vec<f64> = (0..CHEB_DEG).map(|j| (PI * (j as f64 + 0.5) / CHEB_DEG as f64).cos()).collect();
        let coeffs = breaks
            .windows(2)
            .map(|ab| {
                let (mid, half) = (0.5 * (ab[0] + ab[1]), 0.5 * (ab[1] - ab[0]));
                let vals: Vec<C64> = nodes
                    .iter()
                    .map(|t| {
                        let r = mid + half * t;
                        hankel1_0(k * r) * (-C64::i() * k * r).exp() * r.sqrt()
                    })
                    .collect();
                std::array::from_fn(|m| {
                    let mut c = C64::new(0.0, 0.0);
                    for (j, v) in vals.iter().enumerate() {
                        c += v * (PI * m as f64 * (j as f64 + 0.5) / CHEB_DEG as f64).cos();
                    }
                    c * (if m == 0 { 1.0 } else { 2.0 } / CHEB_DEG as f64)
                })
            })
            .collect();
        let r_max = *breaks.last().unwrap();
        HankelTable { k, r_split, r_max, breaks, coeffs }
    }

    pub fn k(&self) -> C64 {
        self.k
    }

    /// `H0(k r)` for `r > 0`.
    pub fn eval(&self, r: f64) -> C64 {
        if r <= self.r_split || r >= self.r_max {
            return hankel1_0(self.k * r);
        }
        let p = ((r / self.r_split).ln() / PANEL_RATIO.ln()) as usize;
        let p = p.min(self.coeffs.len() - 1);
        let (a, b) = (self.breaks[p], self.breaks[p + 1]);
        let t = (2.0 * r - a - b) / (b - a);
        // Clenshaw
        let c = &self.coeffs[p];
        let (mut b1, mut b2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for m in (1..CHEB_DEG).rev() {
            let b0 = c[m] + b1 * (2.0 * t) - b2;
            b2 = b1;
            b1 = b0;
        }
        let env = c[0] + b1 * t - b2;
        env * (C64::i() * self.k * r).exp() / r.sqrt()
    }
}

//! One-dimensional pair problem: Jost solutions, transmission coefficient,
//! Wronskian and the resolvent kernel of `-d²/dx² + v`.
//!
//! `φ_+ = s(k) e^{-ikx}` left of the support, `φ_- = s(k) e^{ikx}` right of it,
//! both normalized so the incoming plane wave has unit amplitude.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OneBodyError {
    #[error("integrator failure: {0}")]
    IntegratorFailure(String),
    #[error("Wronskian not constant: relative spread {spread:.3e}")]
    NonConstantWronskian { spread: f64 },
    #[error("momentum {k} inside the threshold guard band |k| < {guard:e}")]
    SingularMomentum { k: C64, guard: f64 },
    #[error("momentum {0} has negative imaginary part")]
    WrongHalfPlane(C64),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
}

/// Guard band around the threshold `k = 0`.
pub const K_GUARD: f64 = 1e-6;

/// Default RK4 steps per support radius.
pub const STEPS_PER_RADIUS: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `v ≡ 0`.
    Zero,
    /// Even step profile: `levels[m]` holds on `edges[m-1] <= |x| < edges[m]`
    /// (with `edges[-1] = 0`); the last edge is the support radius.
    PiecewiseConstant { edges: Vec<f64>, levels: Vec<f64> },
    /// `height · exp(-x²/(2 width²))`, cut to zero outside the support.
    TruncatedGaussian { height: f64, width: f64 },
    /// Linear interpolation in `|x|` over samples `(x_m, v_m)`, `x_m >= 0` increasing.
    Tabulated { xs: Vec<f64>, vs: Vec<f64> },
}

/// Even, non-negative pair interaction with compact support `[-a, a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPotential {
    pub kind: PotentialKind,
    pub support_radius: f64,
}

impl PairPotential {
    pub fn zero() -> Self {
        PairPotential { kind: PotentialKind::Zero, support_radius: 1.0 }
    }

    /// Square barrier of height `height` on `[-a, a]`.
    pub fn square(height: f64, a: f64) -> Self {
        PairPotential { kind: PotentialKind::PiecewiseConstant { edges: vec![a], levels: vec![height] }, support_radius: a }
    }

    pub fn steps(edges: Vec<f64>, levels: Vec<f64>) -> Result<Self, OneBodyError> {
        let a = *edges.last().ok_or_else(|| OneBodyError::InvalidPotential("no edges".into()))?;
        let p = PairPotential { kind: PotentialKind::PiecewiseConstant { edges, levels }, support_radius: a };
        p.validate()?;
        Ok(p)
    }

    pub fn truncated_gaussian(height: f64, width: f64, a: f64) -> Self {
        PairPotential { kind: PotentialKind::TruncatedGaussian { height, width }, support_radius: a }
    }

    /// Tabulated profile from samples of `v` on `x >= 0`.
    pub fn tabulated(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self, OneBodyError> {
        let a = *xs.last().ok_or_else(|| OneBodyError::InvalidPotential("empty table".into()))?;
        let p = PairPotential { kind: PotentialKind::Tabulated { xs, vs }, support_radius: a };
        p.validate()?;
        Ok(p)
    }

    /// Loads a two-column `x v` text table.  Rows with `x < 0` must mirror rows
    /// with `x > 0`; only the `x >= 0` half is kept.
    pub fn load_tabulated(path: &Path) -> Result<Self, OneBodyError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| OneBodyError::InvalidPotential(format!("{}: {e}", path.display())))?;
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
            let parse = |s: Option<&str>| -> Result<f64, OneBodyError> {
                s.ok_or_else(|| OneBodyError::InvalidPotential(format!("line {}: missing column", ln + 1)))?
                    .parse::<f64>()
                    .map_err(|e| OneBodyError::InvalidPotential(format!("line {}: {e}", ln + 1)))
            };
            let x = parse(it.next())?;
            let v = parse(it.next())?;
            rows.push((x, v));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let positive: Vec<(f64, f64)> = rows.iter().cloned().filter(|r| r.0 >= 0.0).collect();
        let p = PairPotential::tabulated(positive.iter().map(|r| r.0).collect(), positive.iter().map(|r| r.1).collect())?;
        for &(x, v) in rows.iter().filter(|r| r.0 < 0.0) {
            if (p.eval(x) - v).abs() > 1e-12 * v.abs().max(1.0) {
                return Err(OneBodyError::InvalidPotential(format!("table is not even at x = {x}")));
            }
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), OneBodyError> {
        let bad = |m: &str| Err(OneBodyError::InvalidPotential(m.to_string()));
        if !(self.support_radius > 0.0 && self.support_radius.is_finite()) {
            return bad("support radius must be positive");
        }
        match &self.kind {
            PotentialKind::Zero => {}
            PotentialKind::PiecewiseConstant { edges, levels } => {
                if edges.len() != levels.len() || edges.is_empty() {
                    return bad("edges and levels must have equal non-zero length");
                }
                if edges.windows(2).any(|w| w[1] <= w[0]) || edges[0] <= 0.0 {
                    return bad("edges must be positive and increasing");
                }
                if (edges[edges.len() - 1] - self.support_radius).abs() > 1e-14 {
                    return bad("last edge must equal the support radius");
                }
                if levels.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                    return bad("levels must be finite and non-negative");
                }
            }
            PotentialKind::TruncatedGaussian { height, width } => {
                if !(*height >= 0.0 && *width > 0.0 && height.is_finite()) {
                    return bad("gaussian needs height >= 0 and width > 0");
                }
            }
            PotentialKind::Tabulated { xs, vs } => {
                if xs.len() != vs.len() || xs.len() < 2 {
                    return bad("table needs at least two rows");
                }
                if xs[0] != 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("table must start at x = 0 and increase");
                }
                if vs.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                    return bad("table values must be finite and non-negative");
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PotentialKind::Zero => true,
            PotentialKind::PiecewiseConstant { levels, .. } => levels.iter().all(|&v| v == 0.0),
            PotentialKind::TruncatedGaussian { height, .. } => *height == 0.0,
            PotentialKind::Tabulated { vs, .. } => vs.iter().all(|&v| v == 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax > self.support_radius {
            return 0.0;
        }
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::PiecewiseConstant { edges, levels } => {
                let m = edges.iter().position(|&e| ax < e).unwrap_or(edges.len() - 1);
                levels[m]
            }
            PotentialKind::TruncatedGaussian { height, width } => height * (-ax * ax / (2.0 * width * width)).exp(),
            PotentialKind::Tabulated { xs, vs } => {
                let m = xs.partition_point(|&t| t <= ax).clamp(1, xs.len() - 1);
                let t = (ax - xs[m - 1]) / (xs[m] - xs[m - 1]);
                vs[m - 1] + t * (vs[m] - vs[m - 1])
            }
        }
    }

    /// Largest value of the potential (sampled for tables and gaussians).
    pub fn max_value(&self) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::PiecewiseConstant { levels, .. } => levels.iter().cloned().fold(0.0, f64::max),
            PotentialKind::TruncatedGaussian { height, .. } => *height,
            PotentialKind::Tabulated { vs, .. } => vs.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Points in `[-a, a]` where `v` or its derivative may jump, sorted, including `±a`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let a = self.support_radius;
        let mut pts = vec![-a, a];
        let inner: Vec<f64> = match &self.kind {
            PotentialKind::PiecewiseConstant { edges, .. } => edges[..edges.len() - 1].to_vec(),
            PotentialKind::Tabulated { xs, .. } => xs[1..xs.len() - 1].to_vec(),
            _ => Vec::new(),
        };
        for e in inner {
            pts.push(e);
            pts.push(-e);
        }
        if matches!(self.kind, PotentialKind::Tabulated { .. }) {
            pts.push(0.0);
        }
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        pts
    }

    /// Same profile scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let kind = match &self.kind {
            PotentialKind::Zero => PotentialKind::Zero,
            PotentialKind::PiecewiseConstant { edges, levels } => {
                PotentialKind::PiecewiseConstant { edges: edges.clone(), levels: levels.iter().map(|v| v * factor).collect() }
            }
            PotentialKind::TruncatedGaussian { height, width } => {
                PotentialKind::TruncatedGaussian { height: height * factor, width: *width }
            }
            PotentialKind::Tabulated { xs, vs } => {
                PotentialKind::Tabulated { xs: xs.clone(), vs: vs.iter().map(|v| v * factor).collect() }
            }
        };
        PairPotential { kind, support_radius: self.support_radius }
    }
}

/// `(φ, φ')`
pub type State = [C64; 2];

fn check_k(k: C64) -> Result<(), OneBodyError> {
    if k.norm() < K_GUARD {
        return Err(OneBodyError::SingularMomentum { k, guard: K_GUARD });
    }
    if k.im < -1e-14 {
        return Err(OneBodyError::WrongHalfPlane(k));
    }
    Ok(())
}

/// Exact propagation of `φ'' = -k² φ` over a distance `d`.
fn free_step(k: C64, d: f64, s: State) -> State {
    let (c, sn) = ((k * d).cos(), (k * d).sin());
    let sinc = if k.norm() == 0.0 { C64::new(d, 0.0) } else { sn / k };
    [c * s[0] + sinc * s[1], -k * sn * s[0] + c * s[1]]
}

/// `1 / A` for the incoming coefficient `A`; exactly one without a potential.
fn transmission_from(v: &PairPotential, incoming: C64) -> C64 {
    if v.is_zero() {
        C64::new(1.0, 0.0)
    } else {
        incoming.inv()
    }
}

/// Fixed-step RK4 integrator for `φ'' = (v - k²) φ`; exact when `v ≡ 0`.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    v: &'a PairPotential,
    breaks: Vec<f64>,
    h: f64,
}

impl<'a> Propagator<'a> {
    pub fn new(v: &'a PairPotential) -> Self {
        Self::with_step(v, v.support_radius / STEPS_PER_RADIUS as f64)
    }

    pub fn with_step(v: &'a PairPotential, h: f64) -> Self {
        Propagator { v, breaks: v.breakpoints(), h }
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    fn rk4(&self, k2: C64, x: f64, dx: f64, s: State) -> State {
        let f = |x: f64, s: State| -> State { [s[1], (self.v.eval(x) - k2) * s[0]] };
        // evaluate v strictly inside the step so jumps at the ends are never sampled
        let eps = 1e-13 * dx.abs().max(1e-300);
        let xa = x + eps * dx.signum();
        let xb = x + dx - eps * dx.signum();
        let k1 = f(xa, s);
        let k2v = f(x + 0.5 * dx, [s[0] + 0.5 * dx * k1[0], s[1] + 0.5 * dx * k1[1]]);
        let k3 = f(x + 0.5 * dx, [s[0] + 0.5 * dx * k2v[0], s[1] + 0.5 * dx * k2v[1]]);
        let k4 = f(xb, [s[0] + dx * k3[0], s[1] + dx * k3[1]]);
        [
            s[0] + dx / 6.0 * (k1[0] + 2.0 * k2v[0] + 2.0 * k3[0] + k4[0]),
            s[1] + dx / 6.0 * (k1[1] + 2.0 * k2v[1] + 2.0 * k3[1] + k4[1]),
        ]
    }

    /// Propagates a state from `x0` to `x1`, never stepping across a breakpoint.
    pub fn propagate(&self, k: C64, x0: f64, x1: f64, mut s: State) -> Result<State, OneBodyError> {
        if x0 == x1 {
            return Ok(s);
        }
        if self.v.is_zero() {
            return Ok(free_step(k, x1 - x0, s));
        }
        let k2 = k * k;
        let dir = (x1 - x0).signum();
        let mut stops: Vec<f64> = self.breaks.iter().cloned().filter(|&b| (b - x0) * dir > 0.0 && (x1 - b) * dir > 0.0).collect();
        stops.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));
        stops.push(x1);
        let mut x = x0;
        for stop in stops {
            let len = (stop - x).abs();
            let n = (len / self.h).ceil().max(1.0) as usize;
            let dx = (stop - x) / n as f64;
            if dx.abs() < 1e-300 && len > 0.0 {
                return Err(OneBodyError::IntegratorFailure("step size underflow".into()));
            }
            for m in 0..n {
                s = self.rk4(k2, x + m as f64 * dx, dx, s);
            }
            if !(s[0].re.is_finite() && s[0].im.is_finite() && s[1].re.is_finite() && s[1].im.is_finite()) {
                return Err(OneBodyError::IntegratorFailure(format!("non-finite state at x = {stop}")));
            }
            x = stop;
        }
        Ok(s)
    }
}

/// Per-momentum scattering data on a sample grid.
#[derive(Debug, Clone)]
pub struct JostData {
    pub k: C64,
    pub x_grid: Vec<f64>,
    pub phi_plus: Vec<C64>,
    pub dphi_plus: Vec<C64>,
    pub phi_minus: Vec<C64>,
    pub dphi_minus: Vec<C64>,
    pub s: C64,
    pub w: C64,
}

/// Values of a solution at the requested (arbitrary order) points, integrating
/// from `start` with initial state `init`; outside `[-a, a]` the caller supplies
/// the exact form through `outside`.
fn sample_solution<F>(
    prop: &Propagator,
    k: C64,
    start: f64,
    init: State,
    xs: &[f64],
    outside: F,
) -> Result<(Vec<C64>, Vec<C64>), OneBodyError>
where
    F: Fn(f64) -> Option<State>,
{
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let dir = if start < 0.0 { 1.0 } else { -1.0 };
    order.sort_by(|&i, &j| (xs[i] * dir).total_cmp(&(xs[j] * dir)));
    let mut phi = vec![C64::default(); xs.len()];
    let mut dphi = vec![C64::default(); xs.len()];
    let mut x = start;
    let mut s = init;
    for i in order {
        if let Some(st) = outside(xs[i]) {
            phi[i] = st[0];
            dphi[i] = st[1];
            continue;
        }
        s = prop.propagate(k, x, xs[i], s)?;
        x = xs[i];
        phi[i] = s[0];
        dphi[i] = s[1];
    }
    Ok((phi, dphi))
}

/// Coefficients `(A, B)` with `f = A e^{-ikx} + B e^{ikx}` matching state `s` at `x`.
fn decompose(k: C64, x: f64, s: State) -> (C64, C64) {
    let ik = C64::i() * k;
    let em = (ik * x).exp(); // e^{ikx}
    let a = 0.5 * (s[0] - s[1] / ik) * em;
    let b = 0.5 * (s[0] + s[1] / ik) / em;
    (a, b)
}

/// Unnormalized left solution `f = e^{-ikx}` for `x < -a`; returns the state at `+a`.
fn left_sweep(prop: &Propagator, v: &PairPotential, k: C64) -> Result<State, OneBodyError> {
    let a = v.support_radius;
    let ik = C64::i() * k;
    let f0 = (ik * a).exp();
    prop.propagate(k, -a, a, [f0, -ik * f0])
}

/// Transmission coefficient `s(k)`.
pub fn transmission(v: &PairPotential, k: C64) -> Result<C64, OneBodyError> {
    check_k(k)?;
    let prop = Propagator::new(v);
    let end = left_sweep(&prop, v, k)?;
    let (a_coef, _) = decompose(k, v.support_radius, end);
    Ok(transmission_from(v, a_coef))
}

fn jost_plus_with(prop: &Propagator, v: &PairPotential, k: C64, xs: &[f64]) -> Result<(C64, Vec<C64>, Vec<C64>), OneBodyError> {
    check_k(k)?;
    let a = v.support_radius;
    let ik = C64::i() * k;
    let end = left_sweep(prop, v, k)?;
    let (ac, bc) = decompose(k, a, end);
    let s = transmission_from(v, ac);
    let f0 = (ik * a).exp();
    let outside = |x: f64| -> Option<State> {
        if x <= -a {
            let e = (-ik * x).exp();
            Some([e, -ik * e])
        } else if x >= a {
            let em = (-ik * x).exp();
            let ep = (ik * x).exp();
            Some([ac * em + bc * ep, -ik * ac * em + ik * bc * ep])
        } else {
            None
        }
    };
    let (phi, dphi) = sample_solution(prop, k, -a, [f0, -ik * f0], xs, outside)?;
    Ok((s, phi.into_iter().map(|p| p * s).collect(), dphi.into_iter().map(|p| p * s).collect()))
}

fn jost_minus_with(prop: &Propagator, v: &PairPotential, k: C64, xs: &[f64]) -> Result<(C64, Vec<C64>, Vec<C64>), OneBodyError> {
    check_k(k)?;
    let a = v.support_radius;
    let ik = C64::i() * k;
    let g0 = (ik * a).exp();
    let start = prop.propagate(k, a, -a, [g0, ik * g0])?;
    // left of the support g = C e^{ikx} + D e^{-ikx}
    let (d, c) = decompose(k, -a, start);
    let s = transmission_from(v, c);
    let outside = |x: f64| -> Option<State> {
        if x >= a {
            let e = (ik * x).exp();
            Some([e, ik * e])
        } else if x <= -a {
            let ep = (ik * x).exp();
            let em = (-ik * x).exp();
            Some([c * ep + d * em, ik * c * ep - ik * d * em])
        } else {
            None
        }
    };
    let (phi, dphi) = sample_solution(prop, k, a, [g0, ik * g0], xs, outside)?;
    Ok((s, phi.into_iter().map(|p| p * s).collect(), dphi.into_iter().map(|p| p * s).collect()))
}

/// `φ_+` on `x_grid`; the minus fields are left empty.
pub fn jost_plus(v: &PairPotential, k: C64, x_grid: &[f64]) -> Result<JostData, OneBodyError> {
    let prop = Propagator::new(v);
    let (s, phi, dphi) = jost_plus_with(&prop, v, k, x_grid)?;
    Ok(JostData {
        k,
        x_grid: x_grid.to_vec(),
        phi_plus: phi,
        dphi_plus: dphi,
        phi_minus: Vec::new(),
        dphi_minus: Vec::new(),
        s,
        w: 2.0 * C64::i() * k * s,
    })
}

/// `φ_-` on `x_grid`, integrated independently from the right.
pub fn jost_minus(v: &PairPotential, k: C64, x_grid: &[f64]) -> Result<JostData, OneBodyError> {
    let prop = Propagator::new(v);
    let (s, phi, dphi) = jost_minus_with(&prop, v, k, x_grid)?;
    Ok(JostData {
        k,
        x_grid: x_grid.to_vec(),
        phi_plus: Vec::new(),
        dphi_plus: Vec::new(),
        phi_minus: phi,
        dphi_minus: dphi,
        s,
        w: 2.0 * C64::i() * k * s,
    })
}

/// Both Jost solutions on one grid, with the Wronskian taken from the samples.
pub fn jost_pair(v: &PairPotential, k: C64, x_grid: &[f64]) -> Result<JostData, OneBodyError> {
    let prop = Propagator::new(v);
    let (s, pp, dpp) = jost_plus_with(&prop, v, k, x_grid)?;
    let (_, pm, dpm) = jost_minus_with(&prop, v, k, x_grid)?;
    let mut data = JostData {
        k,
        x_grid: x_grid.to_vec(),
        phi_plus: pp,
        dphi_plus: dpp,
        phi_minus: pm,
        dphi_minus: dpm,
        s,
        w: C64::default(),
    };
    data.w = wronskian(&data)?;
    Ok(data)
}

/// Relative tolerance on the spread of the sampled Wronskian.
pub const WRONSKIAN_TOL: f64 = 1e-8;

/// `W = φ_+ φ_-' - φ_+' φ_-`, averaged over the samples; fails if it varies.
pub fn wronskian(data: &JostData) -> Result<C64, OneBodyError> {
    let n = data.x_grid.len();
    if n == 0 || data.phi_plus.len() != n || data.phi_minus.len() != n {
        return Err(OneBodyError::IntegratorFailure("Wronskian needs both solutions on the grid".into()));
    }
    let ws: Vec<C64> = (0..n).map(|m| data.phi_plus[m] * data.dphi_minus[m] - data.dphi_plus[m] * data.phi_minus[m]).collect();
    let mean = ws.iter().sum::<C64>() / n as f64;
    let spread = ws.iter().map(|w| (w - mean).norm()).fold(0.0, f64::max) / mean.norm().max(1e-300);
    if spread > WRONSKIAN_TOL {
        return Err(OneBodyError::NonConstantWronskian { spread });
    }
    Ok(mean)
}

/// `r0(y, y' | k²) = (i / 2k) e^{ik|y - y'|}`.
pub fn free_resolvent_1d(y: f64, yp: f64, k: C64) -> Result<C64, OneBodyError> {
    check_k(k)?;
    Ok(C64::i() / (2.0 * k) * (C64::i() * k * (y - yp).abs()).exp())
}

/// Jost data for one momentum, stored densely across the support so that
/// `φ_±` can be evaluated anywhere by Hermite interpolation.
#[derive(Debug, Clone)]
pub struct JostTable {
    pub k: C64,
    pub s: C64,
    a: f64,
    /// `φ_+ = s (A e^{-ikx} + B e^{ikx})` right of the support, `A = 1/s`.
    b_coef: C64,
    nodes: Vec<f64>,
    phi: Vec<C64>,
    dphi: Vec<C64>,
}

impl JostTable {
    /// Default step `a/400`, shortened to `0.02/|k|` at large momenta.
    pub fn new(v: &PairPotential, k: C64) -> Result<Self, OneBodyError> {
        let h = (v.support_radius / STEPS_PER_RADIUS as f64).min(0.02 / k.norm().max(1e-300));
        Self::with_step(v, k, h)
    }

    /// Table built with RK4 step `h` (also the interpolation spacing).
    pub fn with_step(v: &PairPotential, k: C64, h: f64) -> Result<Self, OneBodyError> {
        check_k(k)?;
        let prop = Propagator::with_step(v, h);
        let a = v.support_radius;
        let h = prop.step_size();
        let breaks = v.breakpoints();
        let mut nodes = Vec::new();
        for w in breaks.windows(2) {
            let n = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
            for m in 0..n {
                nodes.push(w[0] + (w[1] - w[0]) * m as f64 / n as f64);
            }
        }
        nodes.push(a);
        let ik = C64::i() * k;
        let f0 = (ik * a).exp();
        let mut s = [f0, -ik * f0];
        let mut phi = Vec::with_capacity(nodes.len());
        let mut dphi = Vec::with_capacity(nodes.len());
        let mut x = -a;
        for &xn in &nodes {
            s = prop.propagate(k, x, xn, s)?;
            x = xn;
            phi.push(s[0]);
            dphi.push(s[1]);
        }
        let (ac, bc) = decompose(k, a, s);
        let sc = ac.inv();
        phi.iter_mut().for_each(|p| *p *= sc);
        dphi.iter_mut().for_each(|p| *p *= sc);
        Ok(JostTable { k, s: sc, a, b_coef: bc, nodes, phi, dphi })
    }

    pub fn support_radius(&self) -> f64 {
        self.a
    }

    /// `φ_+(x)`.
    pub fn phi_plus(&self, x: f64) -> C64 {
        let ik = C64::i() * self.k;
        if x <= -self.a {
            return self.s * (-ik * x).exp();
        }
        if x >= self.a {
            return (-ik * x).exp() + self.s * self.b_coef * (ik * x).exp();
        }
        let m = self.nodes.partition_point(|&t| t <= x).clamp(1, self.nodes.len() - 1);
        let (x0, x1) = (self.nodes[m - 1], self.nodes[m]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        self.phi[m - 1] * h00 + self.dphi[m - 1] * (h10 * h) + self.phi[m] * h01 + self.dphi[m] * (h11 * h)
    }

    /// `φ_-(x) = φ_+(-x)` (the potential is even).
    pub fn phi_minus(&self, x: f64) -> C64 {
        self.phi_plus(-x)
    }

    /// Resolvent kernel `r(x, x' | k²) = -φ_+(x_<) φ_-(x_>) / W`, `W = 2iks`.
    pub fn resolvent(&self, x: f64, xp: f64) -> C64 {
        let (lo, hi) = if x <= xp { (x, xp) } else { (xp, x) };
        let w = 2.0 * C64::i() * self.k * self.s;
        -self.phi_plus(lo) * self.phi_minus(hi) / w
    }
}

/// `r(x, x' | k²)` for the pair potential `v`.
pub fn resolvent_1d(v: &PairPotential, x: f64, xp: f64, k: C64) -> Result<C64, OneBodyError> {
    check_k(k)?;
    if v.is_zero() {
        return free_resolvent_1d(x, xp, k);
    }
    Ok(JostTable::new(v, k)?.resolvent(x, xp))
}

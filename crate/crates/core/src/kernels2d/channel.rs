//! Channel resolvent `R_1 = (-Δ + v(x) - λ)^{-1}` in the plane.
//!
//! Momentum route: `R_1 = R_0 + (1/2π)∫ e^{ipΔy} [r - r_0](x, x'|λ - p²) dp`, with
//! the free part evaluated in closed form.  The remainder is integrated on
//! `[-P, P]` (substitution `p = p0 ± u²` around the threshold `p0 = Re √λ`) and
//! continued up the vertical rays `±P + iτ`, where `e^{ipΔy}` decays.
//!
//! Contour route: `R_1 = (1/2πi)∮ r(x, x'|ξ) r_0(y, y'|λ - ξ) dξ` over a clockwise
//! rectangle around `[0, ∞)` at distance `Im λ / 2`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{free_resolvent_2d, sqrt_upper, KernelError, PlanePoint};
use crate::linalg::C64;
use crate::onebody::{JostTable, PairPotential};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelOptions {
    pub points_per_panel: usize,
    /// Largest integrand phase change allowed across one panel.
    pub max_phase: f64,
    /// Largest panel length in the integration variable.
    pub max_panel: f64,
    /// Truncation targets `e^{-decay}` for the neglected tail.
    pub decay: f64,
    /// Hard cap on the real-axis cutoff when the rays cannot be used.
    pub p_cap: f64,
    /// Hard cap on the ray length.
    pub ray_cap: f64,
    /// Absolute tolerance of the refinement check in [`channel_resolvent`].
    pub check_tol: f64,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        ChannelOptions {
            points_per_panel: 12,
            max_phase: 1.5,
            max_panel: 0.5,
            decay: 36.0,
            p_cap: 120.0,
            ray_cap: 60.0,
            check_tol: 1e-8,
        }
    }
}

impl ChannelOptions {
    fn refined(&self) -> Self {
        ChannelOptions {
            points_per_panel: self.points_per_panel + 6,
            max_phase: 0.6 * self.max_phase,
            max_panel: 0.6 * self.max_panel,
            decay: self.decay + 8.0,
            ..*self
        }
    }
}

/// Geometry a [`ChannelKernel`] must cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelExtent {
    /// Largest `|x|`, `|x'|`.
    pub x_max: f64,
    /// Largest `|y - y'|`.
    pub dy_max: f64,
    /// Pairs with `|y - y'| >= dy_min > 0` use the rays; `0` disables them.
    pub dy_min: f64,
    /// Smallest `|x - x'|` among pairs with `|y - y'| < dy_min`; sets the
    /// real-axis cutoff (`0` means the cap).
    pub dx_min: f64,
}

impl ChannelExtent {
    /// Below this `|y - y'|` a single pair is integrated along the real axis only.
    pub const MIN_RAY_DY: f64 = 0.05;

    pub fn for_pair(z: PlanePoint, zp: PlanePoint) -> Self {
        let dy = (z.y - zp.y).abs();
        let x_max = z.x.abs().max(zp.x.abs());
        if dy >= Self::MIN_RAY_DY {
            ChannelExtent { x_max, dy_max: dy, dy_min: dy, dx_min: 0.0 }
        } else {
            ChannelExtent { x_max, dy_max: dy, dy_min: 0.0, dx_min: (z.x - zp.x).abs() }
        }
    }

    fn uses_real_tail(&self) -> bool {
        self.dy_min <= 0.0 || self.dx_min > 0.0
    }
}

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    /// Real `p` in `[0, P]`; `tail` marks `p > P` (used only without rays).
    Real { p: f64, tail: bool },
    /// `p = ±P + iτ`.
    Ray { p: C64, sign: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Node {
    k: C64,
    weight: f64,
    kind: NodeKind,
}

/// Geometric breakpoints on `[a, b]` refined toward `a`.
fn graded_breaks(a: f64, b: f64, min_len: f64) -> Vec<f64> {
    let mut out = vec![b];
    let mut len = 0.7 * (b - a);
    let mut x = b;
    while len > min_len && x - len > a {
        x -= len;
        out.push(x);
        len *= 0.3;
    }
    out.push(a);
    out.reverse();
    out
}

/// Bisects panels until each is shorter than `max_len(t)` and `phase` moves by at most `max_phase`.
fn refine_breaks<F, L>(breaks: &[f64], max_len: L, max_phase: f64, phase: F) -> Vec<f64>
where
    F: Fn(f64) -> f64,
    L: Fn(f64) -> f64,
{
    let mut out = vec![breaks[0]];
    let mut stack: Vec<(f64, f64, u32)> = breaks.windows(2).rev().map(|w| (w[0], w[1], 0)).collect();
    while let Some((l, r, depth)) = stack.pop() {
        let m = 0.5 * (l + r);
        let dphi = (phase(m) - phase(l)).abs() + (phase(r) - phase(m)).abs();
        if depth < 40 && (r - l > max_len(l) || dphi > max_phase) {
            stack.push((m, r, depth + 1));
            stack.push((l, m, depth + 1));
        } else {
            out.push(r);
        }
    }
    out
}

/// Gauss nodes `(t, w)` over consecutive panels.
fn panel_nodes(breaks: &[f64], n: usize) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * breaks.len());
    for w in breaks.windows(2) {
        let (h, c) = (0.5 * (w[1] - w[0]), 0.5 * (w[1] + w[0]));
        if h <= 0.0 {
            continue;
        }
        for (t, wt) in gl.0.iter().zip(gl.1.iter()) {
            out.push((c + h * t, h * wt));
        }
    }
    out
}

fn momentum_nodes(lambda: C64, a: f64, ext: &ChannelExtent, opts: &ChannelOptions) -> Vec<Node> {
    let n = opts.points_per_panel;
    let p0 = lambda.sqrt().re.max(0.0);
    let eps = lambda.im.max(0.0);
    let x_ext = 2.0 * ext.x_max + 2.0 * a;
    let kp = |p: f64| sqrt_upper(lambda - p * p);
    let phase_p = |p: f64| ext.dy_max * p + x_ext * kp(p).re;
    let u_min = (0.2 * (eps / (2.0 * p0.max(1e-3))).sqrt()).max(1e-3);
    let big_p = (2.0 * p0).max(p0 + 2.0);
    let fixed = |_: f64| opts.max_panel;
    let mut nodes = Vec::new();

    let mut push_real = |p: f64, w: f64, tail: bool| {
        nodes.push(Node { k: kp(p), weight: w, kind: NodeKind::Real { p, tail } });
    };
    if p0 > 0.0 {
        let umax = p0.sqrt();
        let br = refine_breaks(&graded_breaks(0.0, umax, u_min), fixed, opts.max_phase, |u| phase_p(p0 - u * u));
        for (u, w) in panel_nodes(&br, n) {
            push_real(p0 - u * u, 2.0 * u * w, false);
        }
    }
    let umax = (big_p - p0).sqrt();
    let br = refine_breaks(&graded_breaks(0.0, umax, u_min), fixed, opts.max_phase, |u| phase_p(p0 + u * u));
    for (u, w) in panel_nodes(&br, n) {
        push_real(p0 + u * u, 2.0 * u * w, false);
    }
    if ext.uses_real_tail() {
        let p_long = if ext.dx_min > 0.0 {
            (p0 * p0 + (opts.decay / ext.dx_min).powi(2)).sqrt().clamp(big_p, opts.p_cap)
        } else {
            opts.p_cap
        };
        if p_long > big_p {
            let dy = if ext.dy_min > 0.0 { ext.dy_min } else { ext.dy_max };
            let br =
                refine_breaks(&[big_p, p_long], |p| opts.max_panel.max(0.25 * p), opts.max_phase, |p| dy * p + x_ext * kp(p).re);
            for (p, w) in panel_nodes(&br, n) {
                push_real(p, w, true);
            }
        }
    }
    if ext.dy_min > 0.0 {
        let t_max = (opts.decay / ext.dy_min).min(opts.ray_cap);
        for sign in [1.0, -1.0] {
            let pc = |t: f64| C64::new(sign * big_p, t);
            let kc = |t: f64| sqrt_upper(lambda - pc(t) * pc(t));
            let br = refine_breaks(
                &[0.0, t_max],
                |t| opts.max_panel.max(0.1 * t),
                opts.max_phase,
                |t| x_ext * kc(t).re + ext.dy_min * t,
            );
            for (t, w) in panel_nodes(&br, n) {
                nodes.push(Node { k: kc(t), weight: w, kind: NodeKind::Ray { p: pc(t), sign } });
            }
        }
    }
    nodes
}

fn free_1d(k: C64, d: f64) -> C64 {
    C64::i() / (2.0 * k) * (C64::i() * k * d).exp()
}

/// Channel resolvent tabulated for one `λ` over a family of point pairs.
#[derive(Debug, Clone)]
pub struct ChannelKernel {
    lambda: C64,
    extent: ChannelExtent,
    nodes: Vec<Node>,
    tables: Vec<JostTable>,
    free: bool,
}

impl ChannelKernel {
    pub fn new(v: &PairPotential, lambda: C64, extent: ChannelExtent, opts: &ChannelOptions) -> Result<Self, KernelError> {
        if lambda.im < 0.0 {
            return Err(KernelError::InvalidSpectralPoint(format!("Im λ = {} < 0", lambda.im)));
        }
        if v.is_zero() {
            return Ok(ChannelKernel { lambda, extent, nodes: Vec::new(), tables: Vec::new(), free: true });
        }
        let nodes = momentum_nodes(lambda, v.support_radius, &extent, opts);
        let tables = nodes.par_iter().map(|nd| JostTable::new(v, nd.k)).collect::<Result<Vec<_>, _>>()?;
        Ok(ChannelKernel { lambda, extent, nodes, tables, free: false })
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// `R_1(z, z')`.
    pub fn eval(&self, z: PlanePoint, zp: PlanePoint) -> Result<C64, KernelError> {
        let r0 = free_resolvent_2d(z, zp, self.lambda)?;
        if self.free {
            return Ok(r0);
        }
        Ok(r0 + self.correction(z, zp)?)
    }

    /// `R_1 - R_0` at `(z, z')`; defined also at coincident points.
    pub fn correction(&self, z: PlanePoint, zp: PlanePoint) -> Result<C64, KernelError> {
        if self.free {
            return Ok(C64::default());
        }
        let ext = &self.extent;
        let dy = (z.y - zp.y).abs();
        let slack = 1.0 + 1e-9;
        if z.x.abs().max(zp.x.abs()) > ext.x_max * slack + 1e-12 || dy > ext.dy_max * slack + 1e-12 {
            return Err(KernelError::QuadratureFailure("point pair outside the kernel extent".into()));
        }
        let rays = ext.dy_min > 0.0 && dy >= ext.dy_min / slack;
        if !rays && !ext.uses_real_tail() {
            return Err(KernelError::QuadratureFailure(format!("|y - y'| = {dy} below the ray threshold")));
        }
        let dx = (z.x - zp.x).abs();
        let mut acc = C64::default();
        for (nd, tab) in self.nodes.iter().zip(&self.tables) {
            let coef = match nd.kind {
                NodeKind::Real { tail, .. } if tail && rays => continue,
                NodeKind::Real { p, .. } => C64::new(nd.weight * (p * dy).cos() / PI, 0.0),
                NodeKind::Ray { .. } if !rays => continue,
                NodeKind::Ray { p, sign } => C64::i() * (sign * nd.weight / (2.0 * PI)) * (C64::i() * p * dy).exp(),
            };
            acc += coef * (tab.resolvent(z.x, zp.x) - free_1d(nd.k, dx));
        }
        Ok(acc)
    }
}

/// Channel resolvent at one pair, with default options and a refinement check.
pub fn channel_resolvent(z: PlanePoint, zp: PlanePoint, lambda: C64, v: &PairPotential) -> Result<C64, KernelError> {
    channel_resolvent_with(z, zp, lambda, v, &ChannelOptions::default())
}

pub fn channel_resolvent_with(
    z: PlanePoint,
    zp: PlanePoint,
    lambda: C64,
    v: &PairPotential,
    opts: &ChannelOptions,
) -> Result<C64, KernelError> {
    let r0 = free_resolvent_2d(z, zp, lambda)?;
    if v.is_zero() {
        return Ok(r0);
    }
    let ext = ChannelExtent::for_pair(z, zp);
    let coarse = ChannelKernel::new(v, lambda, ext, opts)?.correction(z, zp)?;
    let fine = ChannelKernel::new(v, lambda, ext, &opts.refined())?.correction(z, zp)?;
    let gap = (coarse - fine).norm();
    if gap > opts.check_tol {
        return Err(KernelError::QuadratureFailure(format!("refinement changed the value by {gap:.3e}")));
    }
    Ok(r0 + fine)
}

/// `Γ(z, z') = v(x) R_1(z, z')`.
pub fn gamma_channel_kernel(z: PlanePoint, zp: PlanePoint, lambda: C64, v: &PairPotential) -> Result<C64, KernelError> {
    let vx = v.eval(z.x);
    if vx == 0.0 {
        return Ok(C64::default());
    }
    Ok(vx * channel_resolvent(z, zp, lambda, v)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    pub points_per_panel: usize,
    pub max_phase: f64,
    pub max_panel: f64,
    pub decay: f64,
    /// Cap on `√Re ξ` along the long sides.
    pub t_cap: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions { points_per_panel: 16, max_phase: 1.2, max_panel: 0.5, decay: 34.0, t_cap: 80.0 }
    }
}

/// Channel resolvent by the contour form.  Needs `Im λ > 0` and `y ≠ y'`.
pub fn channel_resolvent_contour(
    z: PlanePoint,
    zp: PlanePoint,
    lambda: C64,
    v: &PairPotential,
    opts: &ContourOptions,
) -> Result<C64, KernelError> {
    let dy = (z.y - zp.y).abs();
    if !(lambda.im > 0.0) || dy == 0.0 {
        return Err(KernelError::QuadratureFailure("contour route needs Im λ > 0 and y ≠ y'".into()));
    }
    let delta = 0.5 * lambda.im;
    let n = opts.points_per_panel;
    let e = lambda.re.max(0.0);
    let x_ext = z.x.abs() + zp.x.abs() + 2.0 * v.support_radius;
    let t_max = (e + (opts.decay / dy).powi(2)).sqrt().min(opts.t_cap);

    let mut breaks = graded_breaks(0.0, t_max.min(1.0), 0.1 * delta.sqrt());
    if e.sqrt() + 1e-9 < t_max {
        let c = e.sqrt();
        let g = 0.1 * delta / c.max(0.1);
        let left: Vec<f64> = graded_breaks(0.0, c, g).into_iter().map(|t| c - t).collect();
        breaks.extend(left);
        breaks.extend(graded_breaks(c, t_max.min(2.0 * c + 1.0), g));
        breaks.push(t_max);
    } else {
        breaks.push(t_max);
    }
    breaks.retain(|t| *t <= t_max);
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let phase = |t: f64| x_ext * t + dy * sqrt_upper(lambda - t * t).re;
    let breaks = refine_breaks(&breaks, |_| opts.max_panel, opts.max_phase, phase);

    // (ξ, dξ) with the clockwise orientation folded into dξ
    let mut pts: Vec<(C64, C64)> = Vec::new();
    for (side, sgn) in [(1.0, 1.0), (-1.0, -1.0)] {
        for (s, w) in panel_nodes(&[-delta, 0.0], n) {
            pts.push((C64::new(s, side * delta), C64::new(sgn * w, 0.0)));
        }
        for (t, w) in panel_nodes(&breaks, n) {
            pts.push((C64::new(t * t, side * delta), C64::new(sgn * 2.0 * t * w, 0.0)));
        }
    }
    for (s, w) in panel_nodes(&[-delta, delta], n) {
        pts.push((C64::new(-delta, s), C64::new(0.0, w)));
    }

    let dx = (z.x, zp.x);
    let terms = pts
        .par_iter()
        .map(|&(xi, dxi)| {
            let k = sqrt_upper(xi);
            let r = JostTable::new(v, k)?.resolvent(dx.0, dx.1);
            let kt = sqrt_upper(lambda - xi);
            Ok(dxi * r * free_1d(kt, dy))
        })
        .collect::<Result<Vec<C64>, KernelError>>()?;
    let sum: C64 = terms.iter().sum();
    Ok(sum / (2.0 * PI * C64::i()))
}

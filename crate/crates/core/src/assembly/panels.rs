//! Rectangular tensor Gauss panels in arbitrary orthonormal frames and the
//! corrected interaction matrices of the free kernel between point sets and
//! panel sets.
//!
//! Far from a panel the plain product rule is used.  Near it (or inside) each
//! column block is replaced by the moments `∫_P K(|z - ζ|) ℓ_a(s) ℓ_b(t) dζ`
//! of the panel's Lagrange basis, computed by splitting the rectangle into
//! four signed triangles with apex at the target and integrating each in
//! Duffy coordinates.  Moments depend only on the panel shape and the target's
//! local position, so they are cached.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::kernels2d::PlanePoint;
use crate::linalg::{CMatrix, C64};
use crate::quadrature::{gauss_legendre, Lagrange, Rule1D};
use crate::special::HankelTable;

/// A panel is "near" a target closer than this multiple of its longest side.
const NEAR_FACTOR: f64 = 0.4;
const KEY_SCALE: f64 = 1e9;

#[derive(Debug, Clone)]
pub struct Panel {
    pub center: PlanePoint,
    /// Unit vector of the local `s` axis.
    pub axis_s: [f64; 2],
    /// Unit vector of the local `t` axis (orthogonal to `axis_s`, either orientation).
    pub axis_t: [f64; 2],
    pub half: [f64; 2],
    pub order: [usize; 2],
    /// Index of the first node in the owning set; nodes run `s`-major.
    pub first: usize,
}

impl Panel {
    pub fn len(&self) -> usize {
        self.order[0] * self.order[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_local(&self, z: PlanePoint) -> [f64; 2] {
        let d = [z.x - self.center.x, z.y - self.center.y];
        [d[0] * self.axis_s[0] + d[1] * self.axis_s[1], d[0] * self.axis_t[0] + d[1] * self.axis_t[1]]
    }

    pub fn to_global(&self, s: f64, t: f64) -> PlanePoint {
        PlanePoint::new(
            self.center.x + s * self.axis_s[0] + t * self.axis_t[0],
            self.center.y + s * self.axis_s[1] + t * self.axis_t[1],
        )
    }

    fn distance_local(&self, p: [f64; 2]) -> f64 {
        let ds = (p[0].abs() - self.half[0]).max(0.0);
        let dt = (p[1].abs() - self.half[1]).max(0.0);
        ds.hypot(dt)
    }

    fn is_near(&self, p: [f64; 2]) -> bool {
        self.distance_local(p) < NEAR_FACTOR * 2.0 * self.half[0].max(self.half[1])
    }

    fn shape_key(&self) -> [i64; 4] {
        [q(self.half[0]), q(self.half[1]), self.order[0] as i64, self.order[1] as i64]
    }
}

fn q(x: f64) -> i64 {
    (x * KEY_SCALE).round() as i64
}

/// A union of panels with their tensor Gauss nodes and weights.
#[derive(Debug, Clone, Default)]
pub struct PanelSet {
    pub panels: Vec<Panel>,
    pub nodes: Vec<PlanePoint>,
    pub weights: Vec<f64>,
}

impl PanelSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Appends a panel given by its centre, frame, half-extents and orders.
    pub fn push(&mut self, center: PlanePoint, axis_s: [f64; 2], axis_t: [f64; 2], half: [f64; 2], order: [usize; 2]) {
        let first = self.nodes.len();
        let panel = Panel { center, axis_s, axis_t, half, order, first };
        let (gs, gt) = (gauss_legendre(order[0]), gauss_legendre(order[1]));
        for (sa, wa) in gs.0.iter().zip(gs.1.iter()) {
            for (tb, wb) in gt.0.iter().zip(gt.1.iter()) {
                self.nodes.push(panel.to_global(sa * half[0], tb * half[1]));
                self.weights.push(wa * wb * half[0] * half[1]);
            }
        }
        self.panels.push(panel);
    }

    /// Local coordinates `(s, t)` of node `n` of panel `p`.
    pub fn local_node(&self, p: usize, n: usize) -> [f64; 2] {
        let panel = &self.panels[p];
        let (a, b) = (n / panel.order[1], n % panel.order[1]);
        let (gs, gt) = (gauss_legendre(panel.order[0]), gauss_legendre(panel.order[1]));
        [gs.0[a] * panel.half[0], gt.0[b] * panel.half[1]]
    }
}

/// The free kernel `(i/4) H0(k r)` at a fixed `k`.
#[derive(Debug, Clone)]
pub struct FreeKernel {
    table: HankelTable,
}

impl FreeKernel {
    pub fn new(k: C64, r_max: f64) -> Self {
        FreeKernel { table: HankelTable::new(k, r_max) }
    }

    pub fn k(&self) -> C64 {
        self.table.k()
    }

    #[inline]
    pub fn eval(&self, r: f64) -> C64 {
        0.25 * C64::i() * self.table.eval(r)
    }
}

type NearKey = [i64; 6];

/// Cache of near-field moment blocks for one kernel.
#[derive(Debug)]
pub struct Interactions {
    kernel: FreeKernel,
    cache: Mutex<HashMap<NearKey, Arc<Vec<C64>>>>,
}

impl Interactions {
    pub fn new(kernel: FreeKernel) -> Self {
        Interactions { kernel, cache: Mutex::new(HashMap::new()) }
    }

    pub fn kernel(&self) -> &FreeKernel {
        &self.kernel
    }

    fn moments(&self, panel: &Panel, local: [f64; 2]) -> Arc<Vec<C64>> {
        let sk = panel.shape_key();
        let key = [sk[0], sk[1], sk[2], sk[3], q(local[0]), q(local[1])];
        if let Some(m) = self.cache.lock().expect("moment cache poisoned").get(&key) {
            return m.clone();
        }
        let m = Arc::new(panel_moments(&self.kernel, panel.half, panel.order, local));
        self.cache.lock().expect("moment cache poisoned").insert(key, m.clone());
        m
    }

    /// `M[m, n] ≈ ∫ K(|z_m - ζ|) ℓ_n(ζ) dζ` for targets `z_m` and the nodes of `src`,
    /// so that `M f` approximates `∫ K f` for `f` sampled on `src`.
    pub fn matrix(&self, targets: &[PlanePoint], src: &PanelSet) -> CMatrix {
        let ncols = src.len();
        let rows: Vec<Vec<C64>> = targets.par_iter().map(|&z| self.row(z, src)).collect();
        let mut m = CMatrix::zeros(targets.len(), ncols);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    /// One row of [`Interactions::matrix`].
    pub fn row(&self, z: PlanePoint, src: &PanelSet) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); src.len()];
        for panel in &src.panels {
            let local = panel.to_local(z);
            let range = panel.first..panel.first + panel.len();
            if panel.is_near(local) {
                let m = self.moments(panel, local);
                out[range].copy_from_slice(&m);
            } else {
                for n in range {
                    out[n] = self.kernel.eval(z.dist(&src.nodes[n])) * src.weights[n];
                }
            }
        }
        out
    }

    /// `Σ_n M[z, n] f_n` without storing the row.
    pub fn apply_at(&self, z: PlanePoint, src: &PanelSet, f: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for panel in &src.panels {
            let local = panel.to_local(z);
            let range = panel.first..panel.first + panel.len();
            if panel.is_near(local) {
                let m = self.moments(panel, local);
                acc += m.iter().zip(&f[range]).map(|(a, b)| a * b).sum::<C64>();
            } else {
                for n in range {
                    acc += self.kernel.eval(z.dist(&src.nodes[n])) * (src.weights[n] * f[n]);
                }
            }
        }
        acc
    }
}

/// Moments of the tensor Lagrange basis of a panel `[-hs, hs] × [-ht, ht]`
/// against `K(|ζ - p|)`, `p` in local coordinates; `s`-major order.
pub fn panel_moments(kernel: &FreeKernel, half: [f64; 2], order: [usize; 2], p: [f64; 2]) -> Vec<C64> {
    let (gs, gt) = (gauss_legendre(order[0]), gauss_legendre(order[1]));
    let ls = Lagrange::new(&gs.0.iter().map(|x| x * half[0]).collect::<Vec<_>>());
    let lt = Lagrange::new(&gt.0.iter().map(|x| x * half[1]).collect::<Vec<_>>());
    let mut vs = vec![0.0; order[0]];
    let mut vt = vec![0.0; order[1]];
    let mut acc = vec![C64::new(0.0, 0.0); order[0] * order[1]];

    let corners = [[-half[0], -half[1]], [half[0], -half[1]], [half[0], half[1]], [-half[0], half[1]]];
    let scale = half[0].max(half[1]);
    let reach = 2.0 * scale * (1.0 + NEAR_FACTOR) + p[0].hypot(p[1]);
    let n_u = 12 + (kernel.k().norm() * reach).ceil() as usize;
    let u_rule = gauss_legendre(n_u);

    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let (ax, ay) = (a[0] - p[0], a[1] - p[1]);
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let area2 = ax * ey - ay * ex;
        if area2.abs() < 1e-14 * scale * scale {
            continue;
        }
        let elen = ex.hypot(ey);
        let h = area2.abs() / elen;
        // foot of the perpendicular, as a fraction of the edge
        let foot = (-(ax * ex + ay * ey) / (elen * elen)).clamp(0.0, 1.0);
        let min_len = (0.25 * h / elen).max(1e-12);
        let mut tau = Rule1D::default();
        if foot > 0.0 {
            let r = Rule1D::graded(8, 0.0, foot, 0.2, min_len);
            tau.nodes.extend(r.nodes.iter().map(|x| foot - x));
            tau.weights.extend_from_slice(&r.weights);
        }
        if foot < 1.0 {
            tau.append(&Rule1D::graded(8, foot, 1.0, 0.2, min_len));
        }
        for (&tv, &tw) in tau.nodes.iter().zip(&tau.weights) {
            let (dx, dy) = (ax + tv * ex, ay + tv * ey);
            let d = dx.hypot(dy);
            for (&w, &ww) in u_rule.0.iter().zip(u_rule.1.iter()) {
                // u = w², mapped from [-1, 1] to [0, 1]
                let wv = 0.5 * (w + 1.0);
                let u = wv * wv;
                let jac = 0.5 * ww * 2.0 * wv * u * area2 * tw;
                let (s, t) = (p[0] + u * dx, p[1] + u * dy);
                let kv = kernel.eval(u * d) * jac;
                ls.eval_into(s, &mut vs);
                lt.eval_into(t, &mut vt);
                for (i, &a_) in vs.iter().enumerate() {
                    let ka = kv * a_;
                    for (j, &b_) in vt.iter().enumerate() {
                        acc[i * order[1] + j] += ka * b_;
                    }
                }
            }
        }
    }
    acc
}

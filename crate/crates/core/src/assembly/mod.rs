//! Discretization of the three-body resolvent on a bounded box.
//!
//! Two point sets are used.  The box `[-L, L]²` carries a composite tensor
//! Gauss grid on which resolvents are reported.  Each pair potential lives on
//! its own band `|x_i| < a`, discretized by panels aligned with the Jacobi
//! frame of that pair (split at the potential's breakpoints).  On the band
//! space `X = ⊕ ℓ²(band_i)` the operator `G_X = -V R0` has one block row per
//! pair, so both resolvent routes work with the same matrix:
//!
//! * direct: `(I - G_X)^{-1}`;
//! * Schwartz: `I - Γ` with `Γ` the total reflection built from the pair
//!   reflections `Γ_i` through the compressed block system.
//!
//! The box resolvent follows as `R = R0 + R0|_{box←X} (I - G_X)^{-1} G|_{X←box}`.

mod panels;

pub use panels::{panel_moments, FreeKernel, Interactions, Panel, PanelSet};

use std::ops::Range;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::quadrature::Rule1D;
use serde::{Deserialize, Serialize};

use crate::kernels2d::{change_pair, sqrt_upper, KernelError, PlanePoint};
use crate::linalg::{checked_inverse, identity, matmul, matvec, CMatrix, LinalgError, C64};
use crate::onebody::PairPotential;
use crate::operator_algebra::{AlgebraError, BlockRowSystem};
use crate::separation::CutoffFamily;

/// Condition cap for `I - G`.
pub const RESOLVENT_COND_CAP: f64 = 1e10;
/// Smallest admissible `ε` in a limiting-absorption ladder.
pub const MIN_EPS: f64 = 1e-3;
/// Doubling test for the far field: `|ψ(2y) - ψ(y)| ≤ C / y · max|ψ(y)|`.
pub const FAR_FIELD_CONSTANT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssemblyError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("singular operator (condition estimate {cond:.3e} exceeds {cap:.1e})")]
    SingularOperator { cond: f64, cap: f64 },
    #[error("limiting absorption did not converge: differences {diffs:?}")]
    NoConvergence { diffs: Vec<f64> },
    #[error("far field unstable: doubling changed the profile by {change:.3e} (bound {bound:.3e})")]
    FarFieldUnstable { change: f64, bound: f64 },
    #[error("operator algebra: {0}")]
    Algebra(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl From<LinalgError> for AssemblyError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { cond, cap } => AssemblyError::SingularOperator { cond, cap },
            other => AssemblyError::Algebra(other.to_string()),
        }
    }
}

impl From<AlgebraError> for AssemblyError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::Singular(l) => l.into(),
            other => AssemblyError::Algebra(other.to_string()),
        }
    }
}

/// Composite tensor Gauss grid on `[-L, L]²` with `n` nodes per axis.
#[derive(Debug, Clone)]
pub struct Grid2D {
    pub half_width: f64,
    pub n: usize,
    /// Nodes per panel and axis.
    pub order: usize,
    pub panels: PanelSet,
}

impl Grid2D {
    pub fn nodes(&self) -> &[PlanePoint] {
        &self.panels.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.panels.weights
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn sample<F: Fn(PlanePoint) -> C64>(&self, f: F) -> Vec<C64> {
        self.nodes().iter().map(|&z| f(z)).collect()
    }

    /// `Σ w f`.
    pub fn integrate(&self, f: &[C64]) -> C64 {
        f.iter().zip(self.weights()).map(|(v, w)| v * w).sum()
    }
}

/// Panel order for `n` nodes per axis: 8 or 10 when they divide `n`,
/// otherwise the largest divisor not above 10.
fn panel_order(n: usize) -> usize {
    if n.is_multiple_of(8) {
        8
    } else if n.is_multiple_of(10) {
        10
    } else {
        (1..=10.min(n)).rev().find(|&p| n.is_multiple_of(p)).unwrap_or(1)
    }
}

pub fn build_grid(half_width: f64, n: usize) -> Result<Grid2D, AssemblyError> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(AssemblyError::InvalidGrid(format!("half width {half_width} must be positive")));
    }
    if n < 2 {
        return Err(AssemblyError::InvalidGrid(format!("need at least 2 nodes per axis, got {n}")));
    }
    let order = panel_order(n);
    let m = n / order;
    let h = 2.0 * half_width / m as f64;
    let mut panels = PanelSet::default();
    for i in 0..m {
        for j in 0..m {
            let c = PlanePoint::new(-half_width + (i as f64 + 0.5) * h, -half_width + (j as f64 + 0.5) * h);
            panels.push(c, [1.0, 0.0], [0.0, 1.0], [0.5 * h, 0.5 * h], [order, order]);
        }
    }
    Ok(Grid2D { half_width, n, order, panels })
}

/// A discretized operator on the box grid; `(A f)_m = Σ_n matrix[m, n] f_n`.
#[derive(Debug, Clone)]
pub struct GridOperator {
    pub matrix: CMatrix,
    pub lambda: C64,
    pub label: String,
}

impl GridOperator {
    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        matvec(&self.matrix, f)
    }
}

fn kernel_for(lambda: C64, reach: f64) -> Result<FreeKernel, AssemblyError> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) || lambda.norm() == 0.0 {
        return Err(AssemblyError::InvalidInput(format!("spectral parameter {lambda} not admissible")));
    }
    Ok(FreeKernel::new(sqrt_upper(lambda), reach))
}

fn box_reach(grid: &Grid2D) -> f64 {
    2.0 * 2f64.sqrt() * grid.half_width + 1.0
}

/// `R0(λ)` on the box grid.
pub fn free_resolvent(lambda: C64, grid: &Grid2D) -> Result<GridOperator, AssemblyError> {
    let inter = Interactions::new(kernel_for(lambda, box_reach(grid))?);
    Ok(GridOperator { matrix: inter.matrix(grid.nodes(), &grid.panels), lambda, label: "R0".into() })
}

/// `G_i = -v_i R0` on the box grid: row `m` is `-v(x_i(z_m))` times the
/// corrected free-kernel row, so rows off the band vanish.
pub fn assemble_g(pair: usize, lambda: C64, grid: &Grid2D, v: &PairPotential) -> Result<GridOperator, AssemblyError> {
    if pair > 2 {
        return Err(KernelError::BadPair(pair).into());
    }
    let mut m = free_resolvent(lambda, grid)?.matrix;
    for (r, z) in grid.nodes().iter().enumerate() {
        let vx = v.eval(change_pair(*z, 0, pair).x);
        if vx == 0.0 {
            m.row_mut(r).fill(C64::new(0.0, 0.0));
        } else {
            m.row_mut(r).scale_mut(-vx);
        }
    }
    Ok(GridOperator { matrix: m, lambda, label: format!("G{pair}") })
}

/// One pair potential acting in the Jacobi frame of `pair`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTerm {
    pub pair: usize,
    pub potential: PairPotential,
}

impl PairTerm {
    pub fn new(pair: usize, potential: PairPotential) -> Self {
        PairTerm { pair, potential }
    }
}

/// The same potential on all three pairs.
pub fn identical_pairs(v: &PairPotential) -> Vec<PairTerm> {
    (0..3).map(|i| PairTerm::new(i, v.clone())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandOptions {
    pub order_x: usize,
    pub order_y: usize,
    /// Target panel length along the band.
    pub panel_len: f64,
    /// Bands cover `|y_i| ≤ half_length`.
    pub half_length: f64,
    /// Multiply each pair potential by `χ_T(y_i)` and end the band at `T + 1`.
    pub cutoff: Option<f64>,
}

impl BandOptions {
    pub fn new(half_length: f64) -> Self {
        BandOptions { order_x: 6, order_y: 6, panel_len: 1.25, half_length, cutoff: None }
    }

    pub fn with_cutoff(mut self, t: f64) -> Self {
        self.cutoff = Some(t);
        self.half_length = t + 1.0;
        self
    }
}

/// Nyström discretization of the band space.
#[derive(Debug, Clone)]
pub struct BandDiscretization {
    pub terms: Vec<PairTerm>,
    pub options: BandOptions,
    pub panels: PanelSet,
    /// Potential value at each node (tapered when a cutoff is set).
    pub potential: Vec<f64>,
    /// Node coordinates in the frame of the node's own pair.
    pub local: Vec<PlanePoint>,
    pub ranges: Vec<Range<usize>>,
}

impl BandDiscretization {
    /// Zero potentials are dropped; each pair may appear once.
    pub fn new(terms: &[PairTerm], options: BandOptions) -> Result<Self, AssemblyError> {
        if options.order_x == 0 || options.order_y == 0 || !(options.panel_len > 0.0) || !(options.half_length > 0.0) {
            return Err(AssemblyError::InvalidInput(format!("bad band options {options:?}")));
        }
        let cutoff = options.cutoff.map(CutoffFamily::new).transpose().map_err(|e| AssemblyError::InvalidInput(e.to_string()))?;
        let mut seen = [false; 3];
        let mut kept = Vec::new();
        for t in terms {
            if t.pair > 2 {
                return Err(KernelError::BadPair(t.pair).into());
            }
            if std::mem::replace(&mut seen[t.pair], true) {
                return Err(AssemblyError::InvalidInput(format!("pair {} given twice", t.pair)));
            }
            if !t.potential.is_zero() {
                kept.push(t.clone());
            }
        }
        let y_breaks = band_y_breaks(&options);
        let mut panels = PanelSet::default();
        let mut potential = Vec::new();
        let mut local = Vec::new();
        let mut ranges = Vec::new();
        for term in &kept {
            let start = panels.len();
            let o = change_pair(PlanePoint::new(0.0, 0.0), term.pair, 0);
            let ex = change_pair(PlanePoint::new(1.0, 0.0), term.pair, 0);
            let ey = change_pair(PlanePoint::new(0.0, 1.0), term.pair, 0);
            let (axis_s, axis_t) = ([ex.x - o.x, ex.y - o.y], [ey.x - o.x, ey.y - o.y]);
            let xb = term.potential.breakpoints();
            for xw in xb.windows(2) {
                for yw in y_breaks.windows(2) {
                    let (xc, yc) = (0.5 * (xw[0] + xw[1]), 0.5 * (yw[0] + yw[1]));
                    let first = panels.len();
                    panels.push(
                        change_pair(PlanePoint::new(xc, yc), term.pair, 0),
                        axis_s,
                        axis_t,
                        [0.5 * (xw[1] - xw[0]), 0.5 * (yw[1] - yw[0])],
                        [options.order_x, options.order_y],
                    );
                    for n in first..panels.len() {
                        let p = change_pair(panels.nodes[n], 0, term.pair);
                        let taper = cutoff.map_or(1.0, |c| c.chi(p.y));
                        potential.push(term.potential.eval(p.x) * taper);
                        local.push(p);
                    }
                }
            }
            ranges.push(start..panels.len());
        }
        Ok(BandDiscretization { terms: kept, options, panels, potential, local, ranges })
    }

    pub fn dim(&self) -> usize {
        self.panels.len()
    }

    pub fn n_bands(&self) -> usize {
        self.terms.len()
    }

    /// `Σ_i v_i(x_i(z))` without taper.
    pub fn potential_at(&self, z: PlanePoint) -> f64 {
        self.terms.iter().map(|t| t.potential.eval(change_pair(z, 0, t.pair).x)).sum()
    }

    /// Distance from `z` to the nearest potential breakpoint line of any band.
    pub fn distance_to_breaks(&self, z: PlanePoint) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| {
                let x = change_pair(z, 0, t.pair).x;
                t.potential.breakpoints().into_iter().map(move |b| (x - b).abs())
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn band_y_breaks(o: &BandOptions) -> Vec<f64> {
    let uniform = |a: f64, b: f64| -> Vec<f64> {
        let m = ((b - a) / o.panel_len).ceil().max(1.0) as usize;
        (0..=m).map(|j| a + (b - a) * j as f64 / m as f64).collect()
    };
    match o.cutoff {
        Some(t) => {
            let mut v = vec![-t - 1.0];
            v.extend(uniform(-t, t));
            v.push(t + 1.0);
            v
        }
        None => uniform(-o.half_length, o.half_length),
    }
}

/// All matrices of one spectral parameter, shared by both routes.
#[derive(Debug)]
pub struct ResolventAssembly<'a> {
    grid: &'a Grid2D,
    bands: &'a BandDiscretization,
    lambda: C64,
    inter: Interactions,
    g_x: CMatrix,
    inverse: OnceLock<Result<CMatrix, AssemblyError>>,
    box_from_bands: OnceLock<CMatrix>,
    bands_from_box: OnceLock<CMatrix>,
}

impl<'a> ResolventAssembly<'a> {
    pub fn new(grid: &'a Grid2D, bands: &'a BandDiscretization, lambda: C64) -> Result<Self, AssemblyError> {
        let reach = box_reach(grid).max(2.0 * 2f64.sqrt() * bands.options.half_length + 2.0);
        let inter = Interactions::new(kernel_for(lambda, reach)?);
        let mut g_x = inter.matrix(&bands.panels.nodes, &bands.panels);
        for (r, &v) in bands.potential.iter().enumerate() {
            g_x.row_mut(r).scale_mut(-v);
        }
        Ok(ResolventAssembly {
            grid,
            bands,
            lambda,
            inter,
            g_x,
            inverse: OnceLock::new(),
            box_from_bands: OnceLock::new(),
            bands_from_box: OnceLock::new(),
        })
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn grid(&self) -> &Grid2D {
        self.grid
    }

    pub fn bands(&self) -> &BandDiscretization {
        self.bands
    }

    pub fn interactions(&self) -> &Interactions {
        &self.inter
    }

    /// `G_X = -V R0` on the band space.
    pub fn g_x(&self) -> &CMatrix {
        &self.g_x
    }

    /// `G_X` split into its block rows `G_i`.
    pub fn block_system(&self) -> Result<BlockRowSystem, AssemblyError> {
        let rows = self.bands.ranges.iter().map(|r| self.g_x.rows(r.start, r.len()).into_owned()).collect();
        Ok(BlockRowSystem::new(rows)?)
    }

    /// `(I - G_X)^{-1}`, formed once.
    pub fn direct_inverse(&self) -> Result<&CMatrix, AssemblyError> {
        self.inverse
            .get_or_init(|| Ok(checked_inverse(&(identity(self.bands.dim()) - &self.g_x), RESOLVENT_COND_CAP)?))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `I - Γ` from the pair reflections.
    pub fn schwartz_inverse(&self) -> Result<CMatrix, AssemblyError> {
        let sys = self.block_system()?;
        let refl = sys.reflection_rows(RESOLVENT_COND_CAP)?;
        let total = sys.total_reflection(&refl, RESOLVENT_COND_CAP)?;
        Ok(identity(self.bands.dim()) - total)
    }

    /// Free kernel from band nodes to box nodes, `N × D`.
    fn box_from_bands(&self) -> &CMatrix {
        self.box_from_bands.get_or_init(|| self.inter.matrix(self.grid.nodes(), &self.bands.panels))
    }

    /// `-V R0` from box nodes to band nodes, `D × N`.
    fn bands_from_box(&self) -> &CMatrix {
        self.bands_from_box.get_or_init(|| {
            let mut m = self.inter.matrix(&self.bands.panels.nodes, &self.grid.panels);
            for (r, &v) in self.bands.potential.iter().enumerate() {
                m.row_mut(r).scale_mut(-v);
            }
            m
        })
    }

    fn box_resolvent(&self, inv: &CMatrix, label: &str) -> GridOperator {
        let mut r = self.inter.matrix(self.grid.nodes(), &self.grid.panels);
        if self.bands.dim() > 0 {
            let tail = matmul(inv, self.bands_from_box());
            crate::linalg::gemm_acc(&mut r, C64::new(1.0, 0.0), self.box_from_bands(), &tail);
        }
        GridOperator { matrix: r, lambda: self.lambda, label: label.into() }
    }

    pub fn direct_resolvent(&self) -> Result<GridOperator, AssemblyError> {
        let inv = self.direct_inverse()?;
        Ok(self.box_resolvent(inv, "R direct"))
    }

    pub fn schwartz_resolvent(&self) -> Result<GridOperator, AssemblyError> {
        let inv = self.schwartz_inverse()?;
        Ok(self.box_resolvent(&inv, "R Schwartz"))
    }

    /// Band coefficients `c = (I - G_X)^{-1} (-V f)` for `f` sampled on band nodes.
    pub fn band_coefficients(&self, f: &[C64]) -> Result<Vec<C64>, AssemblyError> {
        if self.bands.dim() == 0 {
            return Ok(Vec::new());
        }
        let rhs: Vec<C64> = f.iter().zip(&self.bands.potential).map(|(x, &v)| -v * x).collect();
        Ok(matvec(self.direct_inverse()?, &rhs))
    }

    /// `R0 φ` at arbitrary points, `φ` sampled on the box grid.
    pub fn free_apply_at(&self, points: &[PlanePoint], phi: &[C64]) -> Vec<C64> {
        points.par_iter().map(|&z| self.inter.apply_at(z, &self.grid.panels, phi)).collect()
    }

    /// `R φ` at arbitrary points, `φ` sampled on the box grid.
    pub fn apply_at(&self, points: &[PlanePoint], phi: &[C64]) -> Result<Vec<C64>, AssemblyError> {
        let mut out = self.free_apply_at(points, phi);
        if self.bands.dim() > 0 {
            let on_bands = self.free_apply_at(&self.bands.panels.nodes, phi);
            let c = self.band_coefficients(&on_bands)?;
            let extra: Vec<C64> = points.par_iter().map(|&z| self.inter.apply_at(z, &self.bands.panels, &c)).collect();
            out.iter_mut().zip(extra).for_each(|(o, e)| *o += e);
        }
        Ok(out)
    }

    /// `⟨φ, R ψ⟩ = Σ w conj(φ) (Rψ)` on the box grid.
    pub fn pairing(&self, phi: &[C64], psi: &[C64]) -> Result<C64, AssemblyError> {
        let r_psi = self.apply_at(self.grid.nodes(), psi)?;
        Ok(weighted_dot(self.grid.weights(), phi, &r_psi))
    }

    /// Kernel value `R(z, z')`.  Accurate when `z'` lies off the potential
    /// support (the band right-hand side is then smooth); swap the arguments
    /// otherwise, the kernel being symmetric.
    pub fn kernel_at(&self, z: PlanePoint, zp: PlanePoint) -> Result<C64, AssemblyError> {
        if z == zp {
            return Err(KernelError::CoincidentPoints.into());
        }
        let k = self.inter.kernel();
        let mut val = k.eval(z.dist(&zp));
        if self.bands.dim() > 0 {
            let f: Vec<C64> = self.bands.panels.nodes.iter().map(|n| k.eval(n.dist(&zp))).collect();
            let c = self.band_coefficients(&f)?;
            val += self.inter.apply_at(z, &self.bands.panels, &c);
        }
        Ok(val)
    }

    /// `R(z_s, z_far)` for several near points and one far point.
    pub fn far_column(&self, near: &[PlanePoint], far: PlanePoint) -> Result<Vec<C64>, AssemblyError> {
        let k = self.inter.kernel();
        let c = if self.bands.dim() > 0 {
            let f: Vec<C64> = self.bands.panels.nodes.iter().map(|n| k.eval(n.dist(&far))).collect();
            self.band_coefficients(&f)?
        } else {
            Vec::new()
        };
        Ok(near
            .iter()
            .map(|z| {
                let mut v = k.eval(z.dist(&far));
                if !c.is_empty() {
                    v += self.inter.apply_at(*z, &self.bands.panels, &c);
                }
                v
            })
            .collect())
    }
}

fn weighted_dot(w: &[f64], phi: &[C64], psi: &[C64]) -> C64 {
    w.iter().zip(phi).zip(psi).map(|((w, a), b)| a.conj() * b * *w).sum()
}

/// `R(λ) = (H - λ)^{-1}` on the box, via `(I - G_X)^{-1}`.
pub fn full_resolvent_direct(lambda: C64, grid: &Grid2D, bands: &BandDiscretization) -> Result<GridOperator, AssemblyError> {
    ResolventAssembly::new(grid, bands, lambda)?.direct_resolvent()
}

/// `R(λ)` through the pair reflections and the compressed block system.
pub fn full_resolvent_schwartz(lambda: C64, grid: &Grid2D, bands: &BandDiscretization) -> Result<GridOperator, AssemblyError> {
    ResolventAssembly::new(grid, bands, lambda)?.schwartz_resolvent()
}

/// `⟨φ, R ψ⟩ = Σ_m w_m conj(φ_m) (Rψ)_m`; identical to the symmetric form
/// `(W^{1/2} φ)^* (W^{1/2} R W^{-1/2}) (W^{1/2} ψ)`.
pub fn weak_pairing(grid: &Grid2D, r: &GridOperator, phi: &[C64], psi: &[C64]) -> Result<C64, AssemblyError> {
    if phi.len() != grid.len() || psi.len() != grid.len() || r.matrix.nrows() != grid.len() {
        return Err(AssemblyError::InvalidInput("grid function length mismatch".into()));
    }
    Ok(weighted_dot(grid.weights(), phi, &r.apply(psi)))
}

/// Relative defect of the first resolvent identity tested against grid
/// functions: `⟨φ, (R(λ1) - R(λ2)) ψ⟩` versus `(λ1 - λ2) ⟨φ, R(λ1) R(λ2) ψ⟩`.
/// The composition runs over the box only, so truncation enters through the
/// part of `R(λ2) ψ` outside it.
pub fn first_resolvent_defect(
    a1: &ResolventAssembly<'_>,
    a2: &ResolventAssembly<'_>,
    phi: &[C64],
    psi: &[C64],
) -> Result<f64, AssemblyError> {
    let nodes = a1.grid().nodes();
    let u2 = a2.apply_at(nodes, psi)?;
    let u1 = a1.apply_at(nodes, psi)?;
    let u12 = a1.apply_at(nodes, &u2)?;
    let w = a1.grid().weights();
    let lhs = weighted_dot(w, phi, &u1) - weighted_dot(w, phi, &u2);
    let rhs = (a1.lambda() - a2.lambda()) * weighted_dot(w, phi, &u12);
    Ok((lhs - rhs).norm() / lhs.norm().max(1e-300))
}

/// Pairings along an `ε` ladder and their extrapolation to `ε → 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingRecord {
    pub energy: f64,
    pub eps: Vec<f64>,
    pub values: Vec<C64>,
    pub extrapolated: C64,
    pub error_estimate: f64,
}

impl PairingRecord {
    /// `|P(ε_{j+1}) - P(ε_j)|`.
    pub fn differences(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
    }
}

/// Checks a ladder: at least two strictly decreasing values, all `≥ MIN_EPS`.
pub fn check_ladder(ladder: &[f64]) -> Result<(), AssemblyError> {
    if ladder.len() < 2 {
        return Err(AssemblyError::InvalidInput("eps ladder needs at least two rungs".into()));
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(AssemblyError::InvalidInput("eps ladder must be strictly decreasing".into()));
    }
    if let Some(&e) = ladder.iter().find(|&&e| !(e >= MIN_EPS) || !e.is_finite()) {
        return Err(AssemblyError::InvalidInput(format!("eps {e} below the floor {MIN_EPS}")));
    }
    Ok(())
}

/// Polynomial (Richardson) extrapolation of `(ε_j, P_j)` to `ε = 0`; returns the
/// value from all points and the one from all but the first.
pub fn richardson_to_zero(eps: &[f64], values: &[C64]) -> (C64, C64) {
    let neville = |xs: &[f64], ys: &[C64]| -> C64 {
        let mut p = ys.to_vec();
        let n = xs.len();
        for m in 1..n {
            for j in 0..n - m {
                let (xa, xb) = (xs[j], xs[j + m]);
                p[j] = (p[j] * (-xb) - p[j + 1] * (-xa)) / (xa - xb);
            }
        }
        p[0]
    };
    let top = neville(eps, values);
    let prev = if eps.len() > 1 { neville(&eps[1..], &values[1..]) } else { top };
    (top, prev)
}

/// Fails when the last three differences do not decrease.
pub fn check_convergence(values: &[C64]) -> Result<(), AssemblyError> {
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    if diffs.len() >= 3 {
        let t = &diffs[diffs.len() - 3..];
        if t[1] >= t[0] && t[2] >= t[1] {
            return Err(AssemblyError::NoConvergence { diffs });
        }
    }
    Ok(())
}

/// `⟨φ, R(E + iε) φ⟩` along `ladder`, extrapolated to `ε → 0`.
pub fn limiting_absorption_sweep(
    grid: &Grid2D,
    bands: &BandDiscretization,
    energy: f64,
    window: (f64, f64),
    phi: &[C64],
    ladder: &[f64],
) -> Result<PairingRecord, AssemblyError> {
    if !(window.0 > 0.0 && window.0 <= energy && energy <= window.1) {
        return Err(AssemblyError::InvalidInput(format!("energy {energy} outside the window [{}, {}]", window.0, window.1)));
    }
    check_ladder(ladder)?;
    if phi.len() != grid.len() {
        return Err(AssemblyError::InvalidInput("test function length mismatch".into()));
    }
    let values = ladder
        .iter()
        .map(|&e| ResolventAssembly::new(grid, bands, C64::new(energy, e))?.pairing(phi, phi))
        .collect::<Result<Vec<_>, _>>()?;
    check_convergence(&values)?;
    let (extrapolated, prev) = richardson_to_zero(ladder, &values);
    Ok(PairingRecord { energy, eps: ladder.to_vec(), values, extrapolated, error_estimate: (extrapolated - prev).norm() })
}

/// Direction of the far point: angle from the `x` axis of `pair`'s frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarDirection {
    pub pair: usize,
    pub angle: f64,
}

impl FarDirection {
    /// Along the band of `pair`, towards `y → +∞` (`sign ≥ 0`) or `-∞`.
    pub fn along(pair: usize, sign: f64) -> Self {
        let a = std::f64::consts::FRAC_PI_2;
        FarDirection { pair, angle: if sign >= 0.0 { a } else { -a } }
    }

    fn point(&self, r: f64) -> PlanePoint {
        change_pair(PlanePoint::new(r * self.angle.cos(), r * self.angle.sin()), self.pair, 0)
    }
}

/// Far-field profile `ψ(x_s) = R(z_s, r ω) √r e^{-i√λ r}` with `z_s = (x_s, 0)`
/// in the frame of `direction.pair`, at `r = y_far` and `2 y_far`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionSamples {
    pub x: Vec<f64>,
    pub values: Vec<C64>,
    pub doubled: Vec<C64>,
    pub y_far: f64,
    pub relative_change: f64,
}

pub fn extract_eigenfunction(
    bands: &BandDiscretization,
    energy: f64,
    eps: f64,
    direction: FarDirection,
    y_far: f64,
    x_samples: &[f64],
) -> Result<EigenfunctionSamples, AssemblyError> {
    if !(energy > 0.0) || !(eps >= 0.0) {
        return Err(AssemblyError::InvalidInput(format!("need E > 0 and eps >= 0, got {energy}, {eps}")));
    }
    if direction.pair > 2 {
        return Err(KernelError::BadPair(direction.pair).into());
    }
    if !(y_far > 0.0) || x_samples.is_empty() {
        return Err(AssemblyError::InvalidInput("need y_far > 0 and at least one sample".into()));
    }
    let lambda = C64::new(energy, eps);
    // the box plays no role here; a minimal grid satisfies the assembly
    let grid = build_grid(bands.options.half_length.max(1.0), 2)?;
    let asm = ResolventAssembly::new(&grid, bands, lambda)?;
    let near: Vec<PlanePoint> = x_samples.iter().map(|&x| change_pair(PlanePoint::new(x, 0.0), direction.pair, 0)).collect();
    let k = sqrt_upper(lambda);
    let profile = |r: f64| -> Result<Vec<C64>, AssemblyError> {
        let col = asm.far_column(&near, direction.point(r))?;
        let norm = r.sqrt() * (-C64::i() * k * r).exp();
        Ok(col.into_iter().map(|v| v * norm).collect())
    };
    let values = profile(y_far)?;
    let doubled = profile(2.0 * y_far)?;
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let change = values.iter().zip(&doubled).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale.max(1e-300);
    let bound = FAR_FIELD_CONSTANT / y_far;
    if !(change <= bound) {
        return Err(AssemblyError::FarFieldUnstable { change, bound });
    }
    Ok(EigenfunctionSamples { x: x_samples.to_vec(), values, doubled, y_far, relative_change: change })
}

/// Residual of `(-Δ + V - λ) R φ = φ` on a uniform auxiliary grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilReport {
    pub spacing: f64,
    pub points: usize,
    pub excluded: usize,
    /// `‖r‖₂ / ‖φ‖₂` over the retained points.
    pub relative_residual: f64,
}

/// Evaluates `u = R φ` on the uniform grid of spacing `h` over `[-s, s]²` and
/// applies the five-point Laplacian.  Points within one stencil arm of a
/// potential discontinuity are left out, since the stencil is not consistent
/// there.
pub fn resolvent_identity_residual<F>(asm: &ResolventAssembly<'_>, phi: F, s: f64, h: f64) -> Result<StencilReport, AssemblyError>
where
    F: Fn(PlanePoint) -> C64 + Sync,
{
    if !(h > 0.0 && s > h) {
        return Err(AssemblyError::InvalidInput(format!("bad auxiliary grid s={s}, h={h}")));
    }
    let m = (2.0 * s / h).round() as usize + 1;
    let coord = |i: usize| -s + i as f64 * h;
    let pts: Vec<PlanePoint> = (0..m).flat_map(|i| (0..m).map(move |j| PlanePoint::new(coord(i), coord(j)))).collect();
    let phi_box = asm.grid().sample(&phi);
    let u = asm.apply_at(&pts, &phi_box)?;
    let (mut num, mut den, mut points, mut excluded) = (0.0, 0.0, 0usize, 0usize);
    for i in 1..m - 1 {
        for j in 1..m - 1 {
            let z = pts[i * m + j];
            if asm.bands().distance_to_breaks(z) <= h * (1.0 + 1e-9) {
                excluded += 1;
                continue;
            }
            let c = u[i * m + j];
            let lap = (u[(i - 1) * m + j] + u[(i + 1) * m + j] + u[i * m + j - 1] + u[i * m + j + 1] - 4.0 * c) / (h * h);
            let f = phi(z);
            let r = -lap + (asm.bands().potential_at(z) - asm.lambda()) * c - f;
            num += r.norm_sqr();
            den += f.norm_sqr();
            points += 1;
        }
    }
    Ok(StencilReport { spacing: h, points, excluded, relative_residual: (num / den.max(1e-300)).sqrt() })
}

#[cfg(test)]
mod tests;

/// `⟨φ, R0(E + i0) φ⟩` for `φ = e^{-|z|²/2σ²}` from momentum space:
/// `π σ⁴ [PV ∫_0^∞ e^{-σ²t}/(t - E) dt + iπ e^{-σ²E}]`.
pub fn free_gaussian_pairing(energy: f64, sigma: f64) -> Result<C64, AssemblyError> {
    if !(energy > 0.0 && sigma > 0.0) {
        return Err(AssemblyError::InvalidInput(format!("need E > 0 and σ > 0, got {energy}, {sigma}")));
    }
    let a = sigma * sigma;
    let g = |t: f64| (-a * t).exp();
    // subtract the pole on [0, 2E], where the remaining log term integrates to zero
    let near = Rule1D::composite(20, 0.0, 2.0 * energy, 40);
    let mut pv = near.integrate(|t| if (t - energy).abs() < 1e-15 { -a * g(t) } else { (g(t) - g(energy)) / (t - energy) });
    let tail_end = 2.0 * energy + 80.0 / a;
    pv += Rule1D::graded(20, 2.0 * energy, tail_end, 0.5, 1.0).integrate(|t| g(t) / (t - energy));
    Ok(std::f64::consts::PI * a * a * C64::new(pv, std::f64::consts::PI * g(energy)))
}

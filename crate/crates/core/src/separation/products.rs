//! Kernels of products `Γ_{p1} Γ_{p2} ⋯` of pair reflections, sampled on the
//! band of the leftmost pair.
//!
//! With `M_p = (I - G_pp)^{-1}` the single-band inverse and `K_{p←q}` the
//! corrected free-kernel interaction from band `q` to the nodes of band `p`,
//! the reflection `Γ_p = v_p R_p` acts on densities sampled on band `q` as
//! `M_p V_p K_{p←q}`.  Its kernel against a plane point `z'` is
//! `M_p V_p R0(·, z')`, so a product is built right to left.

use rayon::prelude::*;

use super::SeparationError;
use crate::assembly::{BandDiscretization, FreeKernel, Interactions, PanelSet, RESOLVENT_COND_CAP};
use crate::kernels2d::{change_pair, sqrt_upper, PlanePoint};
use crate::linalg::{checked_inverse, identity, matmul, CMatrix, C64};
use crate::onebody::PairPotential;
use crate::separation::CutoffFamily;

/// Where the second kernel argument is sampled.
#[derive(Debug, Clone)]
pub enum Columns {
    /// Kernel values at plane points.
    Points(Vec<PlanePoint>),
    /// Plane points on rays from the origin, angle-major.
    Rays { angles: Vec<f64>, radii: Vec<f64> },
    /// Nyström matrix against the nodes of the band of this pair (kernel × weight).
    Band(usize),
}

impl Columns {
    /// Geometric radii `r_0 q^m` filling `[r_0, r_1]` with `n` points.
    pub fn geometric_radii(r0: f64, r1: f64, n: usize) -> Vec<f64> {
        (0..n).map(|m| r0 * (r1 / r0).powf(m as f64 / (n.max(2) - 1) as f64)).collect()
    }

    fn points(&self) -> Option<Vec<PlanePoint>> {
        match self {
            Columns::Points(p) => Some(p.clone()),
            Columns::Rays { angles, radii } => {
                Some(angles.iter().flat_map(|a| radii.iter().map(move |r| PlanePoint::new(r * a.cos(), r * a.sin()))).collect())
            }
            Columns::Band(_) => None,
        }
    }
}

/// Sampled kernel of a reflection product.
#[derive(Debug, Clone)]
pub struct SampledProduct {
    /// Pair indices, leftmost first.
    pub sequence: Vec<usize>,
    /// Rows: nodes of the band of `sequence[0]`, in that pair's frame.
    pub rows_local: Vec<PlanePoint>,
    /// Untapered potential of the leftmost pair at each row.
    pub row_potential: Vec<f64>,
    /// Column points in the global frame.
    pub cols: Vec<PlanePoint>,
    /// Quadrature weights of the columns when sampled on a band.
    pub col_weights: Option<Vec<f64>>,
    /// Ray layout `(angles, radii)` of the columns, if sampled on rays.
    pub col_rays: Option<(Vec<f64>, Vec<f64>)>,
    /// Untapered potential of the leftmost pair (zero if absent).
    pub potential: PairPotential,
    pub values: CMatrix,
}

impl SampledProduct {
    pub fn pair(&self) -> usize {
        self.sequence[0]
    }

    /// Kernel values, dividing out column weights for band columns.
    pub fn kernel_values(&self) -> CMatrix {
        match &self.col_weights {
            None => self.values.clone(),
            Some(w) => {
                let mut k = self.values.clone();
                for (c, &wc) in w.iter().enumerate() {
                    k.column_mut(c).unscale_mut(wc);
                }
                k
            }
        }
    }
}

/// Single-band inverses for all bands at one spectral parameter.
#[derive(Debug)]
pub struct ReflectionFactors<'a> {
    bands: &'a BandDiscretization,
    lambda: C64,
    inter: Interactions,
    cutoff: Option<CutoffFamily>,
    /// `M_p V_p` per band.
    left: Vec<CMatrix>,
    sub: Vec<PanelSet>,
}

impl<'a> ReflectionFactors<'a> {
    pub fn new(bands: &'a BandDiscretization, lambda: C64) -> Result<Self, SeparationError> {
        if !(lambda.re.is_finite() && lambda.im > 0.0) {
            return Err(SeparationError::InvalidInput(format!("spectral parameter {lambda} must lie in the upper half-plane")));
        }
        let reach = 2.0 * 2f64.sqrt() * bands.options.half_length + 4.0;
        let inter = Interactions::new(FreeKernel::new(sqrt_upper(lambda), reach));
        let cutoff = bands.options.cutoff.map(CutoffFamily::new).transpose()?;
        let sub: Vec<PanelSet> = bands.ranges.iter().map(|r| sub_panels(&bands.panels, r.clone())).collect();
        let mut left = Vec::with_capacity(sub.len());
        for (b, r) in bands.ranges.iter().enumerate() {
            let v = &bands.potential[r.clone()];
            let mut g = inter.matrix(&sub[b].nodes, &sub[b]);
            for (row, &vr) in v.iter().enumerate() {
                g.row_mut(row).scale_mut(vr);
            }
            // I - G_pp = I + V K
            let m = checked_inverse(&(identity(r.len()) + g), RESOLVENT_COND_CAP)
                .map_err(|e| SeparationError::Singular(e.to_string()))?;
            let mut mv = m;
            for (c, &vc) in v.iter().enumerate() {
                mv.column_mut(c).scale_mut(vc);
            }
            left.push(mv);
        }
        Ok(ReflectionFactors { bands, lambda, inter, cutoff, left, sub })
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn bands(&self) -> &BandDiscretization {
        self.bands
    }

    fn band_of(&self, pair: usize) -> Option<usize> {
        self.bands.terms.iter().position(|t| t.pair == pair)
    }

    /// `[Γ_p]_{p←q}`, the reflection of pair `p` acting on band-`q` densities.
    /// `None` when either potential vanishes.
    pub fn block(&self, p: usize, q: usize) -> Option<CMatrix> {
        let (bp, bq) = (self.band_of(p)?, self.band_of(q)?);
        let k = self.inter.matrix(&self.sub[bp].nodes, &self.sub[bq]);
        Some(matmul(&self.left[bp], &k))
    }

    /// The block operator with `[Γ_p]_{p←q}` off the diagonal and zero blocks
    /// on it, over all bands in their storage order.
    pub fn block_operator(&self) -> CMatrix {
        let n = self.bands.dim();
        let mut m = CMatrix::zeros(n, n);
        for (bp, rp) in self.bands.ranges.iter().enumerate() {
            for (bq, rq) in self.bands.ranges.iter().enumerate() {
                if bp != bq {
                    let k = self.inter.matrix(&self.sub[bp].nodes, &self.sub[bq]);
                    m.view_mut((rp.start, rq.start), (rp.len(), rq.len())).copy_from(&matmul(&self.left[bp], &k));
                }
            }
        }
        m
    }

    /// `G = -V R0` on the union of the bands.
    pub fn g_matrix(&self) -> CMatrix {
        let mut g = self.inter.matrix(&self.bands.panels.nodes, &self.bands.panels);
        for (row, &v) in self.bands.potential.iter().enumerate() {
            g.row_mut(row).scale_mut(-v);
        }
        g
    }

    /// The product kernel for `sequence` (leftmost first), rows on the band
    /// of `sequence[0]`.  A vanishing factor gives the zero kernel.
    pub fn product(&self, sequence: &[usize], cols: &Columns) -> Result<SampledProduct, SeparationError> {
        check_sequence(sequence)?;
        let first = sequence[0];
        let (rows_local, row_potential, potential) = match self.band_of(first) {
            Some(b) => {
                let r = self.bands.ranges[b].clone();
                let pot = self.bands.terms[b].potential.clone();
                let local = self.bands.local[r].to_vec();
                let v = local.iter().map(|z| pot.eval(z.x)).collect();
                (local, v, pot)
            }
            None => (Vec::new(), Vec::new(), PairPotential::zero()),
        };
        let (col_points, col_weights) = match (cols.points(), cols) {
            (Some(p), _) => (p, None),
            (None, Columns::Band(q)) => match self.band_of(*q) {
                Some(b) => (self.sub[b].nodes.clone(), Some(self.sub[b].weights.clone())),
                None => (Vec::new(), Some(Vec::new())),
            },
            (None, _) => unreachable!("only band columns lack points"),
        };
        let col_rays = match cols {
            Columns::Rays { angles, radii } => Some((angles.clone(), radii.clone())),
            _ => None,
        };
        let zero = |rows: usize| CMatrix::zeros(rows, col_points.len());
        let bands: Option<Vec<usize>> = sequence.iter().map(|&p| self.band_of(p)).collect();
        let values = match bands {
            None => zero(rows_local.len()),
            Some(bs) if col_points.is_empty() => zero(self.sub[bs[0]].len()),
            Some(bs) => {
                let last = *bs.last().expect("sequence is non-empty");
                let mut acc = match cols {
                    Columns::Band(q) => {
                        let bq = self.band_of(*q).expect("checked above");
                        matmul(&self.left[last], &self.inter.matrix(&self.sub[last].nodes, &self.sub[bq]))
                    }
                    _ => matmul(&self.left[last], &self.point_columns(last, &col_points)),
                };
                for w in bs.windows(2).rev() {
                    let k = self.inter.matrix(&self.sub[w[0]].nodes, &self.sub[w[1]]);
                    acc = matmul(&self.left[w[0]], &matmul(&k, &acc));
                }
                acc
            }
        };
        Ok(SampledProduct {
            sequence: sequence.to_vec(),
            rows_local,
            row_potential,
            cols: col_points,
            col_weights,
            col_rays,
            potential,
            values,
        })
    }

    /// Plain free kernel `R0(ζ_n, z')` from the nodes of band `b` to points.
    fn point_columns(&self, b: usize, points: &[PlanePoint]) -> CMatrix {
        let k = self.inter.kernel();
        let nodes = &self.sub[b].nodes;
        CMatrix::from_fn(nodes.len(), points.len(), |m, c| k.eval(nodes[m].dist(&points[c])))
    }

    /// Evaluates a product kernel at arbitrary row points `z` (global frame):
    /// `(Γ_p g)(z) = v_p(z) [ (R0 g)(z) - (R0 Γ_p g)(z) ]`, where `g` is the
    /// kernel of the remaining factors on band `sequence[1]` (or `R0(·, z')`
    /// for a single factor).  Only point columns are supported.
    pub fn product_at(&self, sequence: &[usize], rows: &[PlanePoint], cols: &[PlanePoint]) -> Result<CMatrix, SeparationError> {
        check_sequence(sequence)?;
        let p = sequence[0];
        let Some(bp) = self.band_of(p) else {
            return Ok(CMatrix::zeros(rows.len(), cols.len()));
        };
        let on_band = self.product(sequence, &Columns::Points(cols.to_vec()))?.values;
        let tail = if sequence.len() > 1 {
            let rest = self.product(&sequence[1..], &Columns::Points(cols.to_vec()))?.values;
            Some((self.band_of(sequence[1]), rest))
        } else {
            None
        };
        let pot = &self.bands.terms[bp].potential;
        let kernel = self.inter.kernel();
        let out: Vec<Vec<C64>> = rows
            .par_iter()
            .map(|&z| {
                let loc = change_pair(z, 0, p);
                let taper = self.cutoff.map_or(1.0, |c| c.chi(loc.y));
                let v = pot.eval(loc.x) * taper;
                if v == 0.0 {
                    return vec![C64::new(0.0, 0.0); cols.len()];
                }
                let own = self.inter.row(z, &self.sub[bp]);
                let free: Option<Vec<C64>> = match &tail {
                    Some((Some(bq), _)) => Some(self.inter.row(z, &self.sub[*bq])),
                    _ => None,
                };
                (0..cols.len())
                    .map(|c| {
                        let g = match (&tail, &free) {
                            (Some((Some(_), rest)), Some(f)) => f.iter().zip(rest.column(c).iter()).map(|(a, b)| a * b).sum(),
                            (Some((None, _)), _) => C64::new(0.0, 0.0),
                            _ => kernel.eval(z.dist(&cols[c])),
                        };
                        let back: C64 = own.iter().zip(on_band.column(c).iter()).map(|(a, b)| a * b).sum();
                        v * (g - back)
                    })
                    .collect()
            })
            .collect();
        Ok(CMatrix::from_fn(rows.len(), cols.len(), |r, c| out[r][c]))
    }
}

fn check_sequence(sequence: &[usize]) -> Result<(), SeparationError> {
    if sequence.is_empty() || sequence.iter().any(|&p| p > 2) {
        return Err(SeparationError::InvalidInput(format!("bad pair sequence {sequence:?}")));
    }
    Ok(())
}

/// The panels of one band as a standalone set.
fn sub_panels(all: &PanelSet, range: std::ops::Range<usize>) -> PanelSet {
    let mut set = PanelSet::default();
    for p in all.panels.iter().filter(|p| p.first >= range.start && p.first < range.end) {
        set.push(p.center, p.axis_s, p.axis_t, p.half, p.order);
    }
    set
}

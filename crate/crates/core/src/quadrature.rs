//! Gauss–Legendre rules and composite variants on intervals.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights.
pub type Rule = (Vec<f64>, Vec<f64>);

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("rule needs a node"));
            let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(pairs.into_iter().unzip())
        })
        .clone()
}

/// A one-dimensional quadrature rule (nodes, weights).
#[derive(Debug, Clone, Default)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1D {
    pub fn gauss(n: usize, a: f64, b: f64) -> Self {
        let mut r = Rule1D::default();
        r.push_panel(n, a, b);
        r
    }

    /// Uniform composite rule with `panels` panels of `n` points each.
    pub fn composite(n: usize, a: f64, b: f64, panels: usize) -> Self {
        let mut r = Rule1D::default();
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            r.push_panel(n, a + p as f64 * h, a + (p + 1) as f64 * h);
        }
        r
    }

    /// Composite rule over the given breakpoints.
    pub fn over_breaks(n: usize, breaks: &[f64]) -> Self {
        let mut r = Rule1D::default();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                r.push_panel(n, w[0], w[1]);
            }
        }
        r
    }

    /// Composite rule on `[a, b]` geometrically graded toward `a`
    /// (panel lengths shrink by `ratio` down to about `min_len`).
    pub fn graded(n: usize, a: f64, b: f64, ratio: f64, min_len: f64) -> Self {
        let mut breaks = vec![b];
        let mut len = (b - a) * (1.0 - ratio);
        let mut x = b;
        while len > min_len && x - len > a {
            x -= len;
            breaks.push(x);
            len *= ratio;
        }
        breaks.push(a);
        breaks.reverse();
        Rule1D::over_breaks(n, &breaks)
    }

    pub fn push_panel(&mut self, n: usize, a: f64, b: f64) {
        let gl = gauss_legendre(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        for (t, w) in gl.0.iter().zip(gl.1.iter()) {
            self.nodes.push(mid + half * t);
            self.weights.push(half * w);
        }
    }

    pub fn append(&mut self, other: &Rule1D) {
        self.nodes.extend_from_slice(&other.nodes);
        self.weights.extend_from_slice(&other.weights);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(f64) -> T,
    {
        self.nodes.iter().zip(self.weights.iter()).fold(T::default(), |acc, (&x, &w)| acc + f(x) * w)
    }
}

/// Barycentric Lagrange basis on a fixed node set.
#[derive(Debug, Clone)]
pub struct Lagrange {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl Lagrange {
    pub fn new(nodes: &[f64]) -> Self {
        let bary = (0..nodes.len())
            .map(|j| {
                let p: f64 = (0..nodes.len()).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
                1.0 / p
            })
            .collect();
        Lagrange { nodes: nodes.to_vec(), bary }
    }

    /// Values of all basis polynomials at `x`, written into `out`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        for (j, &xj) in self.nodes.iter().enumerate() {
            if x == xj {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[j] = 1.0;
                return;
            }
        }
        let mut denom = 0.0;
        for (j, &xj) in self.nodes.iter().enumerate() {
            let t = self.bary[j] / (x - xj);
            out[j] = t;
            denom += t;
        }
        out.iter_mut().for_each(|o| *o /= denom);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        let r = Rule1D::gauss(6, -1.0, 2.0);
        let v: f64 = r.integrate(|x| x.powi(11));
        let exact = (2f64.powi(12) - 1.0) / 12.0;
        assert!((v - exact).abs() < 1e-11 * exact);
    }

    #[test]
    fn graded_rule_handles_log_endpoint() {
        let r = Rule1D::graded(12, 0.0, 1.0, 0.2, 1e-12);
        let v: f64 = r.integrate(|x| x.ln());
        assert!((v + 1.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn lagrange_partition_of_unity() {
        let gl = gauss_legendre(7);
        let l = Lagrange::new(&gl.0);
        let mut out = vec![0.0; 7];
        l.eval_into(0.3141, &mut out);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let p: f64 = out.iter().zip(gl.0.iter()).map(|(o, x)| o * x.powi(5)).sum();
        assert!((p - 0.3141f64.powi(5)).abs() < 1e-14);
    }
}

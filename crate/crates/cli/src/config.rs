//! Run configuration: JSON schema, defaults and range validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tribody_core::assembly::{identical_pairs, PairTerm, MIN_EPS};
use tribody_core::onebody::PairPotential;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
    #[error("{}", format_violations(.0))]
    Invalid(Vec<FieldError>),
}

/// One range or consistency violation, keyed by the dotted field path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

fn format_violations(v: &[FieldError]) -> String {
    v.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("; ")
}

impl ConfigError {
    /// Field paths named by the error.
    pub fn fields(&self) -> Vec<String> {
        match self {
            ConfigError::Read { .. } => Vec::new(),
            ConfigError::Schema { field, .. } => vec![field.clone()],
            ConfigError::Invalid(v) => v.iter().map(|e| e.field.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    /// Barrier of height `height` on `[-a, a]`.
    Square {
        height: f64,
        a: f64,
    },
    /// Gaussian of width `width` cut off at `|x| = a`.
    Gaussian {
        height: f64,
        width: f64,
        a: f64,
    },
    /// Two-column `x v` table; relative paths resolve against the config file.
    Tabulated {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpec {
    /// `[c1, c2]`.
    pub window: [f64; 2],
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Box `[-L, L]²`.
    pub half_width: f64,
    pub n_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchwartzSpec {
    pub systems: usize,
    pub dim: usize,
    pub n: usize,
    pub norm: f64,
    pub tolerance: f64,
}

impl Default for SchwartzSpec {
    fn default() -> Self {
        SchwartzSpec { systems: 100, dim: 6, n: 3, norm: 0.2, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OneBodySpec {
    pub k_min: f64,
    pub k_max: f64,
    pub k_points: usize,
    /// Points of `[-a, a]` where the Jost solutions are sampled.
    pub x_points: usize,
}

impl Default for OneBodySpec {
    fn default() -> Self {
        OneBodySpec { k_min: 0.2, k_max: 5.0, k_points: 40, x_points: 9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSpec {
    pub radii: Vec<f64>,
    pub eps: f64,
    /// Observation point `(x, 0)`.
    pub observer_x: f64,
    /// Direction of the source point `r · direction`, normalized on load.
    pub direction: [f64; 2],
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec { radii: vec![25.0, 50.0, 100.0], eps: 0.01, observer_x: 0.3, direction: [0.6, 0.8] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolventSpec {
    /// Width of the Gaussian test function.
    pub sigma: f64,
    /// Uniform stencil grid on `[-s, s]²` with spacing `h`, at the first rung.
    pub stencil_half_width: f64,
    pub stencil_spacing: f64,
}

impl Default for ResolventSpec {
    fn default() -> Self {
        ResolventSpec { sigma: 1.0, stencil_half_width: 2.0, stencil_spacing: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub sigma: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { sigma: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenfunctionSpec {
    pub eps: f64,
    pub pair: usize,
    /// Far direction, radians from the `x` axis of `pair`'s frame.  Along the
    /// band (`±π/2`) a barrier kernel decays faster than an outgoing wave.
    pub angle: f64,
    pub y_far: f64,
    pub x_max: f64,
    pub x_points: usize,
    /// Band half-length used for the far column.
    pub band_half_length: f64,
}

impl Default for EigenfunctionSpec {
    fn default() -> Self {
        EigenfunctionSpec {
            eps: 0.01,
            pair: 0,
            angle: std::f64::consts::FRAC_PI_6,
            y_far: 40.0,
            x_max: 1.0,
            x_points: 9,
            band_half_length: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparationSpec {
    pub eps: f64,
    /// Cutoff radii of the triple-product sweep.
    pub t_values: Vec<f64>,
    pub guard_delta: f64,
    /// Bound on the random Gram scalars of the finite-rank check.
    pub gram_scale: f64,
    pub probes: usize,
    /// Optional JSON file with an explicit finite-rank system.
    pub finite_rank_system: Option<PathBuf>,
    pub power_iterations: usize,
}

impl Default for SeparationSpec {
    fn default() -> Self {
        SeparationSpec {
            eps: 0.01,
            t_values: vec![4.0, 6.0, 8.0, 12.0],
            guard_delta: 0.1,
            gram_scale: 0.05,
            probes: 8,
            finite_rank_system: None,
            power_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolderSpec {
    pub mu: f64,
    pub theta: f64,
    /// Sample box `[-extent, extent]²`.
    pub extent: f64,
    /// Points per axis, one row of the refinement table each.
    pub points: Vec<usize>,
    pub reach: isize,
}

impl Default for HolderSpec {
    fn default() -> Self {
        HolderSpec { mu: 0.5, theta: 0.5, extent: 4.0, points: vec![41, 81, 161], reach: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqSpec {
    pub p: f64,
    pub mu: f64,
    pub q_values: Vec<f64>,
    /// Samples per side (power of two) and spacing.
    pub n_side: usize,
    pub spacing: f64,
    /// Random directions added to the coordinate axes.
    pub random_directions: usize,
}

impl Default for LqSpec {
    fn default() -> Self {
        LqSpec { p: 1.5, mu: 5.0 / 6.0, q_values: vec![1.5, 0.5], n_side: 512, spacing: 1.0 / 32.0, random_directions: 2 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    pub holder: HolderSpec,
    pub lq: LqSpec,
}

fn default_cutoff() -> f64 {
    6.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_pairs() -> Vec<usize> {
    vec![0, 1, 2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub energy: EnergySpec,
    pub eps_ladder: Vec<f64>,
    pub grid: GridSpec,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Interacting pairs (0, 1, 2).
    #[serde(default = "default_pairs")]
    pub pairs: Vec<usize>,
    #[serde(default)]
    pub schwartz: SchwartzSpec,
    #[serde(default)]
    pub onebody: OneBodySpec,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub resolvent: ResolventSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub eigenfunction: EigenfunctionSpec,
    #[serde(default)]
    pub separation: SeparationSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    /// Directory of the file this was loaded from; not part of the schema.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// The default three-barrier configuration.
    pub fn default_three_barrier() -> Self {
        RunConfig {
            potential: PotentialSpec::Square { height: 1.0, a: 0.5 },
            energy: EnergySpec { window: [0.5, 2.0], target: 1.0 },
            eps_ladder: vec![0.2, 0.1, 0.05],
            grid: GridSpec { half_width: 6.0, n_per_axis: 24 },
            cutoff: default_cutoff(),
            output_dir: default_output_dir(),
            seed: 0,
            pairs: default_pairs(),
            schwartz: SchwartzSpec::default(),
            onebody: OneBodySpec::default(),
            channel: ChannelSpec::default(),
            resolvent: ResolventSpec::default(),
            sweep: SweepSpec::default(),
            eigenfunction: EigenfunctionSpec::default(),
            separation: SeparationSpec::default(),
            analysis: AnalysisSpec::default(),
            base_dir: PathBuf::new(),
        }
    }

    /// Parses JSON text; schema errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.to_string();
            // a missing field is reported at its parent; name the field itself
            let field = match missing_field(&message) {
                Some(name) if path == "." => name,
                Some(name) => format!("{path}.{name}"),
                None => path,
            };
            ConfigError::Schema { field, message }
        })
    }

    /// Reads, parses and validates a file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg.normalized())
    }

    /// The configuration with derived quantities made canonical.
    pub fn normalized(mut self) -> Self {
        let [dx, dy] = self.channel.direction;
        let n = dx.hypot(dy);
        if n > 0.0 {
            self.channel.direction = [dx / n, dy / n];
        }
        self
    }

    /// Physical ranges and consistency; all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Violations::default();
        let pos = |x: f64| x.is_finite() && x > 0.0;

        match &self.potential {
            PotentialSpec::Zero => {}
            PotentialSpec::Square { height, a } => {
                v.check(pos(*height), "potential.height", "must be positive");
                v.check(pos(*a), "potential.a", "must be positive");
            }
            PotentialSpec::Gaussian { height, width, a } => {
                v.check(pos(*height), "potential.height", "must be positive");
                v.check(pos(*width), "potential.width", "must be positive");
                v.check(pos(*a), "potential.a", "must be positive");
            }
            PotentialSpec::Tabulated { path } => {
                if let Err(e) = PairPotential::load_tabulated(&self.resolve(path)) {
                    v.push("potential.path", e.to_string());
                }
            }
        }

        let [c1, c2] = self.energy.window;
        if !(pos(c1) && c2.is_finite() && c1 < c2) {
            v.push("energy.window", format!("need 0 < c1 < c2, got [{c1}, {c2}]"));
        }
        let e = self.energy.target;
        if !(e.is_finite() && c1 <= e && e <= c2) {
            v.push("energy.target", format!("E = {e} outside the window [{c1}, {c2}]"));
        }

        let l = &self.eps_ladder;
        if l.len() < 2 {
            v.push("eps_ladder", "needs at least two values");
        } else if l.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less)) {
            v.push("eps_ladder", "must be strictly decreasing");
        }
        if let Some(x) = l.iter().find(|&&x| !(x.is_finite() && x >= MIN_EPS)) {
            v.push("eps_ladder", format!("value {x} below the floor {MIN_EPS}"));
        }

        v.check(pos(self.grid.half_width), "grid.half_width", "must be positive");
        v.check(self.grid.n_per_axis >= 2, "grid.n_per_axis", "must be at least 2");
        v.check(pos(self.cutoff), "cutoff", "must be positive");
        v.check(!self.output_dir.as_os_str().is_empty(), "output_dir", "must not be empty");
        let mut seen = [false; 3];
        if self.pairs.is_empty() {
            v.push("pairs", "needs at least one pair");
        }
        for &p in &self.pairs {
            if p > 2 {
                v.push("pairs", format!("pair index {p} out of range 0..3"));
            } else if std::mem::replace(&mut seen[p], true) {
                v.push("pairs", format!("pair {p} listed twice"));
            }
        }

        let s = &self.schwartz;
        v.check(s.systems >= 1, "schwartz.systems", "must be at least 1");
        v.check(s.dim >= 1, "schwartz.dim", "must be at least 1");
        v.check(s.n >= 2, "schwartz.n", "must be at least 2");
        v.check(pos(s.norm) && s.norm < 1.0, "schwartz.norm", "must lie in (0, 1)");
        v.check(pos(s.tolerance), "schwartz.tolerance", "must be positive");

        let o = &self.onebody;
        v.check(pos(o.k_min), "onebody.k_min", "must be positive");
        v.check(o.k_max.is_finite() && o.k_max > o.k_min, "onebody.k_max", "must exceed k_min");
        v.check(o.k_points >= 2, "onebody.k_points", "must be at least 2");
        v.check(o.x_points >= 2, "onebody.x_points", "must be at least 2");

        let c = &self.channel;
        v.check(c.radii.len() >= 2, "channel.radii", "needs at least two radii");
        v.check(c.radii.iter().all(|&r| pos(r)), "channel.radii", "must be positive");
        v.check(c.radii.windows(2).all(|w| w[1] > w[0]), "channel.radii", "must be increasing");
        v.check(c.eps.is_finite() && c.eps >= 0.0, "channel.eps", "must be non-negative");
        v.check(c.observer_x.is_finite(), "channel.observer_x", "must be finite");
        v.check(pos(c.direction[0].hypot(c.direction[1])), "channel.direction", "must be a non-zero vector");

        let r = &self.resolvent;
        v.check(pos(r.sigma), "resolvent.sigma", "must be positive");
        v.check(pos(r.stencil_spacing), "resolvent.stencil_spacing", "must be positive");
        v.check(
            r.stencil_half_width.is_finite() && r.stencil_half_width > r.stencil_spacing,
            "resolvent.stencil_half_width",
            "must exceed the stencil spacing",
        );
        v.check(pos(self.sweep.sigma), "sweep.sigma", "must be positive");

        let f = &self.eigenfunction;
        v.check(f.eps.is_finite() && f.eps >= 0.0, "eigenfunction.eps", "must be non-negative");
        v.check(f.pair <= 2, "eigenfunction.pair", "must be 0, 1 or 2");
        v.check(f.angle.is_finite(), "eigenfunction.angle", "must be finite");
        v.check(pos(f.y_far), "eigenfunction.y_far", "must be positive");
        v.check(pos(f.x_max), "eigenfunction.x_max", "must be positive");
        v.check(f.x_points >= 2, "eigenfunction.x_points", "must be at least 2");
        v.check(pos(f.band_half_length), "eigenfunction.band_half_length", "must be positive");

        let p = &self.separation;
        v.check(p.eps.is_finite() && p.eps >= MIN_EPS, "separation.eps", "must be at least the ladder floor");
        v.check(!p.t_values.is_empty(), "separation.t_values", "needs at least one radius");
        v.check(p.t_values.iter().all(|&t| pos(t)), "separation.t_values", "must be positive");
        v.check(p.t_values.windows(2).all(|w| w[1] > w[0]), "separation.t_values", "must be increasing");
        v.check(pos(p.guard_delta), "separation.guard_delta", "must be positive");
        v.check(pos(p.gram_scale), "separation.gram_scale", "must be positive");
        v.check(p.probes >= 1, "separation.probes", "must be at least 1");
        v.check(p.power_iterations >= 2, "separation.power_iterations", "must be at least 2");
        if let Some(path) = &p.finite_rank_system {
            v.check(self.resolve(path).is_file(), "separation.finite_rank_system", "file not found");
        }

        let h = &self.analysis.holder;
        v.check(pos(h.mu) && h.mu < 1.0, "analysis.holder.mu", "must lie in (0, 1)");
        v.check(pos(h.theta) && h.theta < 1.0, "analysis.holder.theta", "must lie in (0, 1)");
        v.check(pos(h.extent), "analysis.holder.extent", "must be positive");
        v.check(!h.points.is_empty() && h.points.iter().all(|&n| n >= 3), "analysis.holder.points", "need values of at least 3");
        v.check(h.reach >= 1, "analysis.holder.reach", "must be at least 1");

        let q = &self.analysis.lq;
        v.check(q.p > 1.0 && q.p < 2.0, "analysis.lq.p", "must lie in (1, 2)");
        v.check(pos(q.mu) && q.mu < 1.0, "analysis.lq.mu", "must lie in (0, 1)");
        v.check(!q.q_values.is_empty() && q.q_values.iter().all(|&x| pos(x)), "analysis.lq.q_values", "must be positive");
        v.check(q.n_side.is_power_of_two() && q.n_side >= 16, "analysis.lq.n_side", "must be a power of two, at least 16");
        v.check(pos(q.spacing), "analysis.lq.spacing", "must be positive");

        v.finish()
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn pair_potential(&self) -> Result<PairPotential, ConfigError> {
        Ok(match &self.potential {
            PotentialSpec::Zero => PairPotential::zero(),
            PotentialSpec::Square { height, a } => PairPotential::square(*height, *a),
            PotentialSpec::Gaussian { height, width, a } => PairPotential::truncated_gaussian(*height, *width, *a),
            PotentialSpec::Tabulated { path } => PairPotential::load_tabulated(&self.resolve(path))
                .map_err(|e| ConfigError::Invalid(vec![FieldError { field: "potential.path".into(), message: e.to_string() }]))?,
        })
    }

    /// The same pair potential on every configured pair.
    pub fn pair_terms(&self) -> Result<Vec<PairTerm>, ConfigError> {
        let v = self.pair_potential()?;
        Ok(identical_pairs(&v).into_iter().filter(|t| self.pairs.contains(&t.pair)).collect())
    }
}

fn missing_field(message: &str) -> Option<String> {
    let rest = message.strip_prefix("missing field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

#[derive(Default)]
struct Violations(Vec<FieldError>);

impl Violations {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(FieldError { field: field.into(), message: message.into() });
    }

    fn check(&mut self, ok: bool, field: &str, message: &str) {
        if !ok {
            self.push(field, message);
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(self.0))
        }
    }
}

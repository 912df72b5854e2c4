//! Growth of preferential attachment graphs with additive fitness.
//!
//! Vertices carry 1-based labels (`Vertex`), edges point from the younger
//! (larger) vertex to the older one, and a vertex `i` attracts new edges with
//! weight `Z_n(i) + F_i`. Four dynamics are available:
//!
//! * `Paffd { m }`: `m` half-edges drawn i.i.d. with the weights frozen at `G_n`.
//! * `Pafud { m }`: `m` half-edges drawn sequentially, each draw seeing the
//!   degrees updated by the previous ones.
//! * `PafroSingleEdge`: one edge per step (the `m = 1` case of both of the above).
//! * `PafroBernoulli`: every existing vertex is hit independently with
//!   probability `(Z_n(i) + F_i)/(m0 + (n − n0) + S_n)`.
//!
//! Per step, the fitness of the new vertex is drawn first and the attachment
//! draws follow, all from the caller's stream.

mod weight_index;

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::FitnessSpec;

pub use weight_index::WeightIndex;

/// Attachment dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelKind {
    #[serde(rename = "PAFRO_Bernoulli")]
    PafroBernoulli,
    #[serde(rename = "PAFRO_SingleEdge")]
    PafroSingleEdge,
    #[serde(rename = "PAFFD")]
    Paffd { m: u32 },
    #[serde(rename = "PAFUD")]
    Pafud { m: u32 },
}

impl ModelKind {
    /// Out-degree parameter `m` (1 for the random-out-degree variants).
    pub fn m(&self) -> u32 {
        match *self {
            ModelKind::PafroBernoulli | ModelKind::PafroSingleEdge => 1,
            ModelKind::Paffd { m } | ModelKind::Pafud { m } => m,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::PafroBernoulli => "PAFRO_Bernoulli",
            ModelKind::PafroSingleEdge => "PAFRO_SingleEdge",
            ModelKind::Paffd { .. } => "PAFFD",
            ModelKind::Pafud { .. } => "PAFUD",
        }
    }

    pub fn is_pafro(&self) -> bool {
        matches!(self, ModelKind::PafroBernoulli | ModelKind::PafroSingleEdge)
    }

    /// Whether every step adds exactly `m` edges.
    pub fn fixed_out_degree(&self) -> bool {
        !matches!(self, ModelKind::PafroBernoulli)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m() == 0 {
            return Err(Error::InvalidArgument("out-degree m must be at least 1".into()));
        }
        Ok(())
    }
}

/// 1-based vertex label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vertex(u32);

impl Vertex {
    /// Panics on label 0.
    pub fn new(label: u32) -> Self {
        assert!(label >= 1, "vertex labels start at 1");
        Vertex(label)
    }

    pub fn from_index(index: usize) -> Self {
        Vertex(index as u32 + 1)
    }

    pub fn label(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl std::fmt::Display for Vertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Shape of the seed graph `G_{n0}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeedTopology {
    /// Edges `i → 1` for `i = 2..n0`.
    Star,
    /// Edges `i + 1 → i` for `i = 1..n0−1`.
    #[default]
    Path,
    /// Explicit `(source, target)` pairs with `source > target`.
    EdgeList(Vec<(u32, u32)>),
}

impl SeedTopology {
    fn edges(&self, n0: u32) -> Vec<(u32, u32)> {
        match self {
            SeedTopology::Star => (2..=n0).map(|i| (i, 1)).collect(),
            SeedTopology::Path => (1..n0).map(|i| (i + 1, i)).collect(),
            SeedTopology::EdgeList(list) => list.clone(),
        }
    }
}

/// Where vertex fitness values come from.
#[derive(Debug, Clone)]
pub enum FitnessPlan {
    /// Fresh i.i.d. draws from the law.
    Random(FitnessSpec),
    /// A fixed sequence: vertex `i` gets entry `i − 1`.
    Preset(Arc<[f64]>),
}

impl FitnessPlan {
    fn draw<R: Rng + ?Sized>(&self, label: usize, rng: &mut R) -> Result<f64> {
        match self {
            FitnessPlan::Random(spec) => Ok(spec.sample(rng)),
            FitnessPlan::Preset(values) => values.get(label - 1).copied().ok_or_else(|| {
                Error::InvalidArgument(format!("preset fitness sequence has no entry for vertex {label}"))
            }),
        }
    }

    pub fn spec(&self) -> Option<&FitnessSpec> {
        match self {
            FitnessPlan::Random(spec) => Some(spec),
            FitnessPlan::Preset(_) => None,
        }
    }
}

impl From<FitnessSpec> for FitnessPlan {
    fn from(spec: FitnessSpec) -> Self {
        FitnessPlan::Random(spec)
    }
}


/// A growing PAF graph.
#[derive(Debug, Clone)]
pub struct GraphState {
    model: ModelKind,
    n0: usize,
    m0: u64,
    fitness: Vec<f64>,
    indeg: Vec<u32>,
    seed_indeg: Vec<u32>,
    /// `S_j` for `j = 1..=n`, accumulated sequentially.
    fitness_prefix: Vec<f64>,
    edges_total: u64,
    index: WeightIndex,
    max_weight: f64,
    plan: FitnessPlan,
    seed_edges: Vec<(u32, u32)>,
    edge_log: Option<Vec<(u32, u32)>>,
    scratch: Vec<usize>,
}

/// Hook evaluated by `grow_to` at each checkpoint.
pub trait Observer {
    fn observe(&mut self, state: &GraphState);
}

impl<F: FnMut(&GraphState)> Observer for F {
    fn observe(&mut self, state: &GraphState) {
        self(state)
    }
}

/// Outcome of `grow_to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowReport {
    pub reached: usize,
    pub checkpoints_observed: usize,
    /// Set when the deadline stopped growth before the target.
    pub truncated: bool,
}

/// Build the seed graph `G_{n0}` and draw the fitness of its vertices.
pub fn init_graph<R: Rng + ?Sized>(
    n0: usize,
    topology: &SeedTopology,
    model: ModelKind,
    plan: impl Into<FitnessPlan>,
    rng: &mut R,
) -> Result<GraphState> {
    GraphState::init(n0, topology, model, plan.into(), rng)
}

// Below this many vertices the Bernoulli step loops over every vertex.
const BERNOULLI_DIRECT_MAX_N: usize = 32;

impl GraphState {
    pub fn init<R: Rng + ?Sized>(
        n0: usize,
        topology: &SeedTopology,
        model: ModelKind,
        plan: FitnessPlan,
        rng: &mut R,
    ) -> Result<Self> {
        model.validate()?;
        if let FitnessPlan::Random(spec) = &plan {
            spec.validate()?;
        }
        if n0 == 0 || n0 >= u32::MAX as usize {
            return Err(Error::InvalidSeed(format!("n0 = {n0} out of range")));
        }
        let edges = topology.edges(n0 as u32);
        if edges.is_empty() {
            return Err(Error::InvalidSeed("seed graph has no edges (m0 = 0)".into()));
        }
        let mut indeg = vec![0u32; n0];
        let mut seen = std::collections::HashSet::new();
        for &(src, dst) in &edges {
            if src <= dst {
                return Err(Error::InvalidSeed(format!(
                    "edge {src} -> {dst} must point from a larger to a smaller label"
                )));
            }
            if dst == 0 || src as usize > n0 {
                return Err(Error::InvalidSeed(format!("edge {src} -> {dst} outside [1, {n0}]")));
            }
            if !seen.insert((src, dst)) && model.is_pafro() {
                return Err(Error::InvalidSeed(format!(
                    "duplicate edge {src} -> {dst}: {} forbids multi-edges",
                    model.name()
                )));
            }
            indeg[dst as usize - 1] += 1;
        }
        let mut fitness = Vec::with_capacity(n0);
        for label in 1..=n0 {
            let f = plan.draw(label, rng)?;
            if !(f.is_finite() && f >= 0.0) {
                return Err(Error::InvalidArgument(format!("fitness of vertex {label} is {f}")));
            }
            fitness.push(f);
        }
        let mut edges = edges;
        edges.sort_unstable();
        Ok(Self::assemble(model, n0, edges.len() as u64, fitness, indeg.clone(), indeg, plan, edges))
    }

    /// A state with explicit degrees, used for hand-built and enumerated graphs.
    ///
    /// `indeg` and `fitness` describe `G_n` with `n = indeg.len() ≥ n0` and
    /// `m0` seed edges. `seed_indeg` gives `Z_{n0}` for vertices `1..=n0`
    /// and may be omitted when `n = n0`. Further growth reuses `fitness` as a
    /// preset sequence, so it fails past `n` unless `with_plan` replaces it.
    pub fn from_degrees(
        model: ModelKind,
        n0: usize,
        m0: u64,
        fitness: Vec<f64>,
        indeg: Vec<u32>,
        seed_indeg: Option<Vec<u32>>,
    ) -> Result<Self> {
        model.validate()?;
        let n = indeg.len();
        if fitness.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} fitness values for {n} vertices",
                fitness.len()
            )));
        }
        if n0 == 0 || n < n0 {
            return Err(Error::InvalidSeed(format!("need 1 <= n0 <= n, got n0 = {n0}, n = {n}")));
        }
        if m0 == 0 {
            return Err(Error::InvalidSeed("seed graph has no edges (m0 = 0)".into()));
        }
        if fitness.iter().any(|&f| !(f.is_finite() && f >= 0.0)) {
            return Err(Error::InvalidArgument("fitness values must be finite and nonnegative".into()));
        }
        let total: u64 = indeg.iter().map(|&d| d as u64).sum();
        if model.fixed_out_degree() {
            let expected = m0 + model.m() as u64 * (n - n0) as u64;
            if total != expected {
                return Err(Error::InvalidArgument(format!(
                    "in-degrees sum to {total}, but m0 + m(n - n0) = {expected}"
                )));
            }
        }
        let seed = match seed_indeg {
            Some(s) if s.len() == n0 => s,
            Some(s) => {
                return Err(Error::InvalidArgument(format!(
                    "seed in-degrees have length {}, expected n0 = {n0}",
                    s.len()
                )))
            }
            None if n == n0 => indeg.clone(),
            None => return Err(Error::InvalidArgument("seed in-degrees are required when n > n0".into())),
        };
        let preset: Arc<[f64]> = fitness.clone().into();
        Ok(Self::assemble(model, n0, m0, fitness, indeg, seed, FitnessPlan::Preset(preset), Vec::new()))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        model: ModelKind,
        n0: usize,
        m0: u64,
        fitness: Vec<f64>,
        indeg: Vec<u32>,
        seed_indeg: Vec<u32>,
        plan: FitnessPlan,
        seed_edges: Vec<(u32, u32)>,
    ) -> Self {
        let n = fitness.len();
        let mut index = WeightIndex::with_capacity(n);
        let mut fitness_prefix = Vec::with_capacity(n);
        let mut s = 0.0;
        let mut max_weight: f64 = 0.0;
        for (&f, &d) in fitness.iter().zip(&indeg) {
            s += f;
            fitness_prefix.push(s);
            index.push(d as u64, f);
            max_weight = max_weight.max(d as f64 + f);
        }
        let edges_total = indeg.iter().map(|&d| d as u64).sum();
        Self {
            model,
            n0,
            m0,
            fitness,
            indeg,
            seed_indeg,
            fitness_prefix,
            edges_total,
            index,
            max_weight,
            plan,
            seed_edges,
            edge_log: None,
            scratch: Vec::new(),
        }
    }

    /// Replace the source of fitness values for vertices added from now on.
    pub fn with_plan(mut self, plan: impl Into<FitnessPlan>) -> Self {
        self.plan = plan.into();
        self
    }

    /// Start recording `(child, parent)` pairs; seed edges are included when known.
    pub fn record_edges(&mut self) {
        if self.edge_log.is_none() {
            self.edge_log = Some(self.seed_edges.clone());
        }
    }

    pub fn reserve(&mut self, additional: usize) {
        self.fitness.reserve(additional);
        self.indeg.reserve(additional);
        self.fitness_prefix.reserve(additional);
    }

    pub fn n(&self) -> usize {
        self.fitness.len()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn m0(&self) -> u64 {
        self.m0
    }

    pub fn m(&self) -> u32 {
        self.model.m()
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn indeg(&self) -> &[u32] {
        &self.indeg
    }

    /// In-degrees `Z_{n0}(i)` of the seed vertices.
    pub fn seed_indeg(&self) -> &[u32] {
        &self.seed_indeg
    }

    /// `S_j` for `j = 1..=n` (entry `j − 1`).
    pub fn fitness_prefix(&self) -> &[f64] {
        &self.fitness_prefix
    }

    /// `S_n`.
    pub fn fitness_sum(&self) -> f64 {
        self.fitness_prefix.last().copied().unwrap_or(0.0)
    }

    pub fn edge_count(&self) -> u64 {
        self.edges_total
    }

    /// Sum of `Z_n(i) + F_i` as held by the prefix tree.
    pub fn total_weight(&self) -> f64 {
        self.index.total()
    }

    pub fn max_weight(&self) -> f64 {
        self.max_weight
    }

    /// Denominator of the attachment rule at the current size: `m0 + m(n−n0) + S_n`,
    /// or `m0 + (n−n0) + S_n` for `PafroBernoulli`.
    pub fn attachment_denominator(&self) -> f64 {
        let steps = (self.n() - self.n0) as u64;
        (self.m0 + self.model.m() as u64 * steps) as f64 + self.fitness_sum()
    }

    pub fn edge_log(&self) -> Option<&[(u32, u32)]> {
        self.edge_log.as_deref()
    }

    /// Text edge log: one `child parent` pair per line, ascending child.
    pub fn write_edge_log<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        if let Some(log) = &self.edge_log {
            for &(child, parent) in log {
                writeln!(out, "{child} {parent}")?;
            }
        }
        Ok(())
    }

    /// Largest relative gap between the prefix tree and a direct sum of weights.
    pub fn index_drift(&self) -> f64 {
        let direct: f64 = self.indeg.iter().zip(&self.fitness).map(|(&d, &f)| d as f64 + f).sum();
        let (d, f) = self.index.prefix_parts(self.n());
        let degree_exact = d == self.edges_total;
        let gap = ((d as f64 + f) - direct).abs() / direct.max(f64::MIN_POSITIVE);
        if degree_exact {
            gap
        } else {
            f64::INFINITY
        }
    }

    /// Draw a vertex with probability proportional to `Z_n(i) + F_i`.
    pub fn weighted_pick<R: Rng + ?Sized>(&self, rng: &mut R) -> Vertex {
        Vertex::from_index(self.pick_index(rng))
    }

    fn pick_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.index.total();
        let target = rng.random::<f64>() * total;
        self.index.find(target)
    }

    fn bump(&mut self, idx: usize) {
        self.indeg[idx] += 1;
        self.index.add_degree(idx, 1);
        self.edges_total += 1;
        let w = self.indeg[idx] as f64 + self.fitness[idx];
        if w > self.max_weight {
            self.max_weight = w;
        }
    }

    /// Add vertex `n + 1` and its edges.
    pub fn grow_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let n = self.n();
        if n >= u32::MAX as usize - 1 {
            return Err(Error::InvalidArgument("vertex labels exhausted".into()));
        }
        let f = self.plan.draw(n + 1, rng)?;
        if !(f.is_finite() && f >= 0.0) {
            return Err(Error::InvalidArgument(format!("fitness of vertex {} is {f}", n + 1)));
        }
        let total = self.index.total();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Invariant(format!("total attachment weight {total} at n = {n}")));
        }
        let mut targets = std::mem::take(&mut self.scratch);
        targets.clear();
        match self.model {
            ModelKind::PafroSingleEdge => {
                let t = self.pick_index(rng);
                self.bump(t);
                targets.push(t);
            }
            ModelKind::Paffd { m } => {
                for _ in 0..m {
                    targets.push(self.pick_index(rng));
                }
                for &t in &targets {
                    self.bump(t);
                }
            }
            ModelKind::Pafud { m } => {
                for _ in 0..m {
                    let t = self.pick_index(rng);
                    self.bump(t);
                    targets.push(t);
                }
            }
            ModelKind::PafroBernoulli => {
                self.bernoulli_targets(rng, &mut targets)?;
                for &t in &targets {
                    self.bump(t);
                }
            }
        }
        if let Some(log) = &mut self.edge_log {
            targets.sort_unstable();
            let child = n as u32 + 1;
            log.extend(targets.iter().map(|&t| (child, t as u32 + 1)));
        }
        self.scratch = targets;

        let s = self.fitness_sum() + f;
        self.fitness.push(f);
        self.indeg.push(0);
        self.fitness_prefix.push(s);
        self.index.push(0, f);
        if f > self.max_weight {
            self.max_weight = f;
        }
        Ok(())
    }

    // Independent hits with p_i = w_i / D. Large graphs use Poisson thinning:
    // N ~ Poisson(κ W / D) candidates drawn ∝ w_i, each kept with probability
    // −ln(1 − p_i)/(κ p_i), where κ = −ln(1 − p_max)/p_max. A vertex is hit
    // when at least one candidate survives, which happens with probability p_i.
    fn bernoulli_targets<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<usize>) -> Result<()> {
        let denom = self.attachment_denominator();
        let p_max = self.max_weight / denom;
        debug_assert!(p_max < 1.0, "attachment probability {p_max} is not below 1");
        if !(p_max < 1.0) {
            return Err(Error::Invariant(format!("attachment probability {p_max} >= 1")));
        }
        let n = self.n();
        if n <= BERNOULLI_DIRECT_MAX_N || p_max >= 0.5 {
            for i in 0..n {
                let p = (self.indeg[i] as f64 + self.fitness[i]) / denom;
                if rng.random::<f64>() < p {
                    out.push(i);
                }
            }
            return Ok(());
        }
        let kappa = -(-p_max).ln_1p() / p_max;
        let lambda = kappa * self.index.total() / denom;
        if lambda <= 0.0 {
            return Ok(());
        }
        let poisson = Poisson::new(lambda).map_err(|e| Error::Invariant(format!("poisson rate {lambda}: {e}")))?;
        let count = poisson.sample(rng) as u64;
        for _ in 0..count {
            let i = self.pick_index(rng);
            let p = (self.indeg[i] as f64 + self.fitness[i]) / denom;
            let keep = -(-p).ln_1p() / (kappa * p);
            if rng.random::<f64>() < keep {
                out.push(i);
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(())
    }

    /// Grow to `n_target`, calling every observer at each checkpoint size.
    ///
    /// Checkpoints must be strictly increasing and lie in `(n, n_target]`.
    /// When `deadline` passes, growth stops and the report is marked truncated.
    pub fn grow_to<R: Rng + ?Sized>(
        &mut self,
        n_target: usize,
        checkpoints: &[usize],
        observers: &mut [&mut dyn Observer],
        deadline: Option<Instant>,
        rng: &mut R,
    ) -> Result<GrowReport> {
        let n = self.n();
        if n_target < n {
            return Err(Error::InvalidArgument(format!("target {n_target} is below current size {n}")));
        }
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("checkpoints must be strictly increasing".into()));
        }
        if let (Some(&first), Some(&last)) = (checkpoints.first(), checkpoints.last()) {
            if first <= n || last > n_target {
                return Err(Error::InvalidArgument(format!(
                    "checkpoints must lie in ({n}, {n_target}]"
                )));
            }
        }
        self.reserve(n_target - n);
        let mut next = 0;
        let mut observed = 0;
        while self.n() < n_target {
            if let Some(d) = deadline {
                // Checking the clock every 4096 steps keeps the overhead negligible.
                if self.n() % 4096 == 0 && Instant::now() >= d {
                    return Ok(GrowReport {
                        reached: self.n(),
                        checkpoints_observed: observed,
                        truncated: true,
                    });
                }
            }
            self.grow_step(rng)?;
            if next < checkpoints.len() && checkpoints[next] == self.n() {
                for obs in observers.iter_mut() {
                    obs.observe(self);
                }
                observed += 1;
                next += 1;
            }
        }
        Ok(GrowReport {
            reached: self.n(),
            checkpoints_observed: observed,
            truncated: false,
        })
    }
}

#[cfg(test)]
mod tests;

//! Experiment orchestration.
//!
//! A run grows `replications` independent graphs on a rayon pool and
//! aggregates only after every replication has finished. Each replication
//! draws from its own stream derived from `(master_seed, replication)`, so
//! the tables do not depend on the number of threads. Outputs go to one
//! directory: `manifest.json`, one CSV per table and `summary.json`.

mod report;
mod svg;

pub use report::{emit_report, ReportOutput, FIGURE_DIR, REPORT_FILE};
pub use svg::{Figure, Series, SeriesStyle};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fitness::{FitnessSpec, Regime};
use crate::graph::{init_graph, GraphState, ModelKind, SeedTopology, Vertex};
use crate::measures::{empirical_pk, hill_estimator, ks_statistic, ks_two_sample, log_log_slope, max_degree, zero_indegree_fraction, HillEstimate};
use crate::oracle::{verify_suite, SuiteOptions, SuiteRow};
use crate::ppp::{extreme_sup, frechet_cdf, g_integral, law_of_i_cdf, ppp_batch, strong_sup};
use crate::rng::{derive_seed, replication_rng};
use crate::theory::TheoryContext;

/// Environment variable that overrides `parallelism`.
pub const THREADS_ENV: &str = "PAFLAB_THREADS";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

pub const DEGREE_DIST_TABLE: (&str, &[&str]) = ("degree_dist.csv", &["replication", "n", "k", "p_n_k"]);
pub const MAX_DEGREE_TABLE: (&str, &[&str]) = ("max_degree.csv", &["replication", "n", "I_n", "max_Z", "S_n", "u_n"]);
pub const PPP_TABLE: (&str, &[&str]) = ("ppp.csv", &["sample_id", "sup_value", "argmax_t", "N_points"]);
pub const ZERO_FRACTION_TABLE: (&str, &[&str]) = ("zero_fraction.csv", &["replication", "n", "zero_indegree_fraction"]);
pub const REGIME_TABLE: (&str, &[&str]) = (
    "regime_scan.csv",
    &[
        "spec",
        "m",
        "regime",
        "predicted_exponent",
        "hill_estimate",
        "max_degree_slope",
        "predicted_slope",
        "zero_fraction_first",
        "zero_fraction_last",
    ],
);
pub const VERIFY_TABLE: (&str, &[&str]) = ("verify.csv", &["model", "check", "k", "cases", "worst", "tolerance", "pass"]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DegreeDist,
    MaxDegree,
    RegimeScan,
    PppLimit,
    Verify,
    ExtremeZeroFraction,
}

/// Point-process settings of a `ppp_limit` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PppSettings {
    pub samples: usize,
    pub delta: f64,
    /// Lower time cutoff of the extreme-disorder functional.
    pub eps: f64,
    pub compensate: bool,
}

impl Default for PppSettings {
    fn default() -> Self {
        Self {
            samples: 10_000,
            delta: 1e-3,
            eps: 1e-3,
            compensate: false,
        }
    }
}

fn default_n0() -> usize {
    2
}

fn default_replications() -> usize {
    1
}

fn default_k_max() -> u32 {
    20
}

fn default_ks_coefficient() -> f64 {
    1.358
}

/// A single JSON document describing one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub fitness: FitnessSpec,
    #[serde(default = "default_n0")]
    pub n0: usize,
    #[serde(default)]
    pub seed_topology: SeedTopology,
    pub n_target: usize,
    /// Sizes at which statistics are recorded; empty means powers of two plus `n_target`.
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub parallelism: usize,
    pub outputs: PathBuf,
    pub experiment: ExperimentKind,
    /// Fitness laws compared by `regime_scan`; empty means `[fitness]`.
    #[serde(default)]
    pub regime_scan: Vec<FitnessSpec>,
    #[serde(default)]
    pub ppp: PppSettings,
    #[serde(default)]
    pub verify: SuiteOptions,
    /// Largest `k` in the degree-distribution comparison.
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    /// Order statistics used by the Hill estimator; `None` means `√(#{Z > 0})`.
    #[serde(default)]
    pub hill_top: Option<usize>,
    /// KS critical values are `ks_coefficient / √N`.
    #[serde(default = "default_ks_coefficient")]
    pub ks_coefficient: f64,
    /// Wall-clock budget per replication; growth stops early when exceeded.
    #[serde(default)]
    pub time_limit_secs: Option<f64>,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(model: ModelKind, fitness: FitnessSpec, n_target: usize, experiment: ExperimentKind, outputs: impl Into<PathBuf>) -> Self {
        Self {
            model,
            fitness,
            n0: default_n0(),
            seed_topology: SeedTopology::default(),
            n_target,
            checkpoints: Vec::new(),
            replications: 1,
            master_seed: 0,
            parallelism: 0,
            outputs: outputs.into(),
            experiment,
            regime_scan: Vec::new(),
            ppp: PppSettings::default(),
            verify: SuiteOptions::default(),
            k_max: default_k_max(),
            hill_top: None,
            ks_coefficient: default_ks_coefficient(),
            time_limit_secs: None,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.fitness.validate()?;
        for spec in &self.regime_scan {
            spec.validate()?;
        }
        if self.n0 == 0 {
            return Err(Error::Config("n0 must be at least 1".into()));
        }
        if self.n_target < self.n0 {
            return Err(Error::Config(format!("n_target {} is below n0 {}", self.n_target, self.n0)));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        let cps = &self.checkpoints;
        if cps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("checkpoints must be strictly increasing".into()));
        }
        if cps.iter().any(|&c| c <= self.n0 || c > self.n_target) {
            return Err(Error::Config(format!("checkpoints must lie in ({}, {}]", self.n0, self.n_target)));
        }
        if !(self.ks_coefficient > 0.0) {
            return Err(Error::Config("ks_coefficient must be positive".into()));
        }
        if self.time_limit_secs.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Config("time_limit_secs must be positive".into()));
        }
        if self.experiment == ExperimentKind::PppLimit {
            let regime = self.fitness.classify_regime(self.model.m());
            if !matches!(regime, Regime::Strong | Regime::Extreme) {
                return Err(Error::Config(format!(
                    "ppp_limit needs a strong or extreme disorder fitness law, got {regime:?}"
                )));
            }
            let p = &self.ppp;
            if p.samples == 0 || !(p.delta > 0.0) || !(p.eps > 0.0 && p.eps < 1.0) {
                return Err(Error::Config("ppp needs samples ≥ 1, delta > 0 and eps in (0, 1)".into()));
            }
        }
        Ok(())
    }

    /// Checkpoints actually used: the configured list or the default ×2 grid.
    pub fn resolved_checkpoints(&self) -> Vec<usize> {
        if self.checkpoints.is_empty() {
            default_checkpoints(self.n0, self.n_target)
        } else {
            self.checkpoints.clone()
        }
    }

    /// Worker count after applying the environment override.
    pub fn threads(&self) -> usize {
        resolve_threads(self.parallelism)
    }

    pub fn plan(&self) -> SimulationPlan {
        SimulationPlan {
            model: self.model,
            fitness: self.fitness.clone(),
            n0: self.n0,
            topology: self.seed_topology.clone(),
            n_target: self.n_target,
            checkpoints: self.resolved_checkpoints(),
            master_seed: self.master_seed,
            collect_pk: self.experiment == ExperimentKind::DegreeDist,
            hill_top: self.hill_top,
            compute_hill: self.experiment == ExperimentKind::RegimeScan,
            time_limit: self.time_limit_secs.map(Duration::from_secs_f64),
        }
    }
}

/// Powers of two in `(n0, n_target)` followed by `n_target`.
pub fn default_checkpoints(n0: usize, n_target: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut c = 1usize;
    while c <= n0 {
        c *= 2;
    }
    while c < n_target {
        out.push(c);
        c *= 2;
    }
    if n_target > n0 {
        out.push(n_target);
    }
    out
}

/// `PAFLAB_THREADS` when set to a positive integer, else `configured`, else every core.
pub fn resolve_threads(configured: usize) -> usize {
    threads_from(std::env::var(THREADS_ENV).ok().as_deref(), configured)
}

fn threads_from(env: Option<&str>, configured: usize) -> usize {
    match env.and_then(|v| v.trim().parse::<usize>().ok()).filter(|&t| t > 0) {
        Some(t) => t,
        None if configured > 0 => configured,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

/// Run `f` on a dedicated pool of `threads` workers.
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Statistics recorded when a replication passes a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointRecord {
    pub n: usize,
    pub argmax: Vertex,
    pub max_z: u32,
    pub fitness_sum: f64,
    pub u_n: f64,
    pub zero_fraction: f64,
    #[serde(skip)]
    pub pk: Option<BTreeMap<u32, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub checkpoints: Vec<CheckpointRecord>,
    pub reached: usize,
    pub truncated: bool,
    /// Hill estimate of the final in-degrees (positive ones only).
    pub hill: Option<HillEstimate>,
}

impl ReplicationRecord {
    pub fn at(&self, n: usize) -> Option<&CheckpointRecord> {
        self.checkpoints.iter().find(|c| c.n == n)
    }
}

/// Everything needed to grow one replication.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub model: ModelKind,
    pub fitness: FitnessSpec,
    pub n0: usize,
    pub topology: SeedTopology,
    pub n_target: usize,
    pub checkpoints: Vec<usize>,
    pub master_seed: u64,
    pub collect_pk: bool,
    pub hill_top: Option<usize>,
    pub compute_hill: bool,
    pub time_limit: Option<Duration>,
}

impl SimulationPlan {
    pub fn new(model: ModelKind, fitness: FitnessSpec, n_target: usize, checkpoints: Vec<usize>, master_seed: u64) -> Self {
        Self {
            model,
            fitness,
            n0: default_n0(),
            topology: SeedTopology::default(),
            n_target,
            checkpoints,
            master_seed,
            collect_pk: false,
            hill_top: None,
            compute_hill: false,
            time_limit: None,
        }
    }

    /// Grow replication `index` and return the recorded statistics with the final graph.
    pub fn run_state(&self, index: usize) -> Result<(ReplicationRecord, GraphState)> {
        let mut rng = replication_rng(self.master_seed, index as u64);
        let mut state = init_graph(self.n0, &self.topology, self.model, self.fitness.clone(), &mut rng)?;
        let mut records = Vec::with_capacity(self.checkpoints.len());
        let collect_pk = self.collect_pk;
        let spec = &self.fitness;
        let mut observer = |s: &GraphState| {
            let (argmax, max_z) = max_degree(s.indeg());
            records.push(CheckpointRecord {
                n: s.n(),
                argmax,
                max_z,
                fitness_sum: s.fitness_sum(),
                u_n: spec.quantile_u(s.n() as u64),
                zero_fraction: zero_indegree_fraction(s),
                pk: collect_pk.then(|| empirical_pk(s.indeg())),
            });
        };
        let deadline = self.time_limit.map(|d| Instant::now() + d);
        let report = state.grow_to(self.n_target, &self.checkpoints, &mut [&mut observer], deadline, &mut rng)?;
        let hill = if self.compute_hill {
            let positive: Vec<f64> = state.indeg().iter().filter(|&&z| z > 0).map(|&z| z as f64).collect();
            let top = self.hill_top.unwrap_or((positive.len() as f64).sqrt() as usize).max(2);
            if top < positive.len() {
                Some(hill_estimator(&positive, top)?)
            } else {
                None
            }
        } else {
            None
        };
        let record = ReplicationRecord {
            replication: index,
            checkpoints: records,
            reached: report.reached,
            truncated: report.truncated,
            hill,
        };
        Ok((record, state))
    }

    pub fn run_one(&self, index: usize) -> Result<ReplicationRecord> {
        self.run_state(index).map(|(r, _)| r)
    }
}

/// Run replications `0..replications` on `threads` workers; results are in index order.
pub fn run_replications(plan: &SimulationPlan, replications: usize, threads: usize) -> Result<Vec<ReplicationRecord>> {
    with_pool(threads, || (0..replications).into_par_iter().map(|r| plan.run_one(r)).collect::<Result<Vec<_>>>())?
}

/// Records at size `n` from replications that reached it.
pub fn records_at(reps: &[ReplicationRecord], n: usize) -> Vec<&CheckpointRecord> {
    reps.iter().filter_map(|r| r.at(n)).collect()
}

/// Replication-averaged `p_n(k)` for `k = 0..=k_max`.
pub fn mean_pk(reps: &[ReplicationRecord], n: usize, k_max: u32) -> Vec<f64> {
    let recs = records_at(reps, n);
    let mut out = vec![0.0; k_max as usize + 1];
    for r in &recs {
        if let Some(pk) = &r.pk {
            for (k, v) in out.iter_mut().enumerate() {
                *v += pk.get(&(k as u32)).copied().unwrap_or(0.0);
            }
        }
    }
    let count = recs.len().max(1) as f64;
    out.iter_mut().for_each(|v| *v /= count);
    out
}

/// `½ Σ |a_k − b_k|` over the common range.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Least-squares slope of log of the geometric-mean maximum degree against log n.
pub fn max_degree_slope(reps: &[ReplicationRecord], checkpoints: &[usize]) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in checkpoints {
        let logs: Vec<f64> = records_at(reps, n).iter().filter(|c| c.max_z > 0).map(|c| (c.max_z as f64).ln()).collect();
        if !logs.is_empty() {
            xs.push(n as f64);
            ys.push((logs.iter().sum::<f64>() / logs.len() as f64).exp());
        }
    }
    log_log_slope(&xs, &ys)
}

/// Fraction of replications whose maximizer `I_n` is the same at every checkpoint `≥ from_n`.
pub fn persistence_fraction(reps: &[ReplicationRecord], from_n: usize) -> f64 {
    let stable = reps
        .iter()
        .filter(|r| {
            let mut it = r.checkpoints.iter().filter(|c| c.n >= from_n).map(|c| c.argmax);
            match it.next() {
                Some(first) => it.all(|a| a == first),
                None => false,
            }
        })
        .count();
    stable as f64 / reps.len().max(1) as f64
}

/// Replication mean of the zero in-degree fraction at each checkpoint.
pub fn zero_fraction_trend(reps: &[ReplicationRecord], checkpoints: &[usize]) -> Vec<(usize, f64)> {
    checkpoints
        .iter()
        .filter_map(|&n| {
            let recs = records_at(reps, n);
            (!recs.is_empty()).then(|| (n, recs.iter().map(|c| c.zero_fraction).sum::<f64>() / recs.len() as f64))
        })
        .collect()
}

/// Exponent `b` in `max Z_n ≈ n^b` predicted by the regime.
pub fn predicted_max_slope(spec: &FitnessSpec, m: u32) -> Option<f64> {
    match spec.classify_regime(m) {
        Regime::Weak | Regime::StrongBoundary => Some(1.0 / spec.theta(m)),
        Regime::Strong => spec.alpha().map(|a| 1.0 / (a - 1.0)),
        Regime::Extreme => Some(1.0),
        Regime::Unclassified => None,
    }
}

/// One line of `compare_regimes`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeRow {
    pub spec: FitnessSpec,
    pub label: String,
    pub m: u32,
    pub regime: Regime,
    /// Decay exponent of `p(k)`; the Hill estimate targets `exponent − 1`.
    pub predicted_exponent: Option<f64>,
    /// Replication mean of the Hill estimate of the degree CCDF index.
    pub hill_estimate: Option<f64>,
    pub max_degree_slope: Option<f64>,
    pub predicted_slope: Option<f64>,
    pub zero_fraction_trend: Vec<(usize, f64)>,
}

pub fn spec_label(spec: &FitnessSpec) -> String {
    match *spec {
        FitnessSpec::Deterministic { c } => format!("Deterministic({c})"),
        FitnessSpec::ParetoTail { beta, xmin, c } => format!("ParetoTail({beta},{xmin},{c})"),
        FitnessSpec::LogPareto { beta, xmin, gamma, c } => format!("LogPareto({beta},{xmin},{gamma},{c})"),
        FitnessSpec::Uniform { a, b } => format!("Uniform({a},{b})"),
        FitnessSpec::Exponential { rate } => format!("Exponential({rate})"),
    }
}

/// Simulate every fitness law of the scan and set the measured exponents
/// next to the predicted ones.
pub fn compare_regimes(config: &ExperimentConfig) -> Result<Vec<RegimeRow>> {
    let specs = if config.regime_scan.is_empty() {
        vec![config.fitness.clone()]
    } else {
        config.regime_scan.clone()
    };
    let threads = config.threads();
    let m = config.model.m();
    let mut rows = Vec::with_capacity(specs.len());
    for (j, spec) in specs.into_iter().enumerate() {
        let mut plan = config.plan();
        plan.fitness = spec.clone();
        plan.compute_hill = true;
        plan.master_seed = derive_seed(config.master_seed, 1 << 32 | j as u64);
        let reps = run_replications(&plan, config.replications, threads)?;
        let hills: Vec<f64> = reps.iter().filter_map(|r| r.hill).filter(|h| !h.degenerate).map(|h| h.estimate).collect();
        let predicted_exponent = TheoryContext::new(spec.clone(), m)
            .and_then(|t| t.tail_exponent_prediction())
            .ok()
            .map(|p| p.exponent);
        rows.push(RegimeRow {
            label: spec_label(&spec),
            m,
            regime: spec.classify_regime(m),
            predicted_exponent,
            hill_estimate: (!hills.is_empty()).then(|| hills.iter().sum::<f64>() / hills.len() as f64),
            max_degree_slope: max_degree_slope(&reps, &plan.checkpoints).ok(),
            predicted_slope: predicted_max_slope(&spec, m),
            zero_fraction_trend: zero_fraction_trend(&reps, &plan.checkpoints),
            spec,
        });
    }
    Ok(rows)
}

/// Column names and rows of one CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(spec: (&'static str, &'static [&'static str])) -> Self {
        Table {
            file: spec.0,
            columns: spec.1,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(self.file);
        let csv_err = |e: csv::Error| Error::io(&path, std::io::Error::other(e));
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

/// Read a CSV written by `Table::write` as header plus rows.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(csv_err)?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub checkpoints: Vec<usize>,
    pub threads: usize,
    pub tables: Vec<TableEntry>,
    pub summary: String,
    /// False while running and when any replication stopped early.
    pub complete: bool,
    pub notes: Vec<String>,
}

/// What `run_experiment` left on disk.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub summary: Value,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Outcome {
    tables: Vec<Table>,
    summary: Value,
    notes: Vec<String>,
    complete: bool,
}

/// Run the configured experiment and write its bundle to `config.outputs`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultBundle> {
    config.validate()?;
    let dir = config.outputs.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let threads = config.threads();
    let mut manifest = Manifest {
        tool: "paflab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        checkpoints: config.resolved_checkpoints(),
        threads,
        tables: Vec::new(),
        summary: SUMMARY_FILE.into(),
        complete: false,
        notes: vec!["run in progress".into()],
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    let outcome = match config.experiment {
        ExperimentKind::DegreeDist => degree_dist(config, threads)?,
        ExperimentKind::MaxDegree => max_degree_experiment(config, threads)?,
        ExperimentKind::ExtremeZeroFraction => zero_fraction_experiment(config, threads)?,
        ExperimentKind::RegimeScan => regime_experiment(config)?,
        ExperimentKind::PppLimit => ppp_experiment(config, threads)?,
        ExperimentKind::Verify => verify_experiment(config)?,
    };
    for t in &outcome.tables {
        t.write(&dir)?;
        manifest.tables.push(TableEntry {
            file: t.file.into(),
            columns: t.columns.iter().map(|c| c.to_string()).collect(),
            rows: t.rows.len(),
        });
    }
    write_json(&dir.join(SUMMARY_FILE), &outcome.summary)?;
    manifest.complete = outcome.complete;
    manifest.notes = outcome.notes;
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(ResultBundle {
        dir,
        manifest,
        summary: outcome.summary,
    })
}

/// Load `manifest.json` and `summary.json` from a bundle directory.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<ResultBundle> {
    let dir = dir.as_ref();
    let read = |name: &str| -> Result<String> {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    };
    let manifest: Manifest = serde_json::from_str(&read(MANIFEST_FILE)?).map_err(|e| Error::json(dir.join(MANIFEST_FILE), e))?;
    let summary: Value = serde_json::from_str(&read(SUMMARY_FILE)?).map_err(|e| Error::json(dir.join(SUMMARY_FILE), e))?;
    Ok(ResultBundle {
        dir: dir.to_path_buf(),
        manifest,
        summary,
    })
}

fn truncation_notes(reps: &[ReplicationRecord]) -> (Vec<String>, bool) {
    let cut: Vec<usize> = reps.iter().filter(|r| r.truncated).map(|r| r.replication).collect();
    if cut.is_empty() {
        (Vec::new(), true)
    } else {
        (vec![format!("replications {cut:?} stopped at the time limit before n_target")], false)
    }
}

fn max_degree_table(reps: &[ReplicationRecord]) -> Table {
    let mut t = Table::new(MAX_DEGREE_TABLE);
    for r in reps {
        for c in &r.checkpoints {
            t.push(vec![
                r.replication.to_string(),
                c.n.to_string(),
                c.argmax.label().to_string(),
                c.max_z.to_string(),
                num(c.fitness_sum),
                num(c.u_n),
            ]);
        }
    }
    t
}

fn final_n(config: &ExperimentConfig) -> Option<usize> {
    config.resolved_checkpoints().last().copied()
}

fn degree_dist(config: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let plan = config.plan();
    let reps = run_replications(&plan, config.replications, threads)?;
    let mut table = Table::new(DEGREE_DIST_TABLE);
    for r in &reps {
        for c in &r.checkpoints {
            for (k, p) in c.pk.iter().flatten() {
                table.push(vec![r.replication.to_string(), c.n.to_string(), k.to_string(), num(*p)]);
            }
        }
    }
    let mut summary = json!({ "experiment": "degree_dist", "replications": reps.len() });
    if let Some(n) = final_n(config) {
        let empirical = mean_pk(&reps, n, config.k_max);
        summary["n"] = json!(n);
        summary["k_max"] = json!(config.k_max);
        summary["mean_pk"] = json!(empirical);
        match TheoryContext::new(config.fitness.clone(), config.model.m()).and_then(|ctx| {
            let pk = (0..=config.k_max).map(|k| ctx.limit_pk(k)).collect::<Result<Vec<_>>>()?;
            Ok((pk, ctx.tail_exponent_prediction().ok()))
        }) {
            Ok((pk, tail)) => {
                summary["theory_pk"] = json!(pk);
                summary["total_variation"] = json!(total_variation(&empirical, &pk));
                summary["tail_prediction"] = json!(tail);
            }
            Err(e) => summary["theory_error"] = json!(e.to_string()),
        }
    }
    let (notes, complete) = truncation_notes(&reps);
    Ok(Outcome {
        tables: vec![table, max_degree_table(&reps)],
        summary,
        notes,
        complete,
    })
}

/// Limit-law comparison of the final maxima against the point-process laws.
fn limit_comparison(config: &ExperimentConfig, reps: &[ReplicationRecord], n: usize, extreme_samples: Option<&[f64]>) -> Value {
    let spec = &config.fitness;
    let m = config.model.m();
    let recs = records_at(reps, n);
    if recs.is_empty() {
        return Value::Null;
    }
    let critical = config.ks_coefficient / (recs.len() as f64).sqrt();
    match (spec.classify_regime(m), spec.alpha()) {
        (Regime::Strong, Some(alpha)) => {
            let theta = spec.theta(m);
            let Ok(g) = g_integral(theta, alpha, 0.0, 1.0) else {
                return Value::Null;
            };
            let scaled: Vec<f64> = recs.iter().map(|c| c.max_z as f64 / c.u_n).collect();
            let location: Vec<f64> = recs.iter().map(|c| c.argmax.label() as f64 / n as f64).collect();
            json!({
                "statistic": "max_Z/u_n",
                "g01": g,
                "ks_max": ks_statistic(&scaled, |x| frechet_cdf(g, alpha, x)),
                "ks_location": ks_statistic(&location, |t| law_of_i_cdf(theta, alpha, t).unwrap_or(f64::NAN)),
                "ks_critical": critical,
            })
        }
        (Regime::Extreme, Some(_)) => {
            let scaled: Vec<f64> = recs.iter().map(|c| c.max_z as f64 / n as f64).collect();
            let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
            let mut out = json!({ "statistic": "max_Z/n", "mean": mean });
            if let Some(s) = extreme_samples.filter(|s| !s.is_empty()) {
                out["ks_two_sample"] = json!(ks_two_sample(&scaled, s));
                let (a, b) = (scaled.len() as f64, s.len() as f64);
                out["ks_critical"] = json!(config.ks_coefficient * ((a + b) / (a * b)).sqrt());
            }
            out
        }
        _ => Value::Null,
    }
}

fn max_degree_experiment(config: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let plan = config.plan();
    let reps = run_replications(&plan, config.replications, threads)?;
    let mut summary = json!({
        "experiment": "max_degree",
        "replications": reps.len(),
        "regime": config.fitness.classify_regime(config.model.m()),
        "predicted_slope": predicted_max_slope(&config.fitness, config.model.m()),
        "max_degree_slope": max_degree_slope(&reps, &plan.checkpoints).ok(),
    });
    if let Some(n) = final_n(config) {
        summary["n"] = json!(n);
        summary["persistence_from_n"] = json!(n / 100);
        summary["persistence_fraction"] = json!(persistence_fraction(&reps, n / 100));
        summary["limit"] = limit_comparison(config, &reps, n, None);
    }
    let (notes, complete) = truncation_notes(&reps);
    Ok(Outcome {
        tables: vec![max_degree_table(&reps)],
        summary,
        notes,
        complete,
    })
}

fn zero_fraction_experiment(config: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let plan = config.plan();
    let reps = run_replications(&plan, config.replications, threads)?;
    let mut table = Table::new(ZERO_FRACTION_TABLE);
    for r in &reps {
        for c in &r.checkpoints {
            table.push(vec![r.replication.to_string(), c.n.to_string(), num(c.zero_fraction)]);
        }
    }
    let trend = zero_fraction_trend(&reps, &plan.checkpoints);
    let increasing = trend.windows(2).all(|w| w[1].1 > w[0].1);
    let summary = json!({
        "experiment": "extreme_zero_fraction",
        "replications": reps.len(),
        "regime": config.fitness.classify_regime(config.model.m()),
        "trend": trend,
        "increasing": increasing,
        "final": trend.last().map(|t| t.1),
    });
    let (notes, complete) = truncation_notes(&reps);
    Ok(Outcome {
        tables: vec![table, max_degree_table(&reps)],
        summary,
        notes,
        complete,
    })
}

fn regime_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let rows = compare_regimes(config)?;
    let mut table = Table::new(REGIME_TABLE);
    for r in &rows {
        table.push(vec![
            r.label.clone(),
            r.m.to_string(),
            format!("{:?}", r.regime),
            opt(r.predicted_exponent),
            opt(r.hill_estimate),
            opt(r.max_degree_slope),
            opt(r.predicted_slope),
            opt(r.zero_fraction_trend.first().map(|t| t.1)),
            opt(r.zero_fraction_trend.last().map(|t| t.1)),
        ]);
    }
    Ok(Outcome {
        tables: vec![table],
        summary: json!({ "experiment": "regime_scan", "rows": rows }),
        notes: Vec::new(),
        complete: true,
    })
}

/// Point-process functional of one sample: `(value, argmax_t, points, empty)`.
pub type PppDraw = (f64, f64, usize, bool);

/// Draw `settings.samples` functionals for the regime of `spec`.
pub fn ppp_draws(spec: &FitnessSpec, m: u32, settings: &PppSettings, master_seed: u64) -> Result<Vec<PppDraw>> {
    let alpha = spec
        .alpha()
        .ok_or_else(|| Error::Regime("point-process limits need a power-law fitness".into()))?;
    match spec.classify_regime(m) {
        Regime::Strong => {
            let theta = spec.theta(m);
            ppp_batch(alpha, settings.delta, settings.samples, master_seed, |_, s, _| {
                strong_sup(&s, theta).map(|r| (r.value, r.argmax_t, s.points.len(), r.empty))
            })?
            .into_iter()
            .collect()
        }
        Regime::Extreme => Ok(ppp_batch(alpha, settings.delta, settings.samples, master_seed, |_, s, _| {
            let r = extreme_sup(&s, m, settings.eps, settings.compensate);
            (r.value, r.argmax_t, s.points.len(), r.empty)
        })?),
        other => Err(Error::Regime(format!("no point-process limit in the {other:?} regime"))),
    }
}

fn ppp_experiment(config: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let spec = &config.fitness;
    let m = config.model.m();
    let alpha = spec.alpha().expect("validated");
    let ppp_seed = derive_seed(config.master_seed, 1 << 40);
    let draws = with_pool(threads, || ppp_draws(spec, m, &config.ppp, ppp_seed))??;
    let mut table = Table::new(PPP_TABLE);
    for (j, d) in draws.iter().enumerate() {
        table.push(vec![j.to_string(), num(d.0), num(d.1), d.2.to_string()]);
    }
    let values: Vec<f64> = draws.iter().filter(|d| !d.3).map(|d| d.0).collect();
    let critical = config.ks_coefficient / (values.len().max(1) as f64).sqrt();
    let mut summary = json!({
        "experiment": "ppp_limit",
        "regime": spec.classify_regime(m),
        "alpha": alpha,
        "samples": draws.len(),
        "empty_samples": draws.len() - values.len(),
        "delta": config.ppp.delta,
    });
    if spec.classify_regime(m) == Regime::Strong && !values.is_empty() {
        let theta = spec.theta(m);
        let g = g_integral(theta, alpha, 0.0, 1.0)?;
        let locations: Vec<f64> = draws.iter().filter(|d| !d.3).map(|d| d.1).collect();
        summary["theta"] = json!(theta);
        summary["g01"] = json!(g);
        summary["ks_sup"] = json!(ks_statistic(&values, |x| frechet_cdf(g, alpha, x)));
        summary["ks_argmax"] = json!(ks_statistic(&locations, |t| law_of_i_cdf(theta, alpha, t).unwrap_or(f64::NAN)));
        summary["ks_critical"] = json!(critical);
    } else {
        summary["eps"] = json!(config.ppp.eps);
        summary["median_sup"] = json!(median(&values));
    }
    let mut tables = vec![table];
    let mut notes = Vec::new();
    let mut complete = true;
    if config.n_target > config.n0 {
        let plan = config.plan();
        let reps = run_replications(&plan, config.replications, threads)?;
        if let Some(n) = final_n(config) {
            summary["simulation"] = limit_comparison(config, &reps, n, Some(&values));
        }
        tables.push(max_degree_table(&reps));
        (notes, complete) = truncation_notes(&reps);
    }
    Ok(Outcome {
        tables,
        summary,
        notes,
        complete,
    })
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[v.len() / 2])
}

fn suite_table(rows: &[SuiteRow]) -> Table {
    let mut t = Table::new(VERIFY_TABLE);
    for r in rows {
        t.push(vec![
            r.model.clone(),
            r.check.clone(),
            opt(r.k),
            r.cases.to_string(),
            num(r.worst),
            num(r.tolerance),
            r.pass.to_string(),
        ]);
    }
    t
}

fn verify_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let rows = verify_suite(config.model, &config.verify)?;
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(Outcome {
        tables: vec![suite_table(&rows)],
        summary: json!({ "experiment": "verify", "all_pass": all_pass, "rows": rows }),
        notes: Vec::new(),
        complete: true,
    })
}

#[cfg(test)]
mod tests;

//! Empirical degree and fitness statistics of a grown graph.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphState, Observer, Vertex};

/// Ratio between consecutive default fitness bin edges.
pub const DEFAULT_BIN_RATIO: f64 = 1.189_207_115_002_721; // 2^{1/4}
/// Largest `k` for which `Γ_n^(k)` is binned.
pub const DEFAULT_K_MAX: u32 = 64;

/// Binned fitness measures: `Γ_n` and `Γ_n^(k)` for `k ≤ k_max`.
///
/// Bin `j` is `(edges[j], edges[j+1]]`; the first bin also contains its left
/// edge so that zero fitness can be binned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaBins {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
    pub overflow: f64,
    /// `mass_k[k][j]` is the `Γ_n^(k)` mass of bin `j`.
    pub mass_k: Vec<Vec<f64>>,
    pub overflow_k: Vec<f64>,
    /// Set when some fitness value fell outside the bins.
    pub flagged: bool,
}

/// Snapshot statistics of one graph at one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub n: usize,
    pub pk_hist: BTreeMap<u32, f64>,
    pub gamma: GammaBins,
    pub max_degree: u32,
    pub argmax: Vertex,
    pub zero_indegree_fraction: f64,
    pub fitness_sum: f64,
}

/// `p_n(k) = #{i : Z_n(i) = k} / n`.
pub fn empirical_pk(indeg: &[u32]) -> BTreeMap<u32, f64> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &d in indeg {
        *counts.entry(d).or_default() += 1;
    }
    let n = indeg.len() as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
}

/// Geometric edges `r^j` covering `[lo, hi]`; a zero lower end adds an edge at 0.
pub fn geometric_bin_edges(lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
    assert!(ratio > 1.0 && hi >= lo && lo >= 0.0);
    let ln_r = ratio.ln();
    let start = if lo > 0.0 { lo } else { hi.min(1.0).max(f64::MIN_POSITIVE) };
    let mut j_lo = (start.ln() / ln_r).ceil() as i64 - 1;
    let mut j_hi = (hi.max(start).ln() / ln_r).ceil() as i64;
    while ratio.powi(j_lo as i32) >= start {
        j_lo -= 1;
    }
    while ratio.powi(j_hi as i32) < hi {
        j_hi += 1;
    }
    let mut edges = Vec::with_capacity((j_hi - j_lo + 2) as usize);
    if lo == 0.0 {
        edges.push(0.0);
    }
    edges.extend((j_lo..=j_hi).map(|j| ratio.powi(j as i32)));
    edges
}

fn bin_of(edges: &[f64], x: f64) -> Option<usize> {
    let idx = edges.partition_point(|&e| e < x);
    if idx == 0 {
        (x == edges[0]).then_some(0)
    } else if idx == edges.len() {
        None
    } else {
        Some(idx - 1)
    }
}

/// Bin `Γ_n = (1/n) Σ Z_n(i) δ_{F_i}` and `Γ_n^(k) = (1/n) Σ 1{Z_n(i)=k} δ_{F_i}`.
pub fn empirical_gamma(indeg: &[u32], fitness: &[f64], edges: &[f64], k_max: u32) -> Result<GammaBins> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("bin edges must be strictly increasing, at least two".into()));
    }
    let bins = edges.len() - 1;
    let n = indeg.len() as f64;
    let kk = k_max as usize + 1;
    let mut mass = vec![0.0; bins];
    let mut mass_k = vec![vec![0.0; bins]; kk];
    let mut overflow = 0.0;
    let mut overflow_k = vec![0.0; kk];
    let mut flagged = false;
    for (&z, &f) in indeg.iter().zip(fitness) {
        match bin_of(edges, f) {
            Some(j) => {
                mass[j] += z as f64;
                if (z as usize) < kk {
                    mass_k[z as usize][j] += 1.0;
                }
            }
            None => {
                flagged = true;
                overflow += z as f64;
                if (z as usize) < kk {
                    overflow_k[z as usize] += 1.0;
                }
            }
        }
    }
    let scale = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x /= n);
    scale(&mut mass);
    scale(&mut overflow_k);
    mass_k.iter_mut().for_each(scale);
    Ok(GammaBins {
        edges: edges.to_vec(),
        mass,
        overflow: overflow / n,
        mass_k,
        overflow_k,
        flagged,
    })
}

/// `(I_n, Z_n(I_n))`, ties going to the smallest label.
pub fn max_degree(indeg: &[u32]) -> (Vertex, u32) {
    let mut best = 0;
    for (i, &d) in indeg.iter().enumerate() {
        if d > indeg[best] {
            best = i;
        }
    }
    (Vertex::from_index(best), indeg[best])
}

/// Fraction of vertices with `Z_n(i) = Z_{i∨n0}(i)`.
pub fn zero_indegree_fraction(state: &GraphState) -> f64 {
    let seed = state.seed_indeg();
    let unchanged = state
        .indeg()
        .iter()
        .enumerate()
        .filter(|&(i, &d)| d == seed.get(i).copied().unwrap_or(0))
        .count();
    unchanged as f64 / state.n() as f64
}

/// Options for `summarize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOptions {
    /// Fixed fitness bin edges; `None` picks geometric edges covering the sample.
    pub bin_edges: Option<Vec<f64>>,
    pub bin_ratio: f64,
    pub k_max: u32,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            bin_edges: None,
            bin_ratio: DEFAULT_BIN_RATIO,
            k_max: DEFAULT_K_MAX,
        }
    }
}

pub fn summarize(state: &GraphState, options: &SummaryOptions) -> Result<EmpiricalSummary> {
    let fitness = state.fitness();
    let edges = match &options.bin_edges {
        Some(e) => e.clone(),
        None => {
            let lo = fitness.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = fitness.iter().copied().fold(0.0, f64::max);
            geometric_bin_edges(lo, hi, options.bin_ratio)
        }
    };
    let (argmax, max) = max_degree(state.indeg());
    Ok(EmpiricalSummary {
        n: state.n(),
        pk_hist: empirical_pk(state.indeg()),
        gamma: empirical_gamma(state.indeg(), fitness, &edges, options.k_max)?,
        max_degree: max,
        argmax,
        zero_indegree_fraction: zero_indegree_fraction(state),
        fitness_sum: state.fitness_sum(),
    })
}

/// Observer that stores a summary at every checkpoint.
#[derive(Debug, Default)]
pub struct SummaryCollector {
    pub options: SummaryOptions,
    pub summaries: Vec<EmpiricalSummary>,
    pub errors: Vec<String>,
}

impl SummaryCollector {
    pub fn new(options: SummaryOptions) -> Self {
        Self {
            options,
            ..Default::default()
        }
    }
}

impl Observer for SummaryCollector {
    fn observe(&mut self, state: &GraphState) {
        match summarize(state, &self.options) {
            Ok(s) => self.summaries.push(s),
            Err(e) => self.errors.push(format!("n = {}: {e}", state.n())),
        }
    }
}

impl EmpiricalSummary {
    /// Long-format rows `(n, stat_name, key, value)`.
    pub fn csv_rows(&self) -> Vec<(usize, &'static str, String, f64)> {
        let n = self.n;
        let mut rows = Vec::new();
        for (&k, &p) in &self.pk_hist {
            rows.push((n, "p_n", k.to_string(), p));
        }
        let g = &self.gamma;
        for (j, &m) in g.mass.iter().enumerate() {
            rows.push((n, "gamma_n", format!("{}:{}", g.edges[j], g.edges[j + 1]), m));
        }
        rows.push((n, "gamma_n", "overflow".into(), g.overflow));
        for (k, row) in g.mass_k.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                if m > 0.0 {
                    rows.push((n, "gamma_n_k", format!("{k}@{}:{}", g.edges[j], g.edges[j + 1]), m));
                }
            }
            if g.overflow_k[k] > 0.0 {
                rows.push((n, "gamma_n_k", format!("{k}@overflow"), g.overflow_k[k]));
            }
        }
        rows.push((n, "max_degree", String::new(), self.max_degree as f64));
        rows.push((n, "argmax_index", String::new(), self.argmax.label() as f64));
        rows.push((n, "zero_indegree_fraction", String::new(), self.zero_indegree_fraction));
        rows.push((n, "S_n", String::new(), self.fitness_sum));
        rows
    }
}

/// Write summaries as CSV with header `n,stat_name,key,value`.
pub fn write_summaries_csv<W: Write>(mut out: W, summaries: &[EmpiricalSummary]) -> std::io::Result<()> {
    writeln!(out, "n,stat_name,key,value")?;
    for s in summaries {
        for (n, name, key, value) in s.csv_rows() {
            writeln!(out, "{n},{name},{key},{value}")?;
        }
    }
    Ok(())
}

/// Hill estimate of a tail index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub estimate: f64,
    pub top_count: usize,
    /// The `(top_count + 1)`-th largest value.
    pub threshold: f64,
    /// Mean log-excess too small for a meaningful estimate.
    pub degenerate: bool,
}

/// Reciprocal mean log-excess of the `top_count` largest values over the next one.
pub fn hill_estimator(values: &[f64], top_count: usize) -> Result<HillEstimate> {
    if top_count < 2 || top_count >= values.len() {
        return Err(Error::InvalidArgument(format!(
            "top_count {top_count} must be in [2, {})",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("Hill estimator needs positive values, got {v}")));
    }
    let mut sorted = values.to_vec();
    // Only the top k + 1 order statistics matter.
    sorted.select_nth_unstable_by(top_count, |a, b| b.total_cmp(a));
    let threshold = sorted[top_count];
    let ln_t = threshold.ln();
    let mean: f64 = sorted[..top_count].iter().map(|v| v.ln() - ln_t).sum::<f64>() / top_count as f64;
    Ok(HillEstimate {
        estimate: 1.0 / mean,
        top_count,
        threshold,
        degenerate: mean < 1e-9,
    })
}

/// One-sample Kolmogorov–Smirnov distance to a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty(), "KS statistic needs at least one sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d.clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS statistic needs nonempty samples");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 95% critical value of the one-sample KS statistic.
pub fn ks_critical_95(n: usize) -> f64 {
    1.358 / (n as f64).sqrt()
}

/// Asymptotic 95% critical value of the two-sample KS statistic.
pub fn ks_two_sample_critical_95(n: usize, m: usize) -> f64 {
    1.358 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs two or more paired points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log-log slope needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

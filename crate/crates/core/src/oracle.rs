//! Exact one-step transition laws on small graphs.
//!
//! Every finite `f64` is a dyadic rational, so fitness values, weights and
//! probabilities are carried as exact `BigRational`s. Martingale and NQD
//! checks built on these laws have no floating-point noise.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphState, ModelKind, Vertex};
use crate::theory::{check_k_domain, martingale_value, Normalization};

/// Largest number of elementary outcomes `enumerate_step` will visit.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

pub type Rational = BigRational;

/// Exact rational value of a finite float.
pub fn exact(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("{x} has no exact rational value")))
}

fn int(x: u64) -> Rational {
    Rational::from_integer(x.into())
}

fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// One increment vector `ΔZ_n` and its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub increments: Vec<u32>,
    pub probability: Rational,
}

/// The law of `ΔZ_n = Z_{n+1} − Z_n` given `G_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    pub model: ModelKind,
    pub outcomes: Vec<Outcome>,
    /// Weights `Z_n(i) + F_i`.
    pub weights: Vec<Rational>,
    /// Attachment denominator of the first draw.
    pub denominator: Rational,
}

impl StepDistribution {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn total_probability(&self) -> Rational {
        self.outcomes.iter().map(|o| o.probability.clone()).sum()
    }

    /// Largest possible increment of a single vertex.
    pub fn max_increment(&self) -> u32 {
        if self.model.is_pafro() {
            1
        } else {
            self.model.m()
        }
    }

    /// `E[ΔZ_n(i) | G_n]` for the vertex at 0-based `idx`.
    pub fn mean(&self, idx: usize) -> Rational {
        self.outcomes
            .iter()
            .map(|o| &o.probability * int(o.increments[idx] as u64))
            .sum()
    }

    /// `P(ΔZ_n(i) = value)`.
    pub fn point_mass(&self, idx: usize, value: u32) -> Rational {
        self.outcomes
            .iter()
            .filter(|o| o.increments[idx] == value)
            .map(|o| o.probability.clone())
            .sum()
    }

    /// `[P(ΔZ_n(i) = d) for d in 0..=max_increment]`.
    pub fn marginal(&self, idx: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.max_increment() as usize + 1];
        for o in &self.outcomes {
            out[o.increments[idx] as usize] += &o.probability;
        }
        out
    }

    pub fn probabilities_f64(&self) -> BTreeMap<Vec<u32>, f64> {
        self.outcomes
            .iter()
            .map(|o| (o.increments.clone(), to_f64(&o.probability)))
            .collect()
    }
}

fn outcome_count(model: ModelKind, n: usize) -> u128 {
    let n = n as u128;
    match model {
        ModelKind::PafroSingleEdge => n,
        ModelKind::PafroBernoulli => {
            if n >= 127 {
                u128::MAX
            } else {
                1u128 << n
            }
        }
        ModelKind::Paffd { m } | ModelKind::Pafud { m } => n.checked_pow(m).unwrap_or(u128::MAX),
    }
}

/// Enumerate the one-step law of `state`.
pub fn enumerate_step(state: &GraphState) -> Result<StepDistribution> {
    let model = state.model();
    let n = state.n();
    let outcomes = outcome_count(model, n);
    if outcomes > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard {
            outcomes,
            limit: ENUMERATION_LIMIT,
        });
    }
    let fitness: Vec<Rational> = state.fitness().iter().map(|&f| exact(f)).collect::<Result<_>>()?;
    let weights: Vec<Rational> = fitness
        .iter()
        .zip(state.indeg())
        .map(|(f, &z)| f + int(z as u64))
        .collect();
    let s: Rational = fitness.iter().cloned().sum();
    let m = model.m();
    let denominator = int(state.m0() + m as u64 * (n - state.n0()) as u64) + s;
    if !denominator.is_positive() {
        return Err(Error::Invariant("attachment denominator is not positive".into()));
    }
    let mut acc: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
    match model {
        ModelKind::PafroSingleEdge => {
            for (i, w) in weights.iter().enumerate() {
                let mut inc = vec![0; n];
                inc[i] = 1;
                *acc.entry(inc).or_insert_with(Rational::zero) += w / &denominator;
            }
        }
        ModelKind::Paffd { m } => {
            let probs: Vec<Rational> = weights.iter().map(|w| w / &denominator).collect();
            let mut inc = vec![0; n];
            fixed_draws(&probs, m, &Rational::one(), &mut inc, &mut acc);
        }
        ModelKind::Pafud { m } => {
            let mut inc = vec![0; n];
            updating_draws(&weights, &denominator, m, &Rational::one(), &mut inc, &mut acc);
        }
        ModelKind::PafroBernoulli => {
            let probs: Vec<Rational> = weights.iter().map(|w| w / &denominator).collect();
            if let Some(p) = probs.iter().find(|p| **p >= Rational::one()) {
                return Err(Error::Domain(format!(
                    "attachment probability {} is not below 1",
                    to_f64(p)
                )));
            }
            for mask in 0u64..(1u64 << n) {
                let mut p = Rational::one();
                let mut inc = vec![0; n];
                for (i, q) in probs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        inc[i] = 1;
                        p *= q;
                    } else {
                        p *= Rational::one() - q;
                    }
                }
                if !p.is_zero() {
                    acc.insert(inc, p);
                }
            }
        }
    }
    let outcomes = acc
        .into_iter()
        .filter(|(_, p)| !p.is_zero())
        .map(|(increments, probability)| Outcome { increments, probability })
        .collect();
    Ok(StepDistribution {
        model,
        outcomes,
        weights,
        denominator,
    })
}

fn fixed_draws(probs: &[Rational], left: u32, p: &Rational, inc: &mut Vec<u32>, acc: &mut BTreeMap<Vec<u32>, Rational>) {
    if left == 0 {
        *acc.entry(inc.clone()).or_insert_with(Rational::zero) += p;
        return;
    }
    for (i, q) in probs.iter().enumerate() {
        if q.is_zero() {
            continue;
        }
        inc[i] += 1;
        fixed_draws(probs, left - 1, &(p * q), inc, acc);
        inc[i] -= 1;
    }
}

fn updating_draws(
    weights: &[Rational],
    denominator: &Rational,
    left: u32,
    p: &Rational,
    inc: &mut Vec<u32>,
    acc: &mut BTreeMap<Vec<u32>, Rational>,
) {
    if left == 0 {
        *acc.entry(inc.clone()).or_insert_with(Rational::zero) += p;
        return;
    }
    let drawn: u32 = inc.iter().sum();
    let denom = denominator + int(drawn as u64);
    for i in 0..weights.len() {
        let w = &weights[i] + int(inc[i] as u64);
        if w.is_zero() {
            continue;
        }
        inc[i] += 1;
        updating_draws(weights, denominator, left - 1, &(p * w / &denom), inc, acc);
        inc[i] -= 1;
    }
}

/// Sign that `E[M_{n+1}^k | G_n] − M_n^k` must have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Contract {
    /// Zero.
    Martingale,
    /// Nonpositive.
    Supermartingale,
    /// Nonnegative.
    Submartingale,
}

impl Contract {
    pub fn holds(self, residual: f64, tol: f64) -> bool {
        match self {
            Contract::Martingale => residual.abs() <= tol,
            Contract::Supermartingale => residual <= tol,
            Contract::Submartingale => residual >= -tol,
        }
    }
}

/// The martingale property claimed for `(model, k, normalization)`, if any.
///
/// With `m = 1` the two normalizations agree. For `m > 1` the fixed-degree
/// model is a supermartingale (submartingale for `k < 0`) under `c̃`, and an
/// exact martingale at `k = 1` under `c`; the updating and random-out-degree
/// models are martingales under `c`.
pub fn martingale_contract(model: ModelKind, k: f64, normalization: Normalization) -> Option<Contract> {
    if k == 0.0 || model.m() == 1 {
        return Some(Contract::Martingale);
    }
    match (model, normalization) {
        (ModelKind::Paffd { .. }, Normalization::PowerM) => Some(if k > 0.0 {
            Contract::Supermartingale
        } else {
            Contract::Submartingale
        }),
        (ModelKind::Paffd { .. }, Normalization::Standard) => (k == 1.0).then_some(Contract::Martingale),
        (_, Normalization::Standard) => Some(Contract::Martingale),
        (_, Normalization::PowerM) => None,
    }
}

/// `E[M_{n+1}^k(i) | G_n] − M_n^k(i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleResidual {
    pub vertex: Vertex,
    pub k: f64,
    pub value: f64,
    pub residual: f64,
    /// Exact `E[M_{n+1}/M_n] − 1`; zero means an exact martingale step.
    #[serde(skip)]
    pub relative_excess: Rational,
    pub contract: Option<Contract>,
}

/// Enumerate the step law and compare one step of `M^k(i)`.
pub fn verify_martingale(state: &GraphState, i: Vertex, k: f64, normalization: Normalization) -> Result<MartingaleResidual> {
    let law = enumerate_step(state)?;
    martingale_residual(&law, state, i, k, normalization)
}

/// As `verify_martingale`, reusing an enumerated law of `state`.
pub fn martingale_residual(
    law: &StepDistribution,
    state: &GraphState,
    i: Vertex,
    k: f64,
    normalization: Normalization,
) -> Result<MartingaleResidual> {
    let idx = i.index();
    if idx >= law.n() {
        return Err(Error::InvalidArgument(format!("vertex {i} not in a graph of size {}", law.n())));
    }
    check_k_domain(k, state.fitness()[idx])?;
    let value = martingale_value(state, i, k, normalization)?;
    let contract = martingale_contract(law.model, k, normalization);
    let base = &law.weights[idx];
    if k == 0.0 || base.is_zero() {
        return Ok(MartingaleResidual {
            vertex: i,
            k,
            value,
            residual: 0.0,
            relative_excess: Rational::zero(),
            contract,
        });
    }
    let kq = exact(k)?;
    let d = &law.denominator;
    let m = law.model.m();
    // c_{n+1}/c_n: each factor 1 − k/(D + k + ℓ) equals (D + ℓ)/(D + k + ℓ).
    let mut c_ratio = Rational::one();
    match normalization {
        Normalization::Standard => {
            for l in 0..m {
                let l = int(l as u64);
                c_ratio *= (d + &l) / (d + &kq + &l);
            }
        }
        Normalization::PowerM => {
            let f = d / (d + &kq);
            for _ in 0..m {
                c_ratio *= &f;
            }
        }
    }
    // binom(Z + d + F + k − 1, k)/binom(Z + F + k − 1, k) = Π_{j<d} (Z + F + k + j)/(Z + F + j).
    let mut ratio = Rational::one();
    let mut expectation = Rational::zero();
    for (step, p) in law.marginal(idx).iter().enumerate() {
        if step > 0 {
            let j = int(step as u64 - 1);
            ratio = ratio * (base + &kq + &j) / (base + &j);
        }
        if !p.is_zero() {
            expectation += p * &ratio;
        }
    }
    let relative_excess = expectation * c_ratio - Rational::one();
    Ok(MartingaleResidual {
        vertex: i,
        k,
        value,
        residual: value * to_f64(&relative_excess),
        relative_excess,
        contract,
    })
}

/// Worst violation of negative quadrant dependence over vertex pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NqdReport {
    /// `max (P(ΔZ_i ≤ k, ΔZ_j ≤ l) − P(ΔZ_i ≤ k) P(ΔZ_j ≤ l))`.
    pub worst: f64,
    #[serde(skip)]
    pub worst_exact: Rational,
    /// `(i, j, k, l)` attaining the worst value.
    pub witness: Option<(Vertex, Vertex, u32, u32)>,
    /// No pair of vertices to compare.
    pub empty: bool,
}

pub fn verify_nqd(state: &GraphState) -> Result<NqdReport> {
    Ok(nqd_from_law(&enumerate_step(state)?))
}

/// NQD check on an enumerated law. Thresholds run over `0..max_increment`;
/// at `k = max_increment` both sides coincide.
pub fn nqd_from_law(law: &StepDistribution) -> NqdReport {
    let n = law.n();
    if n < 2 {
        return NqdReport {
            worst: 0.0,
            worst_exact: Rational::zero(),
            witness: None,
            empty: true,
        };
    }
    let levels = law.max_increment() as usize;
    let cdf: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut acc = Rational::zero();
            law.marginal(i)
                .into_iter()
                .map(|p| {
                    acc += p;
                    acc.clone()
                })
                .collect()
        })
        .collect();
    let mut worst: Option<(Rational, (Vertex, Vertex, u32, u32))> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            // joint[a][b] = P(ΔZ_i ≤ a, ΔZ_j ≤ b), built from the pmf table.
            let mut joint = vec![vec![Rational::zero(); levels]; levels];
            for o in &law.outcomes {
                let (a, b) = (o.increments[i] as usize, o.increments[j] as usize);
                if a < levels && b < levels {
                    joint[a][b] += &o.probability;
                }
            }
            for a in 0..levels {
                for b in 0..levels {
                    let mut v = joint[a][b].clone();
                    if a > 0 {
                        v += &joint[a - 1][b];
                    }
                    if b > 0 {
                        v += &joint[a][b - 1];
                    }
                    if a > 0 && b > 0 {
                        v -= &joint[a - 1][b - 1];
                    }
                    joint[a][b] = v;
                }
            }
            for a in 0..levels {
                for b in 0..levels {
                    let gap = &joint[a][b] - &cdf[i][a] * &cdf[j][b];
                    if worst.as_ref().is_none_or(|(w, _)| gap > *w) {
                        worst = Some((gap, (Vertex::from_index(i), Vertex::from_index(j), a as u32, b as u32)));
                    }
                }
            }
        }
    }
    let (worst_exact, witness) = worst.expect("at least one pair");
    NqdReport {
        worst: to_f64(&worst_exact),
        worst_exact,
        witness: Some(witness),
        empty: false,
    }
}

/// Residuals of the weak sufficient conditions on the increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// `max_i |E[ΔZ_i] − (Z_i + F_i)/(n F̄_n)|`, with `n F̄_n = Σ (Z_j + F_j)`.
    pub a1_residual: f64,
    /// Same with the right side scaled by the edges per step, `m (Z_i + F_i)/(n F̄_n)`.
    pub a1_residual_per_edge: f64,
    /// Same against the model's own denominator, `m (Z_i + F_i)/D_n`.
    pub a1_residual_model: f64,
    /// `max_i Var(ΔZ_i)/E[ΔZ_i]` over vertices with positive mean.
    pub a2_ratio: f64,
    /// `n · max_i |P(ΔZ_i = 1) − E[ΔZ_i]|`.
    pub a3_value: f64,
    pub a5_violation: f64,
}

pub fn verify_assumptions(state: &GraphState) -> Result<AssumptionReport> {
    let law = enumerate_step(state)?;
    Ok(assumptions_from_law(&law))
}

pub fn assumptions_from_law(law: &StepDistribution) -> AssumptionReport {
    let n = law.n();
    let total: Rational = law.weights.iter().cloned().sum();
    let m = int(law.model.m() as u64);
    let mut a1 = Rational::zero();
    let mut a1_edge = Rational::zero();
    let mut a1_model = Rational::zero();
    let mut a2: f64 = 0.0;
    let mut a3 = Rational::zero();
    for i in 0..n {
        let mean = law.mean(i);
        let w = &law.weights[i];
        a1 = a1.max((&mean - w / &total).abs());
        a1_edge = a1_edge.max((&mean - &m * w / &total).abs());
        a1_model = a1_model.max((&mean - &m * w / &law.denominator).abs());
        if mean.is_positive() {
            let second: Rational = law
                .outcomes
                .iter()
                .map(|o| {
                    let d = int(o.increments[i] as u64);
                    &o.probability * &d * &d
                })
                .sum();
            let var = second - &mean * &mean;
            a2 = a2.max(to_f64(&(var / &mean)));
        }
        a3 = a3.max((law.point_mass(i, 1) - &mean).abs());
    }
    AssumptionReport {
        a1_residual: to_f64(&a1),
        a1_residual_per_edge: to_f64(&a1_edge),
        a1_residual_model: to_f64(&a1_model),
        a2_ratio: a2,
        a3_value: n as f64 * to_f64(&a3),
        a5_violation: nqd_from_law(law).worst,
    }
}

/// Small states reachable from a path (`n0 = 2`) or star (`n0 = 3`) seed
/// under `model`, for every size up to `n_max`.
///
/// At each size at most `per_size` in-degree vectors are kept (evenly spread
/// over the sorted list of reachable vectors), and each gets
/// `fitness_per_state` fitness vectors drawn from `choices` by a fixed
/// rotation. For sizes where `choices^n` is at most `fitness_per_state`, all
/// fitness vectors are used.
pub fn small_state_family(
    model: ModelKind,
    n_max: usize,
    choices: &[f64],
    per_size: usize,
    fitness_per_state: usize,
) -> Result<Vec<GraphState>> {
    let mut out = Vec::new();
    for (n0, seed) in [(2usize, vec![1u32, 0]), (3, vec![2, 0, 0])] {
        let m0 = seed.iter().map(|&d| d as u64).sum::<u64>();
        let mut level = vec![seed.clone()];
        for n in n0..=n_max {
            if n > n0 {
                level = next_level(&level, model);
            }
            let picked = spread(&level, per_size);
            for (v, indeg) in picked.iter().enumerate() {
                for fitness in fitness_vectors(choices, n, fitness_per_state, v) {
                    let state = GraphState::from_degrees(model, n0, m0, fitness, indeg.clone(), Some(seed.clone()));
                    match state {
                        Ok(s) => out.push(s),
                        // Bernoulli states can leave the admissible region.
                        Err(_) if model == ModelKind::PafroBernoulli => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(out)
}

fn next_level(level: &[Vec<u32>], model: ModelKind) -> Vec<Vec<u32>> {
    let mut next = std::collections::BTreeSet::new();
    for indeg in level {
        let n = indeg.len();
        let mut increments: Vec<Vec<u32>> = Vec::new();
        match model {
            ModelKind::PafroSingleEdge => {
                for i in 0..n {
                    let mut d = vec![0; n];
                    d[i] = 1;
                    increments.push(d);
                }
            }
            ModelKind::PafroBernoulli => {
                for mask in 0u32..(1 << n) {
                    increments.push((0..n).map(|i| mask >> i & 1).collect());
                }
            }
            ModelKind::Paffd { m } | ModelKind::Pafud { m } => compositions(n, m, &mut vec![0; n], 0, &mut increments),
        }
        for inc in increments {
            let mut v: Vec<u32> = indeg.iter().zip(&inc).map(|(a, b)| a + b).collect();
            v.push(0);
            next.insert(v);
        }
    }
    next.into_iter().collect()
}

fn compositions(n: usize, left: u32, cur: &mut Vec<u32>, from: usize, out: &mut Vec<Vec<u32>>) {
    if left == 0 {
        out.push(cur.clone());
        return;
    }
    for i in from..n {
        cur[i] += 1;
        compositions(n, left - 1, cur, i, out);
        cur[i] -= 1;
    }
}

fn spread<T: Clone>(items: &[T], limit: usize) -> Vec<T> {
    if items.len() <= limit {
        return items.to_vec();
    }
    (0..limit).map(|j| items[j * items.len() / limit].clone()).collect()
}

fn fitness_vectors(choices: &[f64], n: usize, count: usize, salt: usize) -> Vec<Vec<f64>> {
    let c = choices.len();
    let all = c.checked_pow(n as u32).unwrap_or(usize::MAX);
    let code = |mut x: usize| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let v = choices[x % c];
                x /= c;
                v
            })
            .collect()
    };
    if all <= count {
        return (0..all).map(code).collect();
    }
    // Multiplicative stride coprime to c^n visits distinct codes.
    let stride = 7919 % all;
    (0..count).map(|j| code((salt * 31 + j * stride + j) % all)).collect()
}

/// Parameters of `verify_suite`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SuiteOptions {
    pub n_max: usize,
    pub fitness_choices: Vec<f64>,
    pub k_values: Vec<f64>,
    pub per_size: usize,
    pub fitness_per_state: usize,
    pub martingale_tol: f64,
    pub nqd_slack: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            n_max: 6,
            fitness_choices: vec![1.0, 1.5, 2.0],
            k_values: vec![0.0, 0.5, 1.0, 2.0, 3.0, -0.5],
            per_size: 12,
            fitness_per_state: 3,
            martingale_tol: 1e-10,
            nqd_slack: 1e-12,
        }
    }
}

/// One line of the verification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub model: String,
    pub check: String,
    /// `k` for martingale checks.
    pub k: Option<f64>,
    pub cases: usize,
    /// Worst value found; for sign contracts the signed residual closest to violating.
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

struct Tally {
    cases: usize,
    worst: f64,
    pass: bool,
}

impl Tally {
    fn new() -> Self {
        Tally {
            cases: 0,
            worst: f64::NEG_INFINITY,
            pass: true,
        }
    }

    fn add(&mut self, score: f64, ok: bool) {
        self.cases += 1;
        self.worst = self.worst.max(score);
        self.pass &= ok;
    }
}

/// Run the martingale, step-law and NQD checks over `small_state_family`.
///
/// Martingale rows use the model's default normalization and its contract;
/// the fixed-degree model additionally gets an exact `k = 1` row under `c`.
pub fn verify_suite(model: ModelKind, options: &SuiteOptions) -> Result<Vec<SuiteRow>> {
    let states = small_state_family(
        model,
        options.n_max,
        &options.fitness_choices,
        options.per_size,
        options.fitness_per_state,
    )?;
    let norm = Normalization::default_for(model);
    let mut sums = Tally::new();
    let mut nqd = Tally::new();
    let mut mart: Vec<(f64, Option<Contract>, Tally)> = options
        .k_values
        .iter()
        .map(|&k| (k, martingale_contract(model, k, norm), Tally::new()))
        .collect();
    let mut exact_k1 = Tally::new();
    let fixed = matches!(model, ModelKind::Paffd { m } if m > 1);
    for state in &states {
        let law = enumerate_step(state)?;
        let total = law.total_probability();
        sums.add(to_f64(&(total.clone() - Rational::one())).abs(), total.is_one());
        let report = nqd_from_law(&law);
        if !report.empty {
            let ok = if model == ModelKind::PafroBernoulli {
                report.worst_exact.is_zero()
            } else {
                report.worst <= options.nqd_slack
            };
            nqd.add(report.worst, ok);
        }
        for i in 0..state.n() {
            let v = Vertex::from_index(i);
            for (k, contract, tally) in mart.iter_mut() {
                let Some(contract) = *contract else { continue };
                if check_k_domain(*k, state.fitness()[i]).is_err() {
                    continue;
                }
                let r = martingale_residual(&law, state, v, *k, norm)?;
                let score = match contract {
                    Contract::Martingale => r.residual.abs(),
                    Contract::Supermartingale => r.residual,
                    Contract::Submartingale => -r.residual,
                };
                tally.add(score, contract.holds(r.residual, options.martingale_tol));
            }
            if fixed {
                let r = martingale_residual(&law, state, v, 1.0, Normalization::Standard)?;
                exact_k1.add(r.residual.abs(), r.relative_excess.is_zero());
            }
        }
    }
    let name = format!("{}(m={})", model.name(), model.m());
    let row = |check: &str, k: Option<f64>, t: Tally, tolerance: f64| SuiteRow {
        model: name.clone(),
        check: check.to_string(),
        k,
        cases: t.cases,
        worst: if t.cases == 0 { 0.0 } else { t.worst },
        tolerance,
        pass: t.pass,
    };
    let mut rows = vec![row("step_law_sums_to_one", None, sums, 0.0)];
    for (k, contract, tally) in mart {
        let Some(contract) = contract else { continue };
        let check = match contract {
            Contract::Martingale => "martingale",
            Contract::Supermartingale => "supermartingale",
            Contract::Submartingale => "submartingale",
        };
        rows.push(row(check, Some(k), tally, options.martingale_tol));
    }
    if fixed {
        rows.push(row("martingale_standard_c", Some(1.0), exact_k1, 0.0));
    }
    let slack = if model == ModelKind::PafroBernoulli { 0.0 } else { options.nqd_slack };
    rows.push(row("nqd", None, nqd, slack));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replication_rng;

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    fn two_vertex(model: ModelKind, indeg: Vec<u32>, m0: u64) -> GraphState {
        GraphState::from_degrees(model, 2, m0, vec![1.0, 1.0], indeg, None).unwrap()
    }

    fn prob(law: &StepDistribution, inc: &[u32]) -> Rational {
        law.outcomes
            .iter()
            .find(|o| o.increments == inc)
            .map(|o| o.probability.clone())
            .unwrap_or_else(Rational::zero)
    }

    #[test]
    fn paffd_multinomial() {
        // Weights (2, 1): seed path with F = (1, 1).
        let law = enumerate_step(&two_vertex(ModelKind::Paffd { m: 2 }, vec![1, 0], 1)).unwrap();
        assert_eq!(law.denominator, r(3, 1));
        assert_eq!(prob(&law, &[2, 0]), r(4, 9));
        assert_eq!(prob(&law, &[1, 1]), r(4, 9));
        assert_eq!(prob(&law, &[0, 2]), r(1, 9));
        assert_eq!(law.total_probability(), r(1, 1));
    }

    #[test]
    fn single_edge_categorical() {
        let law = enumerate_step(&two_vertex(ModelKind::PafroSingleEdge, vec![1, 0], 1)).unwrap();
        assert_eq!(prob(&law, &[1, 0]), r(2, 3));
        assert_eq!(prob(&law, &[0, 1]), r(1, 3));
    }

    #[test]
    fn pafud_sequential() {
        let law = enumerate_step(&two_vertex(ModelKind::Pafud { m: 2 }, vec![1, 0], 1)).unwrap();
        assert_eq!(prob(&law, &[2, 0]), r(1, 2));
        assert_eq!(prob(&law, &[1, 1]), r(1, 3));
        assert_eq!(prob(&law, &[0, 2]), r(1, 6));
    }

    #[test]
    fn bernoulli_product() {
        let g = GraphState::from_degrees(ModelKind::PafroBernoulli, 2, 1, vec![1.0, 1.5, 0.5], vec![1, 1, 0], Some(vec![1, 0]))
            .unwrap();
        let law = enumerate_step(&g).unwrap();
        // D = 1 + 1 + 3 = 5; p = (2/5, 5/10, 1/10).
        assert_eq!(law.denominator, r(5, 1));
        assert_eq!(prob(&law, &[1, 1, 1]), r(2, 5) * r(1, 2) * r(1, 10));
        assert_eq!(law.total_probability(), r(1, 1));
        assert_eq!(law.mean(0), r(2, 5));
    }

    #[test]
    fn enumeration_guard() {
        let n = 30;
        let mut indeg = vec![0u32; n];
        indeg[0] = 1 + 5 * (n as u32 - 2);
        let g = GraphState::from_degrees(ModelKind::Paffd { m: 5 }, 2, 1, vec![1.0; n], indeg, Some(vec![1, 0])).unwrap();
        assert!(matches!(enumerate_step(&g), Err(Error::EnumerationGuard { .. })));
    }

    #[test]
    fn m1_fixed_and_updating_coincide() {
        for s in small_state_family(ModelKind::Paffd { m: 1 }, 5, &[1.0, 1.5, 2.0], 10, 3).unwrap() {
            let u = GraphState::from_degrees(
                ModelKind::Pafud { m: 1 },
                s.n0(),
                s.m0(),
                s.fitness().to_vec(),
                s.indeg().to_vec(),
                Some(s.seed_indeg().to_vec()),
            )
            .unwrap();
            let a = enumerate_step(&s).unwrap();
            let b = enumerate_step(&u).unwrap();
            assert_eq!(a.outcomes, b.outcomes);
        }
    }

    #[test]
    fn martingale_examples() {
        let g = two_vertex(ModelKind::Pafud { m: 1 }, vec![1, 0], 1);
        let res = verify_martingale(&g, Vertex::new(1), 1.0, Normalization::Standard).unwrap();
        assert!(res.relative_excess.is_zero());
        assert!(res.residual.abs() < 1e-12);
        assert!((res.value - 2.0).abs() < 1e-12);
        for model in [ModelKind::Paffd { m: 2 }, ModelKind::PafroBernoulli, ModelKind::Pafud { m: 3 }] {
            let g = GraphState::from_degrees(model, 2, 1, vec![1.0, 1.5], vec![1, 0], None).unwrap();
            let res = verify_martingale(&g, Vertex::new(2), 0.0, Normalization::default_for(model)).unwrap();
            assert_eq!(res.residual, 0.0);
        }
        let g = two_vertex(ModelKind::Paffd { m: 2 }, vec![1, 0], 1);
        let res = verify_martingale(&g, Vertex::new(1), 2.0, Normalization::PowerM).unwrap();
        assert!(res.residual <= 0.0);
        assert_eq!(res.contract, Some(Contract::Supermartingale));
    }

    #[test]
    fn martingale_suite_small() {
        for model in [ModelKind::Pafud { m: 2 }, ModelKind::PafroBernoulli, ModelKind::PafroSingleEdge, ModelKind::Paffd { m: 2 }] {
            for s in small_state_family(model, 4, &[1.0, 1.5, 2.0], 6, 3).unwrap() {
                let law = enumerate_step(&s).unwrap();
                assert_eq!(law.total_probability(), Rational::one());
                for i in 1..=s.n() as u32 {
                    for k in [0.5, 1.0, 2.0, 3.0, -0.5] {
                        let norm = Normalization::default_for(model);
                        let res = martingale_residual(&law, &s, Vertex::new(i), k, norm).unwrap();
                        let contract = res.contract.expect("claimed");
                        assert!(contract.holds(res.residual, 1e-10), "{model:?} {:?} i={i} k={k}: {}", s.indeg(), res.residual);
                    }
                    let res = martingale_residual(&law, &s, Vertex::new(i), 1.0, Normalization::Standard).unwrap();
                    assert!(res.relative_excess.is_zero());
                }
            }
        }
    }

    #[test]
    fn suite_passes_on_small_family() {
        let opts = SuiteOptions {
            n_max: 4,
            per_size: 4,
            ..SuiteOptions::default()
        };
        for model in [ModelKind::Paffd { m: 3 }, ModelKind::Pafud { m: 2 }, ModelKind::PafroBernoulli] {
            let rows = verify_suite(model, &opts).unwrap();
            assert!(rows.iter().all(|r| r.pass && r.cases > 0), "{rows:?}");
        }
    }

    #[test]
    fn nqd_examples() {
        let g = two_vertex(ModelKind::Paffd { m: 2 }, vec![1, 0], 1);
        let rep = verify_nqd(&g).unwrap();
        // The joint probability of no hit on either vertex is 0, the product (1/9)(4/9).
        let law = enumerate_step(&g).unwrap();
        let rep00 = {
            let p1 = prob(&law, &[0, 2]);
            let p2 = prob(&law, &[2, 0]);
            Rational::zero() - p1 * p2
        };
        assert_eq!(rep00, r(-4, 81));
        assert!(rep.worst <= 0.0);
        let g = GraphState::from_degrees(ModelKind::PafroBernoulli, 2, 1, vec![1.0, 1.5, 0.5], vec![1, 1, 0], Some(vec![1, 0]))
            .unwrap();
        let rep = verify_nqd(&g).unwrap();
        assert!(rep.worst_exact.is_zero());
        let one = GraphState::from_degrees(ModelKind::Pafud { m: 1 }, 1, 1, vec![1.0], vec![1], None).unwrap();
        let rep = verify_nqd(&one).unwrap();
        assert!(rep.empty && rep.worst == 0.0);
    }

    #[test]
    fn nqd_threshold_zero_value() {
        // Only threshold pair (0, 0) for m = 2 at (1,0) is informative here.
        let law = enumerate_step(&two_vertex(ModelKind::Paffd { m: 2 }, vec![1, 0], 1)).unwrap();
        let rep = nqd_from_law(&law);
        assert!(rep.worst_exact <= Rational::zero());
        let cdf0 = |i: usize| law.point_mass(i, 0);
        assert_eq!(Rational::zero() - cdf0(0) * cdf0(1), r(-4, 81));
    }

    #[test]
    fn assumption_examples() {
        let g = two_vertex(ModelKind::Pafud { m: 1 }, vec![1, 0], 1);
        let rep = verify_assumptions(&g).unwrap();
        assert!(rep.a1_residual < 1e-12);
        let g = two_vertex(ModelKind::Paffd { m: 1 }, vec![1, 0], 1);
        assert_eq!(verify_assumptions(&g).unwrap().a3_value, 0.0);
        let g = two_vertex(ModelKind::Paffd { m: 2 }, vec![1, 0], 1);
        let rep = verify_assumptions(&g).unwrap();
        // Vertex 1: Binomial(2, 2/3) has Var/Mean = 1/3; vertex 2: 2/3.
        assert!((rep.a2_ratio - 2.0 / 3.0).abs() < 1e-15);
        assert!(rep.a1_residual_per_edge < 1e-15);
        assert!(rep.a1_residual_model < 1e-15);
    }

    #[test]
    fn monte_carlo_matches_enumeration() {
        let mut rng = replication_rng(17, 0);
        let states = [
            GraphState::from_degrees(ModelKind::Pafud { m: 3 }, 2, 1, vec![1.0, 1.5, 2.0, 1.0], vec![3, 3, 1, 0], Some(vec![1, 0])),
            GraphState::from_degrees(ModelKind::Paffd { m: 2 }, 2, 1, vec![2.0, 1.5, 1.0], vec![2, 1, 0], Some(vec![1, 0])),
            GraphState::from_degrees(ModelKind::PafroBernoulli, 2, 1, vec![1.0, 1.5, 1.0], vec![1, 1, 0], Some(vec![1, 0])),
        ];
        for s in states {
            let s = s.unwrap().with_plan(crate::FitnessSpec::Deterministic { c: 1.0 });
            let exact = enumerate_step(&s).unwrap().probabilities_f64();
            let trials = 1_000_000;
            let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
            for _ in 0..trials {
                let mut t = s.clone();
                t.grow_step(&mut rng).unwrap();
                let inc: Vec<u32> = t.indeg()[..s.n()].iter().zip(s.indeg()).map(|(a, b)| a - b).collect();
                *counts.entry(inc).or_default() += 1;
            }
            let mut tv = 0.0;
            for (k, p) in &exact {
                tv += (p - counts.get(k).copied().unwrap_or(0) as f64 / trials as f64).abs();
            }
            tv += counts.keys().filter(|k| !exact.contains_key(*k)).map(|k| counts[k] as f64 / trials as f64).sum::<f64>();
            assert!(tv / 2.0 < 0.005, "{:?}: {}", s.model(), tv / 2.0);
        }
    }
}

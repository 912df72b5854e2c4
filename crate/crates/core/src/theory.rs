//! Limit objects of the fitness model: the degree law `p(k)`, the measures
//! `Γ^(k)` and `Γ`, the weak-disorder tail constant, the normalising
//! sequences `c_n^k` and the martingales built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{Envelope, FitnessSpec, Regime};
use crate::graph::{GraphState, ModelKind, Vertex};
use crate::numeric::{self, ln_gamma, ln_gamma_ratio, QuadratureSettings};

/// Fitness law, out-degree and quadrature settings for the limit formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryContext {
    pub spec: FitnessSpec,
    pub m: u32,
    pub theta: f64,
    pub quadrature: QuadratureSettings,
}

/// Predicted decay exponent of `p(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPrediction {
    pub regime: Regime,
    pub exponent: f64,
    /// At `α = 1 + θ_m` the power law carries the extra factor `ℓ*(k)`.
    pub slowly_varying_correction: bool,
}

impl TheoryContext {
    pub fn new(spec: FitnessSpec, m: u32) -> Result<Self> {
        spec.validate()?;
        if m == 0 {
            return Err(Error::InvalidArgument("out-degree m must be at least 1".into()));
        }
        let theta = spec.theta(m);
        Ok(Self {
            spec,
            m,
            theta,
            quadrature: QuadratureSettings::default(),
        })
    }

    pub fn with_quadrature(mut self, quadrature: QuadratureSettings) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn regime(&self) -> Regime {
        self.spec.classify_regime(self.m)
    }

    fn finite_theta(&self) -> Result<f64> {
        if self.theta.is_finite() {
            Ok(self.theta)
        } else {
            Err(Error::Regime(format!(
                "θ_m is infinite for {:?}: the limit degree law does not exist",
                self.spec
            )))
        }
    }

    /// Density of `Γ^(k)` with respect to μ:
    /// `θ/(x+θ) · Π_{ℓ=1}^k (ℓ−1+x)/(ℓ+x+θ)`.
    pub fn gamma_k_density(&self, k: u32, x: f64) -> f64 {
        let theta = self.theta;
        if k == 0 {
            return theta / (x + theta);
        }
        if x <= 0.0 {
            return 0.0;
        }
        let kf = k as f64;
        let ln = theta.ln() - (x + theta).ln() + ln_gamma_ratio(x, kf) - ln_gamma_ratio(x + theta + 1.0, kf);
        ln.exp()
    }

    /// `p(k) = Γ^(k)([0, ∞))`.
    pub fn limit_pk(&self, k: u32) -> Result<f64> {
        self.finite_theta()?;
        let r = self
            .spec
            .expect(|x| self.gamma_k_density(k, x), Envelope::BOUNDED, &self.quadrature)?;
        Ok(r.value)
    }

    /// `Γ^(k)((lo, hi])`.
    pub fn limit_gamma_k(&self, k: u32, lo: f64, hi: f64) -> Result<f64> {
        self.finite_theta()?;
        check_bin(lo, hi)?;
        let r = self.spec.expect_range(
            |x| self.gamma_k_density(k, x),
            lo,
            hi,
            Envelope::BOUNDED,
            &self.quadrature,
        )?;
        Ok(r.value)
    }

    /// `Γ((lo, hi])` for the size-biased limit `Γ(dx) = x/(θ_m − 1) μ(dx)`.
    pub fn limit_gamma(&self, lo: f64, hi: f64) -> Result<f64> {
        let theta = self.finite_theta()?;
        check_bin(lo, hi)?;
        let env = Envelope {
            coef: 1.0 / (theta - 1.0),
            power: 1.0,
        };
        let r = self
            .spec
            .expect_range(|x| x / (theta - 1.0), lo, hi, env, &self.quadrature)?;
        Ok(r.value)
    }

    /// `C = θ_m ∫ Γ(x + θ_m)/Γ(x) μ(dx)`, the constant in `p(k) ∼ C k^{−(1+θ_m)}`.
    pub fn weak_tail_constant(&self) -> Result<f64> {
        let theta = self.finite_theta()?;
        if !self.spec.moment_finite(theta) {
            return Err(Error::Regime(format!(
                "E[F^θ] is infinite for θ = {theta}: no weak-disorder constant"
            )));
        }
        let env = Envelope {
            coef: (1.0 + theta).powf(theta),
            power: theta,
        };
        let r = self.spec.expect(
            |x| if x <= 0.0 { 0.0 } else { ln_gamma_ratio(x, theta).exp() },
            env,
            &self.quadrature,
        )?;
        Ok(theta * r.value)
    }

    /// Decay exponent of `p(k)` for the regime of this context.
    pub fn tail_exponent_prediction(&self) -> Result<TailPrediction> {
        let regime = self.regime();
        match regime {
            Regime::Weak | Regime::StrongBoundary => Ok(TailPrediction {
                regime,
                exponent: 1.0 + self.theta,
                slowly_varying_correction: regime == Regime::StrongBoundary,
            }),
            Regime::Strong => Ok(TailPrediction {
                regime,
                exponent: self.spec.alpha().expect("strong disorder has a power-law tail"),
                slowly_varying_correction: false,
            }),
            Regime::Extreme | Regime::Unclassified => Err(Error::Regime(format!(
                "no stationary degree-tail prediction in the {regime:?} regime"
            ))),
        }
    }

    /// `ℓ*(k) = ∫_1^k ℓ(x)/x dx`, the boundary-case correction.
    pub fn ell_star(&self, k: f64) -> Result<f64> {
        if self.spec.tail_index().is_none() {
            return Err(Error::Regime("ℓ* needs a power-law fitness tail".into()));
        }
        if k <= 1.0 {
            return Ok(0.0);
        }
        let spec = &self.spec;
        let r = numeric::integrate(
            |u: f64| spec.slowly_varying(u.exp()).unwrap_or(0.0),
            0.0,
            k.ln(),
            &self.quadrature,
        )?;
        Ok(r.value)
    }
}

fn check_bin(lo: f64, hi: f64) -> Result<()> {
    if lo < hi {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("empty bin ({lo}, {hi}]")))
    }
}

/// Which normalising sequence multiplies the binomial in `M_n^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// `c_n^k = Π_j Π_{ℓ=1}^m (1 − k/(D_j + k + ℓ − 1))`.
    Standard,
    /// `c̃_n^k = Π_j (1 − k/(D_j + k))^m`.
    PowerM,
}

impl Normalization {
    /// `PowerM` for the fixed-degree model, `Standard` otherwise.
    pub fn default_for(model: ModelKind) -> Self {
        match model {
            ModelKind::Paffd { .. } => Normalization::PowerM,
            _ => Normalization::Standard,
        }
    }
}

/// Seed and size data shared by the `c_n^k` products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceShape {
    pub m: u32,
    pub n0: usize,
    pub m0: u64,
}

impl SequenceShape {
    pub fn of(state: &GraphState) -> Self {
        Self {
            m: state.m(),
            n0: state.n0(),
            m0: state.m0(),
        }
    }

    /// `D_j = m0 + m(j − n0) + S_j`.
    pub fn denominator(&self, j: usize, fitness_prefix: &[f64]) -> f64 {
        (self.m0 + self.m as u64 * (j - self.n0) as u64) as f64 + fitness_prefix[j - 1]
    }
}

/// `ln c^k` and `ln c̃^k` for a single factor `j`.
fn ln_factor(d: f64, k: f64, m: u32) -> Result<(f64, f64)> {
    let mut std = 0.0;
    for l in 0..m {
        let den = d + k + l as f64;
        if !(den > 0.0) || !(d + l as f64 > 0.0) {
            return Err(Error::Domain(format!("k = {k} makes a c-sequence factor nonpositive (D = {d})")));
        }
        std += (-k / den).ln_1p();
    }
    let den = d + k;
    if !(den > 0.0) || !(d > 0.0) {
        return Err(Error::Domain(format!("k = {k} makes a c-sequence factor nonpositive (D = {d})")));
    }
    Ok((std, m as f64 * (-k / den).ln_1p()))
}

/// `(ln c_n^k, ln c̃_n^k)` for every `n` in `n0..=n_max` (entry `n − n0`).
///
/// `fitness_prefix[j − 1] = S_j` must be available for `j < n_max`.
pub fn ln_c_path(fitness_prefix: &[f64], k: f64, shape: SequenceShape, n_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_max < shape.n0 {
        return Err(Error::InvalidArgument(format!("n = {n_max} is below n0 = {}", shape.n0)));
    }
    if fitness_prefix.len() + 1 < n_max {
        return Err(Error::InvalidArgument(format!(
            "fitness sums known up to {}, c_n needs S_j for j < {n_max}",
            fitness_prefix.len()
        )));
    }
    let len = n_max - shape.n0 + 1;
    let mut std = Vec::with_capacity(len);
    let mut pow = Vec::with_capacity(len);
    let (mut a, mut b) = (0.0, 0.0);
    std.push(a);
    pow.push(b);
    for j in shape.n0..n_max {
        let (fa, fb) = ln_factor(shape.denominator(j, fitness_prefix), k, shape.m)?;
        a += fa;
        b += fb;
        std.push(a);
        pow.push(b);
    }
    Ok((std, pow))
}

/// `(c_n^k, c̃_n^k)`.
pub fn c_sequence(fitness_prefix: &[f64], k: f64, shape: SequenceShape, n: usize) -> Result<(f64, f64)> {
    let (a, b) = ln_c_path(fitness_prefix, k, shape, n)?;
    Ok((a.last().unwrap().exp(), b.last().unwrap().exp()))
}

/// Generalized binomial `Γ(a+1)/(Γ(b+1)Γ(a−b+1))` in log form.
pub fn ln_binomial(a: f64, b: f64) -> f64 {
    ln_gamma(a + 1.0) - ln_gamma(b + 1.0) - ln_gamma(a - b + 1.0)
}

/// Smallest admissible `k` is above `−min(F_i, 1)`.
pub fn check_k_domain(k: f64, fitness: f64) -> Result<()> {
    if k > -fitness.min(1.0) {
        Ok(())
    } else {
        Err(Error::Domain(format!("k = {k} must exceed -min(F_i, 1) = {}", -fitness.min(1.0))))
    }
}

/// `M_n^k(i) = c_n^k · binom(Z_n(i) + F_i + k − 1, k)` at the current size of `state`.
pub fn martingale_value(state: &GraphState, i: Vertex, k: f64, normalization: Normalization) -> Result<f64> {
    let idx = i.index();
    if idx >= state.n() {
        return Err(Error::InvalidArgument(format!("vertex {i} not in a graph of size {}", state.n())));
    }
    let f = state.fitness()[idx];
    check_k_domain(k, f)?;
    if k == 0.0 {
        return Ok(1.0);
    }
    let (ln_std, ln_pow) = ln_c_path(state.fitness_prefix(), k, SequenceShape::of(state), state.n())?;
    let ln_c = match normalization {
        Normalization::Standard => *ln_std.last().unwrap(),
        Normalization::PowerM => *ln_pow.last().unwrap(),
    };
    let z = state.indeg()[idx] as f64;
    Ok((ln_c + ln_binomial(z + f + k - 1.0, k)).exp())
}

/// `E[Z_n(i) | F] = (c_{i∨n0}/c_n) Z_{i∨n0}(i) + F_i (c_{i∨n0}/c_n − 1)`,
/// with `c = c^1` computed from the fitness sequence `fitness[0..n]`.
pub fn conditional_mean_degree(fitness: &[f64], seed_indeg: &[u32], m0: u64, m: u32, i: Vertex, n: usize) -> Result<f64> {
    let n0 = seed_indeg.len();
    let idx = i.index();
    if idx >= n || fitness.len() < n {
        return Err(Error::InvalidArgument(format!(
            "need vertex {i} ≤ n = {n} ≤ {} known fitness values",
            fitness.len()
        )));
    }
    if n < n0 {
        return Err(Error::InvalidArgument(format!("n = {n} is below n0 = {n0}")));
    }
    let mut prefix = Vec::with_capacity(n);
    let mut s = 0.0;
    for &f in &fitness[..n] {
        s += f;
        prefix.push(s);
    }
    let shape = SequenceShape { m, n0, m0 };
    let (ln_std, _) = ln_c_path(&prefix, 1.0, shape, n)?;
    let start = (idx + 1).max(n0);
    let ratio = (ln_std[start - n0] - ln_std[n - n0]).exp();
    let z0 = seed_indeg.get(idx).copied().unwrap_or(0) as f64;
    Ok(ratio * z0 + fitness[idx] * (ratio - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(c: f64) -> TheoryContext {
        TheoryContext::new(FitnessSpec::Deterministic { c }, 1).unwrap()
    }

    fn uniform(m: u32) -> TheoryContext {
        TheoryContext::new(FitnessSpec::Uniform { a: 0.0, b: 1.0 }, m).unwrap()
    }

    #[test]
    fn deterministic_pk_closed_form() {
        let ctx = det(1.0);
        for k in 0..30u32 {
            let kf = k as f64;
            let exact = 4.0 / ((kf + 1.0) * (kf + 2.0) * (kf + 3.0));
            assert!((ctx.limit_pk(k).unwrap() - exact).abs() < 1e-14 * exact.max(1e-3));
        }
        assert!((ctx.limit_pk(0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((ctx.limit_pk(2).unwrap() - 1.0 / 15.0).abs() < 1e-15);
        let partial: f64 = (0..=10_000).map(|k| ctx.limit_pk(k).unwrap()).sum();
        assert!(partial >= 0.999);
    }

    #[test]
    fn uniform_p0_matches_log_formula() {
        let ctx = uniform(1);
        let expected = 1.5 * (2.5f64 / 1.5).ln();
        assert!((ctx.limit_pk(0).unwrap() - expected).abs() < 1e-10);
        assert!((expected - 0.76624).abs() < 1e-5);
    }

    #[test]
    fn gamma_k_bins_are_additive() {
        let ctx = uniform(2);
        let edges = [0.0, 0.1, 0.35, 0.7, 1.0];
        for k in [0u32, 1, 3, 7] {
            let sum: f64 = edges.windows(2).map(|w| ctx.limit_gamma_k(k, w[0], w[1]).unwrap()).sum();
            assert!((sum - ctx.limit_pk(k).unwrap()).abs() < 1e-10);
        }
        let ctx = det(1.0);
        assert!((ctx.limit_gamma_k(0, 0.0, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ctx.limit_gamma_k(0, 1.0, 2.0).unwrap(), 0.0);
        assert!((ctx.limit_gamma(0.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recursion_reproduces_pk() {
        let ctx = TheoryContext::new(FitnessSpec::ParetoTail { beta: 3.0, xmin: 1.0, c: 1.0 }, 1).unwrap();
        let theta = ctx.theta;
        for k in [1u32, 5, 12, 30] {
            let rec = |x: f64| {
                let mut g = theta / (x + theta);
                for j in 1..=k {
                    let j = j as f64;
                    g *= (j - 1.0 + x) / (j + x + theta);
                }
                g
            };
            let direct = ctx.spec.expect(rec, Envelope::BOUNDED, &ctx.quadrature).unwrap().value;
            assert!((direct - ctx.limit_pk(k).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn weak_tail_constants() {
        assert!((det(1.0).weak_tail_constant().unwrap() - 4.0).abs() < 1e-12);
        assert!((det(2.0).weak_tail_constant().unwrap() - 72.0).abs() < 1e-10);
        let ctx = uniform(1);
        let oracle = numeric::integrate(
            |x: f64| if x <= 0.0 { 0.0 } else { (ln_gamma(x + 1.5) - ln_gamma(x)).exp() },
            0.0,
            1.0,
            &QuadratureSettings::default(),
        )
        .unwrap()
        .value;
        assert!((ctx.weak_tail_constant().unwrap() - 1.5 * oracle).abs() < 1e-10);
        let heavy = TheoryContext::new(FitnessSpec::ParetoTail { beta: 1.5, xmin: 1.0, c: 1.0 }, 1).unwrap();
        assert!(matches!(heavy.weak_tail_constant(), Err(Error::Regime(_))));
    }

    #[test]
    fn pk_tail_approaches_constant() {
        let ctx = det(1.0);
        let k = 1000u32;
        let scaled = (k as f64).powi(3) * ctx.limit_pk(k).unwrap();
        assert!((scaled / 4.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn exponents() {
        assert_eq!(det(1.0).tail_exponent_prediction().unwrap().exponent, 3.0);
        let strong = TheoryContext::new(FitnessSpec::ParetoTail { beta: 1.5, xmin: 1.0, c: 1.0 }, 1).unwrap();
        assert_eq!(strong.tail_exponent_prediction().unwrap().exponent, 2.5);
        assert!((uniform(2).tail_exponent_prediction().unwrap().exponent - 2.25).abs() < 1e-15);
        let extreme = TheoryContext::new(FitnessSpec::ParetoTail { beta: 0.5, xmin: 1.0, c: 1.0 }, 1).unwrap();
        assert!(extreme.tail_exponent_prediction().is_err());
        assert!(extreme.limit_pk(0).is_err());
        // β = θ_1 = 1 + β/(β−1) solves β² − 3β + 1 = 0.
        let beta = (3.0 + 5f64.sqrt()) / 2.0;
        let boundary = TheoryContext::new(FitnessSpec::ParetoTail { beta, xmin: 1.0, c: 1.0 }, 1).unwrap();
        let p = boundary.tail_exponent_prediction().unwrap();
        assert_eq!(p.regime, Regime::StrongBoundary);
        assert!(p.slowly_varying_correction);
        assert!((boundary.ell_star(100.0).unwrap() - 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn c_sequence_examples() {
        let shape = SequenceShape { m: 1, n0: 2, m0: 1 };
        let prefix = [1.0, 2.0, 3.0];
        assert_eq!(c_sequence(&prefix, 0.0, shape, 3).unwrap(), (1.0, 1.0));
        let (c, ct) = c_sequence(&prefix, 1.0, shape, 3).unwrap();
        assert!((c - 0.75).abs() < 1e-15 && (ct - 0.75).abs() < 1e-15);
        assert_eq!(c_sequence(&prefix, 1.0, shape, 2).unwrap(), (1.0, 1.0));
        assert!(c_sequence(&prefix, -5.0, shape, 3).is_err());
    }

    #[test]
    fn c_power_inequality() {
        let shape = SequenceShape { m: 2, n0: 2, m0: 1 };
        let prefix: Vec<f64> = (1..=200).map(|j| 0.7 * j as f64).collect();
        let (c1, _) = ln_c_path(&prefix, 1.0, shape, 200).unwrap();
        for k in [1.0, 1.5, 2.0, 3.0] {
            let (ck, _) = ln_c_path(&prefix, k, shape, 200).unwrap();
            for (a, b) in c1.iter().zip(&ck) {
                assert!(k * a <= b + 1e-12);
            }
        }
    }

    #[test]
    fn martingale_value_examples() {
        let g = GraphState::from_degrees(ModelKind::Pafud { m: 1 }, 2, 1, vec![1.0, 1.0], vec![1, 0], None).unwrap();
        let v = martingale_value(&g, Vertex::new(1), 1.0, Normalization::Standard).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        assert_eq!(martingale_value(&g, Vertex::new(2), 0.0, Normalization::Standard).unwrap(), 1.0);
        assert!(martingale_value(&g, Vertex::new(1), -1.0, Normalization::Standard).is_err());
    }

    #[test]
    fn conditional_mean_examples() {
        let f = [1.0, 1.0, 1.0];
        let v = conditional_mean_degree(&f, &[1, 0], 1, 1, Vertex::new(1), 3).unwrap();
        assert!((v - 5.0 / 3.0).abs() < 1e-14);
        assert_eq!(conditional_mean_degree(&f, &[1, 0], 1, 1, Vertex::new(3), 3).unwrap(), 0.0);
    }
}

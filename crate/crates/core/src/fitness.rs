//! Fitness laws μ and the tail, quantile and moment quantities derived from them.
//!
//! Tails use the closed convention `tail_prob(x) = P(F ≥ x)`. Every law is
//! sampled by inverse transform of the tail, so a fixed random stream yields
//! the same fitness sequence on every platform.

use std::f64::consts::E;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, Integral, QuadratureSettings};
use crate::rng::open_unit;

fn one() -> f64 {
    1.0
}

/// Parametric fitness distribution.
///
/// Power-law families have `P(F ≥ x) = ℓ(x)·x^{−beta}` above `xmin`, where
/// `beta = α − 1` and ℓ is either the constant `c` (`ParetoTail`) or
/// `c·(log(e + x))^gamma` (`LogPareto`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FitnessSpec {
    Deterministic {
        c: f64,
    },
    ParetoTail {
        beta: f64,
        xmin: f64,
        c: f64,
    },
    LogPareto {
        beta: f64,
        xmin: f64,
        gamma: f64,
        #[serde(default = "one")]
        c: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Exponential {
        rate: f64,
    },
}

/// Disorder regime of a fitness law relative to the out-degree `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `E[F^{θ_m + ε}] < ∞` for some ε > 0.
    Weak,
    /// Power law with `α ∈ (2, 1 + θ_m)`.
    Strong,
    /// Power law with `α = 1 + θ_m` and `E[F^{θ_m}] = ∞`.
    StrongBoundary,
    /// Power law with `α ∈ (1, 2)`.
    Extreme,
    Unclassified,
}

/// Upper envelope `|f(x)| ≤ coef · max(x, 1)^power` used to certify where
/// an integral against μ may be truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub coef: f64,
    pub power: f64,
}

impl Envelope {
    pub const BOUNDED: Envelope = Envelope {
        coef: 1.0,
        power: 0.0,
    };
}

impl FitnessSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidFitness(msg));
        let pos = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidFitness(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            FitnessSpec::Deterministic { c } => pos("c", c),
            FitnessSpec::ParetoTail { beta, xmin, c } => {
                pos("beta", beta)?;
                pos("xmin", xmin)?;
                pos("c", c)?;
                if c * xmin.powf(-beta) > 1.0 + 1e-12 {
                    return bad(format!("c·xmin^(-beta) = {} exceeds 1", c * xmin.powf(-beta)));
                }
                Ok(())
            }
            FitnessSpec::LogPareto { beta, xmin, gamma, c } => {
                pos("beta", beta)?;
                pos("xmin", xmin)?;
                pos("gamma", gamma)?;
                pos("c", c)?;
                // gamma ≤ beta keeps c·log(e+x)^gamma·x^(-beta) strictly decreasing.
                if gamma > beta {
                    return bad(format!("gamma = {gamma} must not exceed beta = {beta}"));
                }
                Ok(())
            }
            FitnessSpec::Uniform { a, b } => {
                if !(a.is_finite() && a >= 0.0) {
                    return bad(format!("a must be nonnegative and finite, got {a}"));
                }
                pos("b", b)?;
                if a >= b {
                    return bad(format!("Uniform requires a < b, got a = {a}, b = {b}"));
                }
                Ok(())
            }
            FitnessSpec::Exponential { rate } => pos("rate", rate),
        }
    }

    /// Tail index `β = α − 1` of the power-law families; `None` for light tails.
    pub fn tail_index(&self) -> Option<f64> {
        match *self {
            FitnessSpec::ParetoTail { beta, .. } | FitnessSpec::LogPareto { beta, .. } => Some(beta),
            _ => None,
        }
    }

    /// The power-law exponent α of Assumption-style tails, `β + 1`.
    pub fn alpha(&self) -> Option<f64> {
        self.tail_index().map(|b| b + 1.0)
    }

    /// Slowly varying part ℓ(x) of a power-law tail.
    pub fn slowly_varying(&self, x: f64) -> Option<f64> {
        match *self {
            FitnessSpec::ParetoTail { c, .. } => Some(c),
            FitnessSpec::LogPareto { gamma, c, .. } => Some(c * (E + x).ln().powf(gamma)),
            _ => None,
        }
    }

    fn log_pareto_raw(beta: f64, gamma: f64, c: f64, x: f64) -> f64 {
        c * (E + x).ln().powf(gamma) * x.powf(-beta)
    }

    /// Essential infimum of the law.
    pub fn lower_support(&self) -> f64 {
        match *self {
            FitnessSpec::Deterministic { c } => c,
            FitnessSpec::ParetoTail { xmin, .. } => xmin,
            FitnessSpec::LogPareto { beta, xmin, gamma, c } => {
                let raw = |x| Self::log_pareto_raw(beta, gamma, c, x);
                if raw(xmin) <= 1.0 {
                    xmin
                } else {
                    let mut hi = xmin * 2.0;
                    while raw(hi) > 1.0 {
                        hi *= 2.0;
                    }
                    let r = numeric::bisect(|lx: f64| raw(lx.exp()) - 1.0, xmin.ln(), hi.ln(), 200);
                    r.exp()
                }
            }
            FitnessSpec::Uniform { a, .. } => a,
            FitnessSpec::Exponential { .. } => 0.0,
        }
    }

    /// Point mass at the lower end of the support, as `(location, mass)`.
    pub fn atom(&self) -> Option<(f64, f64)> {
        match *self {
            FitnessSpec::Deterministic { c } => Some((c, 1.0)),
            FitnessSpec::ParetoTail { beta, xmin, c } => {
                let mass = 1.0 - c * xmin.powf(-beta);
                (mass > 0.0).then_some((xmin, mass))
            }
            FitnessSpec::LogPareto { beta, xmin, gamma, c } => {
                let mass = 1.0 - Self::log_pareto_raw(beta, gamma, c, xmin);
                (mass > 0.0).then_some((xmin, mass))
            }
            _ => None,
        }
    }

    /// `P(F ≥ x)`.
    pub fn tail_prob(&self, x: f64) -> f64 {
        match *self {
            FitnessSpec::Deterministic { c } => {
                if x <= c {
                    1.0
                } else {
                    0.0
                }
            }
            FitnessSpec::ParetoTail { beta, xmin, c } => {
                if x <= xmin {
                    1.0
                } else {
                    c * x.powf(-beta)
                }
            }
            FitnessSpec::LogPareto { beta, gamma, c, .. } => {
                let lo = self.lower_support();
                if x <= lo {
                    1.0
                } else {
                    Self::log_pareto_raw(beta, gamma, c, x).min(1.0)
                }
            }
            FitnessSpec::Uniform { a, b } => {
                if x <= a {
                    1.0
                } else if x >= b {
                    0.0
                } else {
                    (b - x) / (b - a)
                }
            }
            FitnessSpec::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
        }
    }

    /// Density of the absolutely continuous part at `x`.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            FitnessSpec::Deterministic { .. } => 0.0,
            FitnessSpec::ParetoTail { beta, xmin, c } => {
                if x <= xmin {
                    0.0
                } else {
                    c * beta * x.powf(-beta - 1.0)
                }
            }
            FitnessSpec::LogPareto { beta, gamma, c, .. } => {
                if x <= self.lower_support() {
                    return 0.0;
                }
                let l = (E + x).ln();
                c * l.powf(gamma) * x.powf(-beta - 1.0) * (beta - gamma * x / ((E + x) * l))
            }
            FitnessSpec::Uniform { a, b } => {
                if x > a && x < b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            FitnessSpec::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
        }
    }

    /// Generalized inverse of the tail: the largest `x` with `P(F ≥ x) ≥ u`,
    /// for `u ∈ (0, 1]`. Feeding a uniform draw gives a sample of μ.
    pub fn inverse_tail(&self, u: f64) -> f64 {
        match *self {
            FitnessSpec::Deterministic { c } => c,
            FitnessSpec::ParetoTail { beta, xmin, c } => {
                if u >= c * xmin.powf(-beta) {
                    xmin
                } else {
                    (c / u).powf(1.0 / beta)
                }
            }
            FitnessSpec::LogPareto { beta, gamma, c, .. } => {
                let lo = self.lower_support();
                let raw = |x| Self::log_pareto_raw(beta, gamma, c, x);
                if u >= raw(lo) {
                    return lo;
                }
                let mut hi = lo * 2.0;
                while raw(hi) > u {
                    hi *= 2.0;
                }
                numeric::bisect(|lx: f64| raw(lx.exp()) - u, lo.ln(), hi.ln(), 200).exp()
            }
            FitnessSpec::Uniform { a, b } => b - u * (b - a),
            FitnessSpec::Exponential { rate } => -u.ln() / rate,
        }
    }

    /// One draw from μ by inverse transform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FitnessSpec::Deterministic { c } => c,
            // Tail level in [0, 1) keeps the draw in (a, b], so it is never zero.
            FitnessSpec::Uniform { .. } => self.inverse_tail(rng.random::<f64>()),
            _ => self.inverse_tail(open_unit(rng)),
        }
    }

    /// Extreme-value normalization `u_n = inf{t : P(F ≥ t) ≤ 1/n}`, with the
    /// infimum taken over the support.
    pub fn quantile_u(&self, n: u64) -> f64 {
        let n = n.max(1);
        self.inverse_tail(1.0 / n as f64)
    }

    /// `E[F]`, or `+∞` when the mean does not exist.
    pub fn mean(&self) -> f64 {
        match *self {
            FitnessSpec::Deterministic { c } => c,
            FitnessSpec::ParetoTail { beta, xmin, c } => {
                if beta <= 1.0 {
                    f64::INFINITY
                } else {
                    let upper = c * xmin.powf(-beta);
                    xmin * (1.0 - upper) + c * beta * xmin.powf(1.0 - beta) / (beta - 1.0)
                }
            }
            FitnessSpec::LogPareto { beta, .. } => {
                if beta <= 1.0 {
                    f64::INFINITY
                } else {
                    let env = Envelope {
                        coef: 1.0,
                        power: 1.0,
                    };
                    self.expect(|x| x, env, &QuadratureSettings::default())
                        .map(|r| r.value)
                        .unwrap_or(f64::NAN)
                }
            }
            FitnessSpec::Uniform { a, b } => 0.5 * (a + b),
            FitnessSpec::Exponential { rate } => 1.0 / rate,
        }
    }

    /// `θ_m = 1 + E[F]/m`; `+∞` when `E[F] = ∞`.
    pub fn theta(&self, m: u32) -> f64 {
        1.0 + self.mean() / m.max(1) as f64
    }

    /// Whether `E[F^p] < ∞`.
    pub fn moment_finite(&self, p: f64) -> bool {
        match self.tail_index() {
            None => true,
            Some(beta) => p < beta,
        }
    }

    /// Upper bound on `∫_{[x, ∞)} y^p μ(dy)` for `x` beyond the bulk of the law.
    pub fn tail_moment_bound(&self, p: f64, x: f64) -> f64 {
        match *self {
            FitnessSpec::Deterministic { c } => {
                if x > c {
                    0.0
                } else {
                    c.powf(p)
                }
            }
            FitnessSpec::Uniform { b, .. } => {
                if x >= b {
                    0.0
                } else {
                    b.powf(p.max(0.0)) * self.tail_prob(x)
                }
            }
            FitnessSpec::Exponential { rate } => {
                if x <= 0.0 || p / x > rate / 2.0 {
                    f64::INFINITY
                } else {
                    2.0 * x.powf(p) * (-rate * x).exp()
                }
            }
            FitnessSpec::ParetoTail { beta, xmin, c } => {
                if p >= beta {
                    f64::INFINITY
                } else if x <= xmin {
                    f64::INFINITY
                } else {
                    c * beta * x.powf(p - beta) / (beta - p)
                }
            }
            FitnessSpec::LogPareto { beta, .. } => {
                if x <= self.lower_support() {
                    return f64::INFINITY;
                }
                let eps = match *self {
                    FitnessSpec::LogPareto { gamma, .. } => gamma / (E + x).ln(),
                    _ => unreachable!(),
                };
                if beta - p - eps <= 0.0 {
                    f64::INFINITY
                } else {
                    x.powf(p) * self.tail_prob(x) * (1.0 + p.max(0.0) / (beta - p - eps))
                }
            }
        }
    }

    /// `∫ f dμ` by adaptive quadrature.
    ///
    /// Heavy tails are integrated in the variable `ln x` up to a cut-off `x*`
    /// at which `envelope.coef · tail_moment_bound(power, x*)` is below
    /// `10^{-3}` of the requested tolerance, so the discarded mass is certified.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, envelope: Envelope, settings: &QuadratureSettings) -> Result<Integral> {
        self.expect_range(f, f64::NEG_INFINITY, f64::INFINITY, envelope, settings)
    }

    /// `∫_{(lo, hi]} f dμ`, with the same truncation rule as `expect` when
    /// the range is unbounded above.
    pub fn expect_range<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        envelope: Envelope,
        settings: &QuadratureSettings,
    ) -> Result<Integral> {
        let mut value = 0.0;
        if let Some((loc, mass)) = self.atom() {
            if lo < loc && loc <= hi {
                value += mass * f(loc);
            }
            if mass >= 1.0 {
                return Ok(Integral {
                    value,
                    abs_err: 0.0,
                    intervals: 0,
                });
            }
        }
        let support_hi = match *self {
            FitnessSpec::Uniform { b, .. } => b,
            _ => f64::INFINITY,
        };
        let a = lo.max(self.lower_support());
        let b = hi.min(support_hi);
        if !(a < b) {
            return Ok(Integral {
                value,
                abs_err: 0.0,
                intervals: 0,
            });
        }
        let log_scale = matches!(self, FitnessSpec::ParetoTail { .. } | FitnessSpec::LogPareto { .. });
        let integrate = |upper: f64| {
            if log_scale {
                let g = |u: f64| {
                    let x = u.exp();
                    f(x) * self.density(x) * x
                };
                numeric::integrate(g, a.ln(), upper.ln(), settings)
            } else {
                numeric::integrate(|x| f(x) * self.density(x), a, upper, settings)
            }
        };
        if b.is_finite() {
            let r = integrate(b)?;
            return Ok(Integral {
                value: value + r.value,
                ..r
            });
        }
        let start = a.max(1.0);
        let coarse_cut = self.truncation_point(envelope, 1e-6, start);
        let coarse = integrate(coarse_cut)?;
        let budget = 1e-3 * settings.abs_tol.max(settings.rel_tol * coarse.value.abs());
        let cut = self.truncation_point(envelope, budget, start);
        let r = integrate(cut)?;
        Ok(Integral {
            value: value + r.value,
            abs_err: r.abs_err + budget,
            ..r
        })
    }

    /// Smallest doubling of `start` where the envelope's tail contribution
    /// falls below `budget`.
    fn truncation_point(&self, env: Envelope, budget: f64, start: f64) -> f64 {
        let mut x = start.max(self.lower_support()).max(1.0) * 2.0;
        for _ in 0..2000 {
            if env.coef * self.tail_moment_bound(env.power.max(0.0), x) <= budget {
                return x;
            }
            x *= 2.0;
        }
        x
    }

    /// Disorder regime for out-degree `m`.
    pub fn classify_regime(&self, m: u32) -> Regime {
        let Some(beta) = self.tail_index() else {
            return Regime::Weak;
        };
        let theta = self.theta(m);
        if beta < 1.0 {
            return Regime::Extreme;
        }
        if !theta.is_finite() {
            return Regime::Unclassified;
        }
        let tol = 1e-9 * theta;
        if (beta - theta).abs() <= tol {
            Regime::StrongBoundary
        } else if beta > theta {
            Regime::Weak
        } else if beta > 1.0 {
            Regime::Strong
        } else {
            Regime::Unclassified
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replication_rng;

    fn pareto(beta: f64) -> FitnessSpec {
        FitnessSpec::ParetoTail { beta, xmin: 1.0, c: 1.0 }
    }

    #[test]
    fn deterministic_samples_constant() {
        let mut rng = replication_rng(0, 0);
        let spec = FitnessSpec::Deterministic { c: 1.0 };
        assert!((0..100).all(|_| spec.sample(&mut rng) == 1.0));
    }

    #[test]
    fn pareto_inverse_transform() {
        let x = pareto(1.5).inverse_tail(1.0 / 8.0);
        assert!((x - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tail_values() {
        assert!((pareto(1.5).tail_prob(4.0) - 0.125).abs() < 1e-15);
        let det = FitnessSpec::Deterministic { c: 1.0 };
        assert_eq!(det.tail_prob(0.5), 1.0);
        assert_eq!(det.tail_prob(1.0), 1.0);
        assert_eq!(det.tail_prob(1.5), 0.0);
    }

    #[test]
    fn quantile_values() {
        assert!((pareto(1.5).quantile_u(8) - 4.0).abs() < 1e-12);
        let det = FitnessSpec::Deterministic { c: 2.5 };
        for n in [2, 10, 1000] {
            assert_eq!(det.quantile_u(n), 2.5);
        }
        let u = FitnessSpec::Uniform { a: 0.0, b: 1.0 };
        assert!((u.quantile_u(4) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn log_pareto_quantile_matches_bisection_oracle() {
        let spec = FitnessSpec::LogPareto {
            beta: 1.5,
            xmin: 1.0,
            gamma: 1.0,
            c: 1.0,
        };
        // Independent oracle: plain bisection on the raw tail in x.
        let target = 1e-4;
        let raw = |v: f64| (E + v).ln() * v.powf(-1.5) - target;
        let (mut lo, mut hi) = (1.0f64, 1e6f64);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if raw(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let q = spec.quantile_u(10_000);
        assert!((q - lo).abs() / lo < 1e-10, "{q} vs {lo}");
    }

    #[test]
    fn theta_values() {
        assert_eq!(FitnessSpec::Deterministic { c: 1.0 }.theta(1), 2.0);
        assert!((pareto(1.5).theta(1) - 4.0).abs() < 1e-12);
        assert!(pareto(0.5).theta(1).is_infinite());
    }

    #[test]
    fn regimes() {
        assert_eq!(FitnessSpec::Uniform { a: 0.0, b: 1.0 }.classify_regime(1), Regime::Weak);
        assert_eq!(pareto(1.5).classify_regime(1), Regime::Strong);
        assert_eq!(pareto(0.5).classify_regime(1), Regime::Extreme);
        assert_eq!(pareto(1.0).classify_regime(1), Regime::Unclassified);
        assert_eq!(pareto(5.0).classify_regime(1), Regime::Weak);
        // β = 2: mean 2, θ_1 = 3 ≠ 2; for θ_m = β choose m so 1 + 2/m = 2 → m = 2.
        assert_eq!(pareto(2.0).classify_regime(2), Regime::StrongBoundary);
        assert_eq!(FitnessSpec::Exponential { rate: 1.0 }.classify_regime(3), Regime::Weak);
    }

    #[test]
    fn uniform_sample_mean() {
        let spec = FitnessSpec::Uniform { a: 0.0, b: 1.0 };
        let mut rng = replication_rng(2024, 0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| spec.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "{mean}");
    }

    #[test]
    fn empirical_mean_within_five_standard_errors() {
        // β = 3: variance finite.
        let spec = FitnessSpec::ParetoTail { beta: 3.0, xmin: 1.0, c: 1.0 };
        let mut rng = replication_rng(99, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| spec.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - (spec.theta(1) - 1.0)).abs() < 5.0 * se);
    }

    #[test]
    fn pareto_tail_regression_recovers_beta() {
        let spec = pareto(1.5);
        let mut rng = replication_rng(5, 0);
        let n = 1_000_000usize;
        let mut xs: Vec<f64> = (0..n).map(|_| spec.sample(&mut rng)).collect();
        xs.sort_by(|a, b| b.total_cmp(a));
        // Least squares of ln(rank/n) on ln(x) over the body [1e-4, 1e-1] of the tail.
        let pts: Vec<(f64, f64)> = (100..100_000)
            .step_by(97)
            .map(|r| (xs[r].ln(), ((r + 1) as f64 / n as f64).ln()))
            .collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = -sxy / sxx;
        assert!((slope - 1.5).abs() < 0.05, "{slope}");
    }

    #[test]
    fn expectations_against_closed_forms() {
        let s = QuadratureSettings::default();
        let spec = pareto(3.0);
        let r = spec.expect(|x| x, Envelope { coef: 1.0, power: 1.0 }, &s).unwrap();
        assert!((r.value - 1.5).abs() < 1e-9, "{}", r.value);
        let ex = FitnessSpec::Exponential { rate: 2.0 };
        let r = ex.expect(|x| x * x, Envelope { coef: 1.0, power: 2.0 }, &s).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9);
        // Pareto with an atom: xmin = 2, c = 1 → atom mass 1 − 2^{-2}.
        let atom = FitnessSpec::ParetoTail { beta: 2.0, xmin: 2.0, c: 1.0 };
        let r = atom.expect(|x| x, Envelope { coef: 1.0, power: 1.0 }, &s).unwrap();
        assert!((r.value - atom.mean()).abs() < 1e-9);
    }

    #[test]
    fn log_pareto_mean_by_tail_integral() {
        let spec = FitnessSpec::LogPareto {
            beta: 2.5,
            xmin: 1.0,
            gamma: 1.0,
            c: 1.0,
        };
        // E[F] = lower + ∫_lower^∞ P(F ≥ x) dx, evaluated in t = 1/x on (0, 1/lower].
        let lo = spec.lower_support();
        let tail_int = numeric::integrate(
            |t: f64| spec.tail_prob(1.0 / t) / (t * t),
            0.0,
            1.0 / lo,
            &QuadratureSettings::default(),
        )
        .unwrap();
        let oracle = lo + tail_int.value;
        assert!((spec.mean() - oracle).abs() < 1e-7, "{} vs {}", spec.mean(), oracle);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(FitnessSpec::Uniform { a: 1.0, b: 1.0 }.validate().is_err());
        assert!(FitnessSpec::Deterministic { c: 0.0 }.validate().is_err());
        assert!(FitnessSpec::ParetoTail { beta: 1.5, xmin: 0.5, c: 1.0 }.validate().is_err());
        assert!(FitnessSpec::Exponential { rate: -1.0 }.validate().is_err());
        assert!(pareto(1.5).validate().is_ok());
    }

    #[test]
    fn serde_shape() {
        let s = serde_json::to_string(&pareto(1.5)).unwrap();
        assert_eq!(s, r#"{"kind":"ParetoTail","beta":1.5,"xmin":1.0,"c":1.0}"#);
        let back: FitnessSpec = serde_json::from_str(r#"{"kind":"LogPareto","beta":1.5,"xmin":1,"gamma":1}"#).unwrap();
        assert!(matches!(back, FitnessSpec::LogPareto { c, .. } if c == 1.0));
    }

    proptest::proptest! {
        #[test]
        fn quantile_is_monotone_inverse(n in 2u64..1_000_000, which in 0usize..4) {
            let spec = [
                pareto(1.5),
                FitnessSpec::Uniform { a: 0.5, b: 2.0 },
                FitnessSpec::Exponential { rate: 0.7 },
                FitnessSpec::LogPareto { beta: 0.8, xmin: 1.0, gamma: 0.5, c: 1.0 },
            ][which].clone();
            let q = spec.quantile_u(n);
            let inv = 1.0 / n as f64;
            proptest::prop_assert!(spec.tail_prob(q * (1.0 + 1e-9)) <= inv * (1.0 + 1e-9));
            proptest::prop_assert!(spec.tail_prob(q * (1.0 - 1e-9)) > inv * (1.0 - 1e-9));
        }
    }
}

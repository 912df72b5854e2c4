//! The Poisson point process Π on `(0,1) × (0,∞)` with intensity
//! `dt × (α−1) x^{−α} dx`, truncated to fitness above `δ`, and the functionals
//! that describe the limits of the maximum degree and its location.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, ln_beta, QuadratureSettings};
use crate::rng::{open_unit, replication_rng};

/// A realization of Π restricted to `f > delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub alpha: f64,
    pub delta: f64,
    /// `(t, f)` pairs in increasing `t`.
    pub points: Vec<(f64, f64)>,
    /// Expected fitness mass per unit time carried by the discarded points,
    /// `(α−1) δ^{2−α}/(2−α)` for `α < 2` and 0 otherwise.
    pub small_mass_per_unit_time: f64,
}

fn check_alpha_delta(alpha: f64, delta: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must exceed 1, got {alpha}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

fn small_mass(alpha: f64, delta: f64) -> f64 {
    if alpha < 2.0 {
        (alpha - 1.0) * delta.powf(2.0 - alpha) / (2.0 - alpha)
    } else {
        0.0
    }
}

fn open_interval_time<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let t = rng.random::<f64>();
        if t > 0.0 {
            return t;
        }
    }
}

// Points with fitness in (lo, hi]: count ~ Poisson(lo^{−β} − hi^{−β}), fitness
// by inverting the tail measure x^{−β}.
fn add_band<R: Rng + ?Sized>(points: &mut Vec<(f64, f64)>, alpha: f64, lo: f64, hi: f64, rng: &mut R) {
    let beta = alpha - 1.0;
    let top = if hi.is_finite() { hi.powf(-beta) } else { 0.0 };
    let mean = lo.powf(-beta) - top;
    if !(mean > 0.0) {
        return;
    }
    let count = Poisson::new(mean).expect("positive finite mean").sample(rng) as usize;
    points.reserve(count);
    for _ in 0..count {
        let t = open_interval_time(rng);
        let f = loop {
            let f = if hi.is_finite() {
                // Tail level uniform on [hi^{−β}, lo^{−β}).
                (top + (1.0 - open_unit(rng)) * mean).powf(-1.0 / beta)
            } else {
                lo * open_unit(rng).powf(-1.0 / beta)
            };
            if f > lo && f <= hi && f.is_finite() {
                break f;
            }
        };
        points.push((t, f));
    }
}

/// Draw Π restricted to `(0,1) × (δ, ∞)`.
pub fn sample_ppp<R: Rng + ?Sized>(alpha: f64, delta: f64, rng: &mut R) -> Result<PointSample> {
    check_alpha_delta(alpha, delta)?;
    let mut points = Vec::new();
    add_band(&mut points, alpha, delta, f64::INFINITY, rng);
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PointSample {
        alpha,
        delta,
        points,
        small_mass_per_unit_time: small_mass(alpha, delta),
    })
}

impl PointSample {
    /// Expected number of points, `δ^{−(α−1)}`.
    pub fn expected_count(&self) -> f64 {
        self.delta.powf(1.0 - self.alpha)
    }

    /// Lower the truncation to `new_delta`, adding the points in `(new_delta, δ]`.
    /// The points already present are kept, so the two samples are coupled.
    pub fn refine<R: Rng + ?Sized>(&self, new_delta: f64, rng: &mut R) -> Result<PointSample> {
        check_alpha_delta(self.alpha, new_delta)?;
        if new_delta > self.delta {
            return Err(Error::InvalidArgument(format!(
                "refinement needs new_delta ≤ {}, got {new_delta}",
                self.delta
            )));
        }
        let mut points = self.points.clone();
        add_band(&mut points, self.alpha, new_delta, self.delta, rng);
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(PointSample {
            alpha: self.alpha,
            delta: new_delta,
            points,
            small_mass_per_unit_time: small_mass(self.alpha, new_delta),
        })
    }

    fn compensation(&self, compensate: bool) -> f64 {
        if compensate {
            self.small_mass_per_unit_time
        } else {
            0.0
        }
    }
}

// ∫_a^b ds / (mass + c s).
fn block(mass: f64, c: f64, a: f64, b: f64) -> f64 {
    if c == 0.0 {
        (b - a) / mass
    } else {
        (c * (b - a) / (mass + c * a)).ln_1p() / c
    }
}

/// `T^ε(Π) = ∫_ε^1 (Σ_{t_j ≤ s} f_j + c s)^{−1} ds`, where `c` is the
/// compensating small mass when requested and 0 otherwise.
///
/// `None` when the integrand is infinite somewhere on `(ε, 1)`, which happens
/// without compensation if no point has `t ≤ ε`.
pub fn functional_t(sample: &PointSample, eps: f64, compensate: bool) -> Option<f64> {
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    let c = sample.compensation(compensate);
    let pts = &sample.points;
    let first_after = pts.partition_point(|p| p.0 <= eps);
    let mut mass: f64 = pts[..first_after].iter().map(|p| p.1).sum();
    if mass == 0.0 && c == 0.0 {
        return None;
    }
    let mut prev = eps;
    let mut total = 0.0;
    for &(t, f) in &pts[first_after..] {
        total += block(mass, c, prev, t);
        mass += f;
        prev = t;
    }
    Some(total + block(mass, c, prev, 1.0))
}

/// `sup f (t^{−1/θ} − 1)` over the sample, with its location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongSup {
    pub value: f64,
    pub argmax_t: f64,
    pub empty: bool,
    /// The probability that discarded points would exceed level `x` is at
    /// most `bias_coefficient · x^{−θ}`.
    pub bias_coefficient: f64,
}

impl StrongSup {
    pub fn bias_bound(&self, theta: f64, x: f64) -> f64 {
        (self.bias_coefficient * x.powf(-theta)).min(1.0)
    }
}

/// Strong-disorder functional `sup_{(t,f)∈Π} f (t^{−1/θ} − 1)`.
pub fn strong_sup(sample: &PointSample, theta: f64) -> Result<StrongSup> {
    let beta = sample.alpha - 1.0;
    if !(theta > beta) {
        return Err(Error::Regime(format!(
            "strong functional needs θ > α − 1, got θ = {theta}, α = {}",
            sample.alpha
        )));
    }
    // A discarded point beats x only if t < (f/x)^θ; integrating (α−1) f^{−α} (f/x)^θ
    // over f ≤ δ bounds the chance by the coefficient below times x^{−θ}.
    let bias_coefficient = beta * sample.delta.powf(theta - beta) / (theta - beta);
    let mut best = StrongSup {
        value: 0.0,
        argmax_t: f64::NAN,
        empty: true,
        bias_coefficient,
    };
    let inv = -1.0 / theta;
    for &(t, f) in &sample.points {
        let v = f * (t.powf(inv) - 1.0);
        if best.empty || v > best.value {
            best.value = v;
            best.argmax_t = t;
            best.empty = false;
        }
    }
    Ok(best)
}

/// Extreme-disorder functional `m sup f T^t(Π)` over points with `t ≥ eps_floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeSup {
    pub value: f64,
    pub argmax_t: f64,
    pub contributions: usize,
    pub empty: bool,
}

/// `m · max_{t_i ≥ eps_floor} f_i · T^{t_i}(Π)`. Each point counts in its own
/// denominator, so every contribution is finite.
pub fn extreme_sup(sample: &PointSample, m: u32, eps_floor: f64, compensate: bool) -> ExtremeSup {
    let c = sample.compensation(compensate);
    let pts = &sample.points;
    let n = pts.len();
    // Integral over [t_i, 1] of the reciprocal mass, built from the right.
    let mut prefix_mass = Vec::with_capacity(n);
    let mut acc = 0.0;
    for p in pts {
        acc += p.1;
        prefix_mass.push(acc);
    }
    let mut out = ExtremeSup {
        value: 0.0,
        argmax_t: f64::NAN,
        contributions: 0,
        empty: true,
    };
    let mut tail = 0.0;
    for i in (0..n).rev() {
        let (t, f) = pts[i];
        let next = if i + 1 < n { pts[i + 1].0 } else { 1.0 };
        tail += block(prefix_mass[i], c, t, next);
        if t < eps_floor {
            break;
        }
        let v = m as f64 * f * tail;
        out.contributions += 1;
        if out.empty || v > out.value {
            out.value = v;
            out.argmax_t = t;
            out.empty = false;
        }
    }
    out
}

/// Coupled evaluation of `extreme_sup` at a coarse and a refined truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementDiagnostic {
    pub coarse: ExtremeSup,
    pub fine: ExtremeSup,
    pub relative_change: f64,
}

/// Compare `(δ, ε)` with `(δ', ε')` on the same realization of Π.
pub fn extreme_refinement<R: Rng + ?Sized>(
    sample: &PointSample,
    m: u32,
    eps_floor: f64,
    fine_delta: f64,
    fine_eps_floor: f64,
    rng: &mut R,
) -> Result<RefinementDiagnostic> {
    let coarse = extreme_sup(sample, m, eps_floor, true);
    let finer = sample.refine(fine_delta, rng)?;
    let fine = extreme_sup(&finer, m, fine_eps_floor, true);
    let relative_change = (fine.value - coarse.value).abs() / fine.value.abs().max(f64::MIN_POSITIVE);
    Ok(RefinementDiagnostic {
        coarse,
        fine,
        relative_change,
    })
}

/// `g(a, b) = ∫_a^b (t^{−1/θ} − 1)^{α−1} dt`.
///
/// Integrated in `u = t^{1/θ}`, where the integrand becomes
/// `θ (1−u)^{α−1} u^{θ−α}`.
pub fn g_integral(theta: f64, alpha: f64, a: f64, b: f64) -> Result<f64> {
    if !(alpha < 1.0 + theta) {
        return Err(Error::Regime(format!("g diverges for α = {alpha} ≥ 1 + θ = {}", 1.0 + theta)));
    }
    if !(0.0 <= a && a <= b && b <= 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 ≤ a ≤ b ≤ 1, got a = {a}, b = {b}")));
    }
    if a == b {
        return Ok(0.0);
    }
    let integrand = |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            theta * (1.0 - u).powf(alpha - 1.0) * u.powf(theta - alpha)
        }
    };
    let settings = QuadratureSettings {
        rel_tol: 1e-12,
        abs_tol: 1e-15,
        max_subdivisions: 4000,
    };
    let r = numeric::integrate(integrand, a.powf(1.0 / theta), b.powf(1.0 / theta), &settings)?;
    Ok(r.value)
}

/// `g(0, 1) = θ B(θ − α + 1, α)`.
pub fn g_closed_form(theta: f64, alpha: f64) -> f64 {
    theta * ln_beta(theta - alpha + 1.0, alpha).exp()
}

/// `exp(−g x^{−(α−1)})` for `x > 0`, 0 otherwise.
pub fn frechet_cdf(g: f64, alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-g * x.powf(1.0 - alpha)).exp()
    }
}

/// Inverse of `frechet_cdf` for `p ∈ (0, 1)`.
pub fn frechet_quantile(g: f64, alpha: f64, p: f64) -> f64 {
    (g / -p.ln()).powf(1.0 / (alpha - 1.0))
}

/// `P(I ≤ t) = g(0, t)/g(0, 1)`.
pub fn law_of_i_cdf(theta: f64, alpha: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    if t >= 1.0 {
        return Ok(1.0);
    }
    Ok((g_integral(theta, alpha, 0.0, t)? / g_integral(theta, alpha, 0.0, 1.0)?).clamp(0.0, 1.0))
}

/// Evaluate `f` on `samples` independent draws of Π, drawn in parallel on the
/// current rayon pool. Draw `j` uses the stream of index `j` under `master_seed`.
pub fn ppp_batch<T, F>(alpha: f64, delta: f64, samples: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, PointSample, &mut crate::rng::SimRng) -> T + Sync,
{
    check_alpha_delta(alpha, delta)?;
    Ok((0..samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = replication_rng(master_seed, j as u64);
            let sample = sample_ppp(alpha, delta, &mut rng).expect("parameters checked");
            f(j, sample, &mut rng)
        })
        .collect())
}

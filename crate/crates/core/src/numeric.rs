//! Quadrature and special-function helpers shared by the limit-theory code.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub use statrs::function::gamma::ln_gamma;

/// `ln B(a, b)` for positive arguments.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln Γ(x + s) − ln Γ(x)`, the log of the rising factorial ratio.
///
/// Integer `s` up to 64 is evaluated as an explicit product to avoid the
/// cancellation between two large log-gamma values.
pub fn ln_gamma_ratio(x: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if s.fract() == 0.0 && s > 0.0 && s <= 64.0 {
        let mut acc = 0.0;
        for j in 0..s as usize {
            acc += (x + j as f64).ln();
        }
        return acc;
    }
    ln_gamma(x + s) - ln_gamma(x)
}

/// Settings for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-14,
            max_subdivisions: 4000,
        }
    }
}

/// Result of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
    pub intervals: usize,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_169_229_470,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One 21-point Gauss–Kronrod panel: (Kronrod estimate, |Kronrod − Gauss|).
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err.max(50.0 * f64::EPSILON * value.abs()))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// error falls below `max(abs_tol, rel_tol·|I|)`. Integrable endpoint
/// singularities are handled by repeated bisection, since the rule never
/// evaluates the endpoints themselves.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, settings: &QuadratureSettings) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_err: 0.0,
            intervals: 0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "quadrature bounds must be finite, got [{a}, {b}]"
        )));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk21(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a: lo,
        b: hi,
        value: v,
        err: e,
    });
    let mut total = v;
    let mut total_err = e;
    loop {
        let target = settings.abs_tol.max(settings.rel_tol * total.abs());
        if total_err <= target {
            break;
        }
        if heap.len() >= settings.max_subdivisions {
            return Err(Error::Quadrature {
                value: sign * total,
                achieved: total_err,
                requested: target,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point; accept it.
            heap.push(Panel {
                err: 0.0,
                ..worst
            });
            total_err -= worst.err;
            continue;
        }
        let (lv, le) = gk21(&f, worst.a, mid);
        let (rv, re) = gk21(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            err: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            err: re,
        });
    }
    // Re-sum to shed the drift of the incremental updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let abs_err: f64 = heap.iter().map(|p| p.err).sum();
    Ok(Integral {
        value: sign * value,
        abs_err,
        intervals: heap.len(),
    })
}

/// Root of a monotone function on `[lo, hi]` by bisection; `f(lo)` and
/// `f(hi)` must have opposite signs (or one of them is zero).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iterations: usize) -> f64 {
    let mut flo = f(lo);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

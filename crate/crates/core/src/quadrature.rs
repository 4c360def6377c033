//! Globally adaptive Gauss–Kronrod (10/21) quadrature over a list of panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// A value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    pub fn zero() -> Self {
        Self { value: 0.0, error: 0.0 }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

/// Stopping rules for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { rel, abs: 0.0, max_intervals: 20_000 }
    }
}

/// One application of the 21-point Kronrod rule with the embedded 10-point
/// Gauss estimate. Returns (integral, error estimate) in the QUADPACK form.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let (v, e, _) = gk21_abs(f, a, b);
    (v, e)
}

// Also returns ∫|f|, which sets the rounding floor of a sum of pieces.
fn gk21_abs<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = kronrod * half;
    let resasc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let resabs: f64 = {
        let mut s = WGK[10] * fc.abs();
        for j in 0..10 {
            s += WGK[j] * (fv1[j].abs() + fv2[j].abs());
        }
        s * half.abs()
    };
    let floor = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && err < floor {
        err = floor;
    }
    (result, err, resabs)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from one panel
/// per consecutive pair of breakpoints and bisecting the panel with the
/// largest error until the total error meets the tolerance.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: Tolerance) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Ok(Estimate::zero());
    }
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 2);
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut total_abs = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (value, error, resabs) = gk21_abs(&mut f, a, b);
        total += value;
        total_err += error;
        total_abs += resabs;
        heap.push(Piece { a, b, value, error, resabs });
    }
    if !total.is_finite() {
        return Err(Error::NonConvergence { estimate: total, bound: f64::INFINITY });
    }
    // Pieces too narrow to split further are retired here.
    let mut retired_value = 0.0;
    let mut retired_err = 0.0;
    let mut count = heap.len();
    loop {
        // Cancellation can leave |total| far below ∫|f|; rounding then
        // limits what any subdivision can reach.
        let target = tol.abs.max(tol.rel * total.abs()).max(100.0 * f64::EPSILON * total_abs);
        if total_err <= target {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) <= 1e-15 * worst.a.abs().max(worst.b.abs()) {
            retired_value += worst.value;
            retired_err += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        if count >= tol.max_intervals {
            heap.push(worst);
            return Err(Error::NonConvergence { estimate: total, bound: total_err });
        }
        let (v1, e1, r1) = gk21_abs(&mut f, worst.a, mid);
        let (v2, e2, r2) = gk21_abs(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        total_abs += r1 + r2 - worst.resabs;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1, resabs: r1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2, resabs: r2 });
        count += 1;
        if !total.is_finite() {
            return Err(Error::NonConvergence { estimate: total, bound: f64::INFINITY });
        }
    }
    // Recompute the sums to shed accumulated rounding from the updates.
    let value: f64 = heap.iter().map(|p| p.value).sum::<f64>() + retired_value;
    let error: f64 = heap.iter().map(|p| p.error).sum::<f64>() + retired_err;
    Ok(Estimate::new(value, error.max(0.0)))
}

/// Geometric breakpoints from `lo` to `hi` (both included) with at most
/// `ratio` between neighbours.
pub fn geometric_breaks(lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
    if !(hi > lo) || lo <= 0.0 {
        return vec![lo, hi];
    }
    let n = ((hi / lo).ln() / ratio.ln()).ceil().max(1.0) as usize;
    let step = (hi / lo).ln() / n as f64;
    let mut out: Vec<f64> = (0..n).map(|i| lo * (step * i as f64).exp()).collect();
    out.push(hi);
    out
}

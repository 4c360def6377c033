//! Coherence curves, T₂ extraction and the large-N CPMG closed form.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::filters::{GeometryConfig, PulseSequence};
use crate::structure_factors::SampleModel;

/// Probe qubit parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub kappa: f64,
    /// Depolarisation time; infinite when absent.
    #[serde(default = "infinite")]
    pub t1: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

impl Default for QubitParams {
    fn default() -> Self {
        Self { kappa: 1.0, t1: f64::INFINITY }
    }
}

impl QubitParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("kappa", self.kappa)?;
        if !(self.t1 > 0.0) {
            return Err(Error::Domain(format!("T1 must be positive, got {}", self.t1)));
        }
        Ok(())
    }
}

/// e^{−2⟨φ²⟩} e^{−τ/T₁}.
pub fn coherence(tau: f64, qubit: &QubitParams, phi_sq: f64) -> Result<f64> {
    qubit.validate()?;
    if !(phi_sq >= 0.0) {
        return Err(Error::Domain(format!("phase variance must be nonnegative, got {phi_sq}")));
    }
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("tau must be nonnegative, got {tau}")));
    }
    let relax = if qubit.t1.is_infinite() { 1.0 } else { (-tau / qubit.t1).exp() };
    Ok((-2.0 * phi_sq).exp() * relax)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub tau: f64,
    pub phi_sq: f64,
    pub error: f64,
}

/// Sampled ⟨φ²⟩(τ) with the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceCurve {
    pub points: Vec<CurvePoint>,
    pub sequence: PulseSequence,
    pub model: SampleModel,
    pub geometry: GeometryConfig,
    pub tol_q: f64,
    pub tol_omega: f64,
    pub endpoint_substitution: bool,
}

impl DecoherenceCurve {
    /// A curve from bare samples, for data that did not come from the engine.
    pub fn from_samples(points: Vec<(f64, f64)>, sequence: PulseSequence, model: SampleModel, geometry: GeometryConfig) -> Self {
        Self {
            points: points.into_iter().map(|(tau, phi_sq)| CurvePoint { tau, phi_sq, error: 0.0 }).collect(),
            sequence,
            model,
            geometry,
            tol_q: 0.0,
            tol_omega: 0.0,
            endpoint_substitution: false,
        }
    }

    /// ⟨φ²⟩ between samples, interpolated as a local power law.
    pub fn interpolate(&self, tau: f64) -> Option<f64> {
        let p = &self.points;
        let i = p.windows(2).position(|w| w[0].tau <= tau && tau <= w[1].tau)?;
        Some(power_interp(p[i], p[i + 1], tau))
    }
}

fn power_interp(a: CurvePoint, b: CurvePoint, tau: f64) -> f64 {
    if a.phi_sq > 0.0 && b.phi_sq > 0.0 && a.tau > 0.0 {
        let s = (b.phi_sq / a.phi_sq).ln() / (b.tau / a.tau).ln();
        a.phi_sq * (tau / a.tau).powf(s)
    } else {
        a.phi_sq + (b.phi_sq - a.phi_sq) * (tau - a.tau) / (b.tau - a.tau)
    }
}

/// T₂ read off a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct T2Estimate {
    /// Root of 2⟨φ²(τ)⟩ = 1.
    pub t2: f64,
    /// Root of 2⟨φ²(τ)⟩ + τ/T₁ = 1, when it falls inside the sampled range.
    pub t2_with_t1: Option<f64>,
}

/// Time at which 2⟨φ²⟩ first reaches 1, by bisection on the power-law
/// interpolant of the samples.
pub fn t2_extract(curve: &DecoherenceCurve, qubit: &QubitParams) -> Result<T2Estimate> {
    qubit.validate()?;
    let p = &curve.points;
    if p.len() < 2 {
        return Err(Error::Range("need at least two samples".into()));
    }
    let t2 = root_on_samples(p, |pt| 2.0 * pt.phi_sq, |a, b, t| 2.0 * power_interp(a, b, t))?;
    let t2_with_t1 = if qubit.t1.is_infinite() {
        Some(t2)
    } else {
        let t1 = qubit.t1;
        root_on_samples(p, |pt| 2.0 * pt.phi_sq + pt.tau / t1, |a, b, t| 2.0 * power_interp(a, b, t) + t / t1).ok()
    };
    Ok(T2Estimate { t2, t2_with_t1 })
}

fn root_on_samples(
    p: &[CurvePoint],
    at: impl Fn(&CurvePoint) -> f64,
    between: impl Fn(CurvePoint, CurvePoint, f64) -> f64,
) -> Result<f64> {
    if at(&p[0]) >= 1.0 {
        return Err(Error::Range(format!(
            "curve starts above the crossing: value {} at tau {}",
            at(&p[0]),
            p[0].tau
        )));
    }
    let Some(i) = p.windows(2).position(|w| at(&w[0]) < 1.0 && at(&w[1]) >= 1.0) else {
        let last = p[p.len() - 1];
        return Err(Error::Range(format!(
            "no crossing in range: values {} at tau {} to {} at tau {}",
            at(&p[0]),
            p[0].tau,
            at(&last),
            last.tau
        )));
    };
    let (a, b) = (p[i], p[i + 1]);
    let (mut lo, mut hi) = (a.tau, b.tau);
    for _ in 0..200 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if between(a, b, mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Refines the root of 2⟨φ²(τ)⟩ = 1 on a continuous evaluator bracketed by
/// [lo, hi], using bisection in ln τ with regula-falsi steps in ln ⟨φ²⟩.
pub fn t2_refine(mut phi_sq: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    ensure_positive("lo", lo)?;
    ensure_positive("hi", hi)?;
    let h = |v: f64| (2.0 * v).ln();
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let (mut fa, mut fb) = (h(phi_sq(lo)?), h(phi_sq(hi)?));
    if !(fa < 0.0 && fb >= 0.0) {
        return Err(Error::Range(format!("2⟨φ²⟩ = 1 is not bracketed: {} .. {}", fa.exp(), fb.exp())));
    }
    let mut side = 0i32;
    for _ in 0..200 {
        if (b - a) <= rel_tol {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = h(phi_sq(x.exp())?);
        if fx < 0.0 {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if fx.abs() < 1e-15 {
            return Ok(x.exp());
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Large-N CPMG phase variance for Lorentzian noise,
/// `amplitude · πτ/(16ω₀) · [1 − tanh(x)/x]` with x = πω₀/(2ω_p).
///
/// It equals the comb sum `(8κ²τ/π²) Σ N(ω_n)/(2n+1)²` for
/// N(ω) = A ω₀/(ω₀² + ω²) when amplitude = 16κ²A/π.
pub fn cpmg_closed_form(tau: f64, omega0: f64, omega_p: f64, amplitude: f64) -> Result<f64> {
    ensure_positive("tau", tau)?;
    ensure_positive("omega0", omega0)?;
    ensure_positive("omega_p", omega_p)?;
    ensure_finite("amplitude", amplitude)?;
    let x = std::f64::consts::PI * omega0 / (2.0 * omega_p);
    let bracket = if x < 1e-3 {
        let x2 = x * x;
        x2 / 3.0 - 2.0 * x2 * x2 / 15.0
    } else {
        1.0 - x.tanh() / x
    };
    Ok(amplitude * std::f64::consts::PI * tau / (16.0 * omega0) * bracket)
}

/// Amplitude for [`cpmg_closed_form`] that reproduces N(ω) = A ω₀/(ω₀² + ω²).
pub fn lorentzian_cpmg_amplitude(kappa: f64, a: f64) -> f64 {
    16.0 * kappa * kappa * a / std::f64::consts::PI
}

//! Frequency filters of pulse sequences and the geometric momentum filter.
//!
//! A pulse sequence flips the sign of the qubit-field coupling at each ideal
//! π pulse. Its frequency filter is `W(ω) = κ² |∫₀^τ f(t) e^{-iωt} dt|²`,
//! normalised so that `∫ W dω/2π = κ² τ` for every sequence.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

const SERIES_CUTOFF: f64 = 1e-4;

/// Timing pattern of the π pulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    Ramsey,
    Cpmg { pulses: u32 },
    Custom { switch_times: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    #[serde(flatten)]
    pub kind: SequenceKind,
    pub total_time: f64,
    #[serde(default = "unit")]
    pub kappa: f64,
}

fn unit() -> f64 {
    1.0
}

impl PulseSequence {
    pub fn ramsey(total_time: f64) -> Self {
        Self { kind: SequenceKind::Ramsey, total_time, kappa: 1.0 }
    }

    pub fn hahn(total_time: f64) -> Self {
        Self::cpmg(1, total_time)
    }

    pub fn cpmg(pulses: u32, total_time: f64) -> Self {
        Self { kind: SequenceKind::Cpmg { pulses }, total_time, kappa: 1.0 }
    }

    pub fn custom(switch_times: Vec<f64>, total_time: f64) -> Self {
        Self { kind: SequenceKind::Custom { switch_times }, total_time, kappa: 1.0 }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// The same pattern stretched to a new total time. Custom switch times
    /// scale in proportion.
    pub fn with_total_time(&self, total_time: f64) -> Self {
        let kind = match &self.kind {
            SequenceKind::Custom { switch_times } => {
                let s = total_time / self.total_time;
                SequenceKind::Custom { switch_times: switch_times.iter().map(|t| t * s).collect() }
            }
            k => k.clone(),
        };
        Self { kind, total_time, kappa: self.kappa }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("total time", self.total_time)?;
        ensure_finite("kappa", self.kappa)?;
        match &self.kind {
            SequenceKind::Ramsey => Ok(()),
            SequenceKind::Cpmg { pulses: 0 } => {
                Err(Error::Domain("CPMG needs at least one pulse; use Ramsey for free precession".into()))
            }
            SequenceKind::Cpmg { .. } => Ok(()),
            SequenceKind::Custom { switch_times } => {
                let mut prev = 0.0;
                for &t in switch_times {
                    if !(t.is_finite() && t > prev && t < self.total_time) {
                        return Err(Error::Validation(format!(
                            "switch times must increase strictly inside (0, {}); offending value {t}",
                            self.total_time
                        )));
                    }
                    prev = t;
                }
                Ok(())
            }
        }
    }

    /// Number of π pulses.
    pub fn pulse_count(&self) -> usize {
        match &self.kind {
            SequenceKind::Ramsey => 0,
            SequenceKind::Cpmg { pulses } => *pulses as usize,
            SequenceKind::Custom { switch_times } => switch_times.len(),
        }
    }

    /// Times at which the coupling changes sign. CPMG-N places them at
    /// τ(n − 1/2)/N.
    pub fn switch_times(&self) -> Vec<f64> {
        match &self.kind {
            SequenceKind::Ramsey => Vec::new(),
            SequenceKind::Cpmg { pulses } => {
                let n = *pulses as f64;
                (1..=*pulses).map(|k| self.total_time * (k as f64 - 0.5) / n).collect()
            }
            SequenceKind::Custom { switch_times } => switch_times.clone(),
        }
    }

    /// Sign function f(t) on [0, τ]; +1 before the first pulse.
    pub fn sign_at(&self, t: f64) -> f64 {
        let flips = self.switch_times().iter().filter(|&&s| s <= t).count();
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Segment edges 0 = t₀ < t₁ < ... < t_{m+1} = τ.
    pub fn segment_edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.pulse_count() + 2);
        e.push(0.0);
        e.extend(self.switch_times());
        e.push(self.total_time);
        e
    }

    /// Jump amplitudes of f(t) at the segment edges: the filter equals
    /// `κ²|Σ b_j e^{-iωt_j}|²/ω²` with these (t_j, b_j).
    pub fn boundary_terms(&self) -> Vec<(f64, f64)> {
        let edges = self.segment_edges();
        let m = edges.len() - 2;
        let mut out = Vec::with_capacity(edges.len());
        out.push((0.0, 1.0));
        let mut s = 1.0;
        for &t in &edges[1..=m] {
            out.push((t, -2.0 * s));
            s = -s;
        }
        out.push((self.total_time, -s));
        out
    }

    /// W_τ(ω) for any kind, after validation.
    pub fn filter(&self, omega: f64) -> Result<f64> {
        ensure_finite("omega", omega)?;
        self.validate()?;
        Ok(self.filter_unchecked(omega))
    }

    pub(crate) fn filter_unchecked(&self, omega: f64) -> f64 {
        let omega = omega.abs();
        match &self.kind {
            SequenceKind::Ramsey => ramsey_value(omega, self.total_time, self.kappa),
            SequenceKind::Cpmg { pulses } => cpmg_value(omega, self.total_time, *pulses, self.kappa),
            SequenceKind::Custom { switch_times } => custom_value(omega, self.total_time, switch_times, self.kappa),
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn ramsey_value(omega: f64, tau: f64, kappa: f64) -> f64 {
    let s = sinc(0.5 * omega * tau);
    kappa * kappa * tau * tau * s * s
}

fn cpmg_value(omega: f64, tau: f64, pulses: u32, kappa: f64) -> f64 {
    let n = pulses as f64;
    let u = omega * tau / (4.0 * n);
    let theta = 2.0 * u;
    // Both parity branches, cos²(Nθ)/cos²θ for odd N and sin²(Nθ)/cos²θ for
    // even N, equal sin²(Nε)/sin²ε with ε the offset of θ from the nearest
    // zero of cos θ. This form has no 0/0 at the zeros.
    let k = ((theta - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).round();
    let eps = theta - (std::f64::consts::FRAC_PI_2 + k * std::f64::consts::PI);
    let ratio = if (n * eps).abs() < SERIES_CUTOFF {
        n * (1.0 - (n * n - 1.0) * eps * eps / 6.0)
    } else {
        (n * eps).sin() / eps.sin()
    };
    let su = sinc(u);
    let sin_u = u.sin();
    kappa * kappa * (tau / n).powi(2) * su * su * sin_u * sin_u * ratio * ratio
}

fn custom_value(omega: f64, tau: f64, switch_times: &[f64], kappa: f64) -> f64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut start = 0.0;
    let mut sign = 1.0;
    for &end in switch_times.iter().chain(std::iter::once(&tau)) {
        let h = end - start;
        let c = 0.5 * (start + end);
        let amp = sign * h * sinc(0.5 * omega * h);
        sum += Complex64::from_polar(amp, -omega * c);
        start = end;
        sign = -sign;
    }
    kappa * kappa * sum.norm_sqr()
}

/// Ramsey (free precession) filter `κ² 4 sin²(ωτ/2)/ω²`, equal to κ²τ² at ω = 0.
pub fn ramsey_filter(omega: f64, seq: &PulseSequence) -> Result<f64> {
    ensure_finite("omega", omega)?;
    seq.validate()?;
    match seq.kind {
        SequenceKind::Ramsey => Ok(ramsey_value(omega, seq.total_time, seq.kappa)),
        _ => Err(Error::Usage("ramsey_filter needs a Ramsey sequence".into())),
    }
}

/// CPMG-N filter `κ² 16 sin⁴(ωτ/4N)/ω² · cos²(ωτ/2)/cos²(ωτ/2N)` for odd N,
/// with sin²(ωτ/2) in place of cos²(ωτ/2) for even N.
pub fn cpmg_filter(omega: f64, seq: &PulseSequence) -> Result<f64> {
    ensure_finite("omega", omega)?;
    seq.validate()?;
    match seq.kind {
        SequenceKind::Cpmg { pulses } => Ok(cpmg_value(omega, seq.total_time, pulses, seq.kappa)),
        _ => Err(Error::Usage("cpmg_filter needs a CPMG sequence".into())),
    }
}

/// Filter of an arbitrary sign-flip sequence, summed segment by segment in
/// closed form.
pub fn custom_filter(omega: f64, seq: &PulseSequence) -> Result<f64> {
    ensure_finite("omega", omega)?;
    seq.validate()?;
    match &seq.kind {
        SequenceKind::Custom { switch_times } => Ok(custom_value(omega, seq.total_time, switch_times, seq.kappa)),
        _ => Err(Error::Usage("custom_filter needs a custom sequence".into())),
    }
}

/// Large-N comb replacing the CPMG filter.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaComb {
    /// (ω_n, weight) with ω_n = (2n+1)ω_p. Weights act on ∫₀^∞ dω.
    pub lines: Vec<(f64, f64)>,
    /// Weight carried by the harmonics beyond the last line.
    pub truncation_bound: f64,
}

/// Harmonic lines of CPMG-N at odd multiples of ω_p = πN/τ with weights
/// `4κ²τ(2/π)/(2n+1)²`, which together carry the full filter weight πκ²τ.
pub fn cpmg_delta_comb(seq: &PulseSequence, n_max: usize) -> Result<DeltaComb> {
    seq.validate()?;
    let pulses = match seq.kind {
        SequenceKind::Cpmg { pulses } => pulses,
        _ => return Err(Error::Usage("cpmg_delta_comb needs a CPMG sequence".into())),
    };
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let tau = seq.total_time;
    let omega_p = std::f64::consts::PI * pulses as f64 / tau;
    let w0 = 4.0 * seq.kappa * seq.kappa * tau * 2.0 / std::f64::consts::PI;
    let mut partial = 0.0;
    let lines = (0..n_max)
        .map(|n| {
            let m = (2 * n + 1) as f64;
            partial += 1.0 / (m * m);
            (m * omega_p, w0 / (m * m))
        })
        .collect();
    let rest = (std::f64::consts::PI.powi(2) / 8.0 - partial).max(0.0);
    Ok(DeltaComb { lines, truncation_bound: w0 * rest })
}

/// Probe placement relative to the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    /// Probe-sample distance.
    pub d: f64,
    /// Lattice constant.
    #[serde(default = "unit")]
    pub a: f64,
    /// Extra depth of each layer below the top one.
    #[serde(default = "top_layer")]
    pub layer_offsets: Vec<f64>,
    /// Magnetic moment per site, μ₀ μ_B g_s S in the chosen units.
    #[serde(default = "unit")]
    pub moment: f64,
}

fn top_layer() -> Vec<f64> {
    vec![0.0]
}

impl GeometryConfig {
    pub fn new(d: f64) -> Self {
        Self { d, a: 1.0, layer_offsets: vec![0.0], moment: 1.0 }
    }

    pub fn with_layers(mut self, offsets: Vec<f64>) -> Self {
        self.layer_offsets = offsets;
        self
    }

    /// (μ₀ μ_B g_s S)/(2a²).
    pub fn field_prefactor(&self) -> f64 {
        self.moment / (2.0 * self.a * self.a)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("d", self.d)?;
        ensure_positive("a", self.a)?;
        ensure_finite("moment", self.moment)?;
        if self.layer_offsets.is_empty() {
            return Err(Error::Validation("at least one layer is required".into()));
        }
        for &o in &self.layer_offsets {
            if !(o.is_finite() && o >= 0.0) {
                return Err(Error::Validation(format!("layer offsets must be nonnegative, got {o}")));
            }
        }
        Ok(())
    }

    /// Distance from the probe to each layer.
    pub fn layer_distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.layer_offsets.iter().map(move |o| self.d + o)
    }
}

/// W_d(q) = field_prefactor² q³ Σ_ℓ e^{-2q d_ℓ}.
pub fn momentum_filter(q: f64, geom: &GeometryConfig) -> Result<f64> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(Error::Domain(format!("q must be nonnegative, got {q}")));
    }
    geom.validate()?;
    Ok(momentum_filter_unchecked(q, geom))
}

pub(crate) fn momentum_filter_unchecked(q: f64, geom: &GeometryConfig) -> f64 {
    let p = geom.field_prefactor();
    let s: f64 = geom.layer_distances().map(|d| (-2.0 * q * d).exp()).sum();
    p * p * q * q * q * s
}

/// Field at the probe per unit in-plane magnetisation mode, H_αβ(q), with
/// rows and columns ordered (x, y, z).
pub fn dipolar_kernel(q_vec: [f64; 2], geom: &GeometryConfig) -> Result<[[Complex64; 3]; 3]> {
    ensure_finite("qx", q_vec[0])?;
    ensure_finite("qy", q_vec[1])?;
    geom.validate()?;
    let zero = Complex64::new(0.0, 0.0);
    let (qx, qy) = (q_vec[0], q_vec[1]);
    let q = qx.hypot(qy);
    if q == 0.0 {
        return Ok([[zero; 3]; 3]);
    }
    let pre = (-q * geom.d).exp() / (2.0 * geom.a * geom.a);
    let r = |x: f64| Complex64::new(pre * x, 0.0);
    let i = |x: f64| Complex64::new(0.0, pre * x);
    Ok([
        [r(qx * qx / q), r(qx * qy / q), i(qx)],
        [r(qx * qy / q), r(qy * qy / q), i(qy)],
        [i(qx), i(qy), r(-q)],
    ])
}

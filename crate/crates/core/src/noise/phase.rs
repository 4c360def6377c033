//! ⟨φ²⟩ = ∫ dω/2π W_τ(ω) N(ω) for a pulse sequence and a spectral density.

use crate::error::Result;
use crate::filters::PulseSequence;
use crate::quadrature::{geometric_breaks, integrate, Estimate, Tolerance};

use super::spectrum::SpectralDensity;

/// Phase variance with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseVariance {
    pub value: f64,
    pub error: f64,
    /// Whether the ω = u² substitution was used on the innermost panel
    /// because N(ω) diverges at zero frequency.
    pub endpoint_substitution: bool,
}

/// Frequency layout used for a sequence: the innermost panel ends at
/// `inner`, lobe panels of width π/τ run up to `cutoff`, and the tail
/// beyond `cutoff` is treated in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelLayout {
    pub inner: f64,
    pub cutoff: f64,
    pub lobes: usize,
}

/// Shortest time between consecutive sign changes (or the ends).
fn shortest_segment(seq: &PulseSequence) -> f64 {
    seq.segment_edges().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

pub fn panel_layout(seq: &PulseSequence, rate_hint: f64) -> PanelLayout {
    let tau = seq.total_time;
    let p = std::f64::consts::PI / tau;
    let lobes = ((16.0 * tau / shortest_segment(seq)).ceil() as usize).max(64);
    let inner = 1e-12 * p.min(rate_hint);
    PanelLayout { inner, cutoff: lobes as f64 * p, lobes }
}

/// Integrates the filter of `seq` against `density`.
///
/// Below π/τ the frequency axis is split geometrically down to 10⁻¹²·π/τ
/// (or 10⁻¹² of the density's characteristic rate if that is smaller).
/// Above it the panels are the lobes of width π/τ whose edges contain every
/// zero of the standard filters. Past the cutoff the filter is written as
/// `κ²[C₀ + Σ c_jl cos(ωΔ_jl)]/ω²`: the constant part is integrated
/// numerically and each cosine by its asymptotic expansion.
pub fn phase_variance<D: SpectralDensity + ?Sized>(density: &D, seq: &PulseSequence, tol: f64) -> Result<PhaseVariance> {
    seq.validate()?;
    if density.is_zero() {
        return Ok(PhaseVariance { value: 0.0, error: 0.0, endpoint_substitution: false });
    }
    let tau = seq.total_time;
    let p = std::f64::consts::PI / tau;
    let layout = panel_layout(seq, density.rate_hint());
    let share = Tolerance { rel: 0.25 * tol, abs: 0.0, max_intervals: 200_000 };
    let integrand = |w: f64| seq.filter_unchecked(w) * density.eval(w) / std::f64::consts::PI;

    // Innermost panel.
    let substitute = density.low_frequency_exponent() < -0.05;
    let head = if substitute {
        let r = layout.inner.sqrt();
        integrate(|u: f64| 2.0 * u * integrand(u * u), &[0.0, r], share)?
    } else {
        integrate(integrand, &[0.0, layout.inner], share)?
    };

    let mut breaks = geometric_breaks(layout.inner, p, 10.0);
    breaks.pop();
    breaks.extend((1..=layout.lobes).map(|k| k as f64 * p));
    let body = integrate(integrand, &breaks, share)?;

    let tail = tail(density, seq, layout.cutoff, share)?;
    let total = head + body + tail;
    let value = total.value;
    let error = total.error + density.relative_accuracy() * value.abs();
    Ok(PhaseVariance { value, error, endpoint_substitution: substitute })
}

fn tail<D: SpectralDensity + ?Sized>(density: &D, seq: &PulseSequence, cutoff: f64, tol: Tolerance) -> Result<Estimate> {
    let k2 = seq.kappa * seq.kappa;
    let pi = std::f64::consts::PI;
    let terms = seq.boundary_terms();
    let c0: f64 = terms.iter().map(|t| t.1 * t.1).sum();

    // ∫_Ω^∞ N/ω² dω = (1/Ω) ∫₀¹ N(Ω/s) ds
    let mut sb: Vec<f64> = (0..=12).rev().map(|k| 10f64.powi(-k)).collect();
    sb.insert(0, 0.0);
    let smooth = integrate(
        |s: f64| if s == 0.0 { 0.0 } else { density.eval(cutoff / s) },
        &sb,
        tol,
    )?;
    let smooth_part = Estimate::new(smooth.value / cutoff, smooth.error / cutoff);

    // Local power law of N at the cutoff drives the cosine expansions.
    let n_c = density.eval(cutoff);
    let slope = {
        let h = 0.01;
        let up = density.eval(cutoff * (1.0 + h));
        let dn = density.eval(cutoff / (1.0 + h));
        if up > 0.0 && dn > 0.0 {
            (up / dn).ln() / (2.0 * (1.0 + h).ln())
        } else {
            0.0
        }
    };
    // Derivatives of g = N/ω² at the cutoff.
    const ORDERS: usize = 8;
    let mut g = [0.0; ORDERS];
    g[0] = n_c / (cutoff * cutoff);
    for n in 1..ORDERS {
        g[n] = g[n - 1] * (slope - 2.0 - (n - 1) as f64) / cutoff;
    }
    let mut osc = 0.0;
    let mut osc_err = 0.0;
    for j in 0..terms.len() {
        for l in (j + 1)..terms.len() {
            let lag = terms[l].0 - terms[j].0;
            let c = 2.0 * terms[j].1 * terms[l].1;
            let (v, e) = cosine_tail(&g, cutoff, lag);
            osc += c * v;
            osc_err += (c * e).abs();
        }
    }
    let value = k2 / pi * (c0 * smooth_part.value + osc);
    let error = k2 / pi * (c0 * smooth_part.error + osc_err);
    Ok(Estimate::new(value, error))
}

// ∫_Ω^∞ g(ω) cos(ωΔ) dω from the derivatives of g at Ω:
// I = −Σ_k (−1)^k [g^{(2k)} sin(ΩΔ)/Δ^{2k+1} + g^{(2k+1)} cos(ΩΔ)/Δ^{2k+2}].
fn cosine_tail(g: &[f64], cutoff: f64, lag: f64) -> (f64, f64) {
    let (s, c) = (cutoff * lag).sin_cos();
    let mut total = 0.0;
    let mut last = 0.0;
    let mut sign = -1.0;
    let mut k = 0;
    while 2 * k + 1 < g.len() {
        let term = sign * (g[2 * k] * s / lag.powi(2 * k as i32 + 1) + g[2 * k + 1] * c / lag.powi(2 * k as i32 + 2));
        total += term;
        last = term.abs();
        sign = -sign;
        k += 1;
    }
    // The final pair bounds the truncation; the local power law of N adds a
    // relative uncertainty on the higher derivatives.
    let model = if g.len() > 2 { (g[2] / lag.powi(3)).abs() * 0.1 } else { 0.0 };
    (total, last + model)
}

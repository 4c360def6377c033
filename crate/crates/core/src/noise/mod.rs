//! Magnetic noise at the probe and the phase variance it produces.

pub mod decoherence;
pub mod materials;
pub mod phase;
pub mod spectrum;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters::{momentum_filter_unchecked, GeometryConfig, PulseSequence};
use crate::quadrature::{geometric_breaks, integrate, Estimate, Tolerance};
use crate::structure_factors::{o3_transport, structure_factor_unchecked, SampleModel};

pub use decoherence::{coherence, cpmg_closed_form, lorentzian_cpmg_amplitude, t2_extract, t2_refine, CurvePoint, DecoherenceCurve, QubitParams, T2Estimate};
pub use phase::{panel_layout, phase_variance, PanelLayout, PhaseVariance};
pub use spectrum::{Flat, Lorentzian, NoiseSpectrum, SpectralDensity, SpectralSource, SpectrumSample};

pub const DEFAULT_TOL_Q: f64 = 1e-8;
pub const DEFAULT_TOL_OMEGA: f64 = 1e-6;

/// Wavevector scales at which S(q, ω) changes character.
fn q_scales(model: &SampleModel, geom: &GeometryConfig, omega: f64) -> Result<Vec<f64>> {
    let mut s: Vec<f64> = geom.layer_distances().map(|d| 1.0 / d).collect();
    let w = omega.abs();
    match *model {
        SampleModel::ModelA { j, gamma0, xi, .. } => {
            s.push(1.0 / xi.value());
            s.push((w / (gamma0 * j)).sqrt());
        }
        SampleModel::ModelB { j, sigma_s, xi, .. } => {
            s.push(1.0 / xi.value());
            s.push((w / (sigma_s * j)).powf(0.25));
            let m = xi.inverse_squared();
            if m > 0.0 {
                s.push((w / (sigma_s * j * m)).sqrt());
            }
        }
        SampleModel::DiffusiveO3 { d_s, .. } => s.push((w / d_s).sqrt()),
        SampleModel::TfimQc { c, temperature, z, .. } => {
            let xi = c / temperature.powf(1.0 / z);
            s.push(1.0 / xi);
            s.push((w / temperature).sqrt() / xi);
        }
        SampleModel::O3Regime { .. } => {
            let tr = o3_transport(model)?;
            s.push((w / tr.d_s).sqrt());
        }
    }
    s.retain(|x| x.is_finite() && *x > 0.0);
    Ok(s)
}

fn static_divergence(model: &SampleModel) -> bool {
    match model {
        SampleModel::ModelA { xi, .. } | SampleModel::ModelB { xi, .. } => xi.is_critical(),
        _ => false,
    }
}

/// N(ω) = ∫₀^∞ dq/2π W_d(q) S(q, ω), integrated to relative accuracy
/// `tol_q` with the wavevector cut at 40/d.
pub fn noise_spectral_density_with(omega: f64, model: &SampleModel, geom: &GeometryConfig, tol_q: f64) -> Result<Estimate> {
    if !omega.is_finite() {
        return Err(Error::Domain(format!("omega must be finite, got {omega}")));
    }
    model.validate()?;
    geom.validate()?;
    if model.temperature() == 0.0 {
        return Ok(Estimate::zero());
    }
    if omega == 0.0 && static_divergence(model) {
        return Err(Error::Domain("N(0) diverges at the critical point".into()));
    }
    let q_max = 40.0 / geom.d;
    let scales = q_scales(model, geom, omega)?;
    let q_lo = 1e-3 * scales.iter().cloned().fold(f64::INFINITY, f64::min).min(q_max);
    let mut breaks = vec![0.0];
    breaks.extend(geometric_breaks(q_lo, q_max, 4.0));
    for &s in &scales {
        if s > q_lo && s < q_max {
            breaks.push(s);
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let w = omega.abs();
    let tol = Tolerance { rel: tol_q, abs: 0.0, max_intervals: 20_000 };
    let inv2pi = 0.5 / std::f64::consts::PI;
    integrate(
        |q| {
            if q == 0.0 {
                return 0.0;
            }
            momentum_filter_unchecked(q, geom) * structure_factor_unchecked(model, q, w) * inv2pi
        },
        &breaks,
        tol,
    )
}

/// N(ω) at the default tolerance.
pub fn noise_spectral_density(omega: f64, model: &SampleModel, geom: &GeometryConfig) -> Result<Estimate> {
    noise_spectral_density_with(omega, model, geom, DEFAULT_TOL_Q)
}

/// The continuum q-integral as a source for [`NoiseSpectrum`].
pub struct ContinuumNoise<'a> {
    pub model: &'a SampleModel,
    pub geom: &'a GeometryConfig,
    pub tol_q: f64,
}

impl SpectralSource for ContinuumNoise<'_> {
    fn density(&self, omega: f64) -> Result<Estimate> {
        noise_spectral_density_with(omega, self.model, self.geom, self.tol_q)
    }
    fn rate_hint(&self) -> f64 {
        self.model.characteristic_rate(self.geom.d).unwrap_or(f64::INFINITY)
    }
    fn is_zero(&self) -> bool {
        self.model.temperature() == 0.0
    }
    fn provenance(&self) -> String {
        format!("{} | geometry {:?} | tol_q {:e}", describe_model(self.model), self.geom, self.tol_q)
    }
}

pub fn describe_model(model: &SampleModel) -> String {
    format!("{model:?}")
}

/// Frequency band an interpolant must cover for the given times.
pub fn band_for(taus: &[f64], seq: &PulseSequence, rate_hint: f64) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &tau in taus {
        let s = seq.with_total_time(tau);
        s.validate()?;
        let l = panel_layout(&s, rate_hint);
        lo = lo.min(l.inner);
        hi = hi.max(l.cutoff);
    }
    if !(lo.is_finite() && hi > 0.0) {
        return Err(Error::Domain("no times given".into()));
    }
    Ok((1e-2 * lo, 1e4 * hi))
}

/// Tolerances and entry points of the quadrature path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEngine {
    pub tol_q: f64,
    pub tol_omega: f64,
}

impl Default for NoiseEngine {
    fn default() -> Self {
        Self { tol_q: DEFAULT_TOL_Q, tol_omega: DEFAULT_TOL_OMEGA }
    }
}

impl NoiseEngine {
    pub fn new(tol_q: f64, tol_omega: f64) -> Result<Self> {
        if !(tol_q > 0.0 && tol_omega > 0.0) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        Ok(Self { tol_q, tol_omega })
    }

    /// Tabulates N(ω) over [lo, hi].
    pub fn spectrum(&self, model: &SampleModel, geom: &GeometryConfig, lo: f64, hi: f64) -> Result<NoiseSpectrum> {
        model.validate()?;
        geom.validate()?;
        let src = ContinuumNoise { model, geom, tol_q: self.tol_q };
        NoiseSpectrum::build(&src, lo, hi, self.tol_q, 0.1 * self.tol_omega)
    }

    /// Tabulates N(ω) over the band needed for `taus` under `seq`.
    pub fn spectrum_for(&self, model: &SampleModel, geom: &GeometryConfig, taus: &[f64], seq: &PulseSequence) -> Result<NoiseSpectrum> {
        model.validate()?;
        geom.validate()?;
        let rate = model.characteristic_rate(geom.d)?;
        let (lo, hi) = band_for(taus, seq, rate)?;
        self.spectrum(model, geom, lo, hi)
    }

    /// ⟨φ²⟩ at a single time.
    pub fn phi_squared(&self, tau: f64, seq: &PulseSequence, model: &SampleModel, geom: &GeometryConfig) -> Result<PhaseVariance> {
        let s = seq.with_total_time(tau);
        let spec = self.spectrum_for(model, geom, &[tau], &s)?;
        phase_variance(&spec, &s, self.tol_omega)
    }

    /// ⟨φ²⟩ at every time in `taus` from one shared spectrum.
    pub fn decoherence_curve(&self, taus: &[f64], seq: &PulseSequence, model: &SampleModel, geom: &GeometryConfig) -> Result<DecoherenceCurve> {
        let spec = self.spectrum_for(model, geom, taus, seq)?;
        self.curve_from_spectrum(&spec, taus, seq, model, geom)
    }

    pub fn curve_from_spectrum(
        &self,
        spec: &NoiseSpectrum,
        taus: &[f64],
        seq: &PulseSequence,
        model: &SampleModel,
        geom: &GeometryConfig,
    ) -> Result<DecoherenceCurve> {
        let results: Vec<PhaseVariance> = taus
            .par_iter()
            .map(|&tau| phase_variance(spec, &seq.with_total_time(tau), self.tol_omega))
            .collect::<Result<_>>()?;
        let endpoint_substitution = results.iter().any(|r| r.endpoint_substitution);
        Ok(DecoherenceCurve {
            points: taus
                .iter()
                .zip(&results)
                .map(|(&tau, r)| CurvePoint { tau, phi_sq: r.value, error: r.error })
                .collect(),
            sequence: seq.clone(),
            model: model.clone(),
            geometry: geom.clone(),
            tol_q: self.tol_q,
            tol_omega: self.tol_omega,
            endpoint_substitution,
        })
    }
}

/// ⟨φ²⟩ at default tolerances.
pub fn phi_squared(tau: f64, seq: &PulseSequence, model: &SampleModel, geom: &GeometryConfig) -> Result<PhaseVariance> {
    NoiseEngine::default().phi_squared(tau, seq, model, geom)
}

use critspec::filters::{GeometryConfig, PulseSequence};
use critspec::noise::{
    coherence, cpmg_closed_form, lorentzian_cpmg_amplitude, noise_spectral_density_with, t2_extract, CurvePoint, DecoherenceCurve, NoiseEngine,
    QubitParams,
};
use critspec::structure_factors::SampleModel;

use super::Context;
use crate::config::SequenceKindSpec;
use crate::error::CliError;
use crate::table::{fmt_num, Table};
use crate::Output;

/// ⟨φ²⟩ and its error bound at each τ. A sample at T = 0 is silent.
pub fn phase_curve(engine: &NoiseEngine, taus: &[f64], seq: &PulseSequence, model: &SampleModel, geom: &GeometryConfig) -> Result<DecoherenceCurve, CliError> {
    if model.temperature() == 0.0 {
        let pts = taus.iter().map(|&t| (t, 0.0)).collect();
        return Ok(DecoherenceCurve::from_samples(pts, seq.clone(), model.clone(), geom.clone()));
    }
    Ok(engine.decoherence_curve(taus, seq, model, geom)?)
}

/// Lorentzian stand-in A ω₀/(ω₀² + ω²) for the model spectrum, matched to
/// N(0) and N(ω_p). Falls back to ω₀ = characteristic rate, matched at ω_p,
/// when N(0) is infinite or the spectrum is not decreasing.
fn lorentzian_match(n0: Option<f64>, np: f64, omega_p: f64, rate: f64) -> (f64, f64) {
    if let Some(n0) = n0 {
        let r = np / n0;
        if n0.is_finite() && n0 > 0.0 && r > 0.0 && r < 1.0 {
            let w0 = omega_p * (r / (1.0 - r)).sqrt();
            return (w0, n0 * w0);
        }
    }
    (rate, np * (rate * rate + omega_p * omega_p) / rate)
}

fn closed_form_column(ctx: &Context, seq: &PulseSequence, pulses: usize, points: &[CurvePoint]) -> Result<Vec<f64>, CliError> {
    let l = ctx.loaded;
    let (model, geom) = (l.model()?, l.geometry()?);
    if model.temperature() == 0.0 {
        return Ok(vec![0.0; points.len()]);
    }
    let tol = l.config.tolerances.q;
    let n0 = noise_spectral_density_with(0.0, model, geom, tol).ok().map(|e| e.value);
    let rate = model.characteristic_rate(geom.d)?;
    points
        .iter()
        .map(|p| {
            let omega_p = std::f64::consts::PI * pulses as f64 / p.tau;
            let np = noise_spectral_density_with(omega_p, model, geom, tol)?.value;
            let (w0, a) = lorentzian_match(n0, np, omega_p, rate);
            Ok(cpmg_closed_form(p.tau, w0, omega_p, lorentzian_cpmg_amplitude(seq.kappa, a))?)
        })
        .collect()
}

pub fn run(ctx: &Context) -> Result<Output, CliError> {
    let l = ctx.loaded;
    let model = l.model()?;
    let geom = l.geometry()?;
    let taus = l.taus()?;
    let spec = l.sequence()?;
    let seq = spec.at(taus[0])?;
    let t = l.config.tolerances;
    let engine = NoiseEngine::new(t.q, t.omega)?;
    let curve = phase_curve(&engine, &taus, &seq, model, geom)?;
    let t1 = l.config.qubit.t1;
    let bare = QubitParams { kappa: seq.kappa, t1: f64::INFINITY };
    let qubit = QubitParams { kappa: seq.kappa, t1: t1.unwrap_or(f64::INFINITY) };

    let mut comments = ctx.header("decohere");
    comments.push(format!("sequence: {:?}, kappa {}", seq.kind, fmt_num(seq.kappa)));
    match t2_extract(&curve, &qubit) {
        Ok(est) => {
            comments.push(format!("t2: {}", fmt_num(est.t2)));
            if let (Some(_), Some(v)) = (t1, est.t2_with_t1) {
                comments.push(format!("t2_with_t1: {}", fmt_num(v)));
            }
        }
        Err(_) => comments.push("t2: not reached in the sampled range".into()),
    }

    let cpmg = match spec.kind {
        SequenceKindSpec::Cpmg => Some(closed_form_column(ctx, &seq, seq.pulse_count(), &curve.points)?),
        _ => None,
    };
    let mut header = vec!["tau", "phi_sq", "coherence", "err"];
    if t1.is_some() {
        header.push("coherence_t1");
    }
    header.push("t2_crossing");
    if cpmg.is_some() {
        header.push("cpmg_closed_form");
    }
    let mut table = Table::new(comments, &header);
    let mut below = true;
    for (i, p) in curve.points.iter().enumerate() {
        let mut row = vec![p.tau, p.phi_sq, coherence(p.tau, &bare, p.phi_sq)?, p.error];
        if t1.is_some() {
            row.push(coherence(p.tau, &qubit, p.phi_sq)?);
        }
        let crossed = below && 2.0 * p.phi_sq >= 1.0;
        below = 2.0 * p.phi_sq < 1.0;
        row.push(if crossed { 1.0 } else { 0.0 });
        if let Some(c) = &cpmg {
            row.push(c[i]);
        }
        table.rows.push(row);
    }
    Ok(Output { main: table.render(), extra: Vec::new() })
}

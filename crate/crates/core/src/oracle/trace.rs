use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{ensure_positive, Error, Result};
use crate::filters::{GeometryConfig, PulseSequence};
use crate::structure_factors::SampleModel;

use super::{mode_dynamics, LatticeSpec};

/// Largest number of lattice modes a simulation accepts by default.
pub const DEFAULT_MODE_CAP: usize = 1 << 20;

/// Exact Ornstein–Uhlenbeck update over a step `dt`:
/// `x e^{−r dt} + √(v(1 − e^{−2r dt}))·ξ` with ξ standard normal.
pub fn ou_mode_step<G: RngCore + ?Sized>(value: f64, rate: f64, variance: f64, dt: f64, rng: &mut G) -> f64 {
    let normal: f64 = StandardNormal.sample(rng);
    let decay = (-rate * dt).exp();
    let spread = (variance * -(-2.0 * rate * dt).exp_m1()).sqrt();
    value * decay + spread * normal
}

/// Probe field sampled at `t_i = i·dt`, i = 0..samples.len().
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrace {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub seed: u64,
    pub index: u64,
    pub provenance: String,
}

impl FieldTrace {
    pub fn duration(&self) -> f64 {
        self.dt * (self.samples.len().saturating_sub(1)) as f64
    }
}

fn key(seed: u64, index: u64) -> [u8; 32] {
    let mut k = [0u8; 32];
    k[..8].copy_from_slice(&seed.to_le_bytes());
    k[8..16].copy_from_slice(&index.to_le_bytes());
    k
}

struct Plan {
    modes: Vec<super::ModeDynamics>,
    steps: usize,
    provenance: String,
}

fn plan(model: &SampleModel, geom: &GeometryConfig, lattice: &LatticeSpec, duration: f64, dt: f64, mode_cap: usize) -> Result<Plan> {
    ensure_positive("duration", duration)?;
    ensure_positive("dt", dt)?;
    lattice.validate()?;
    if lattice.mode_count() > mode_cap {
        return Err(Error::Memory(format!("{} lattice modes exceed the cap of {mode_cap}", lattice.mode_count())));
    }
    let steps = (duration / dt - 1e-9).ceil() as usize;
    let modes = mode_dynamics(model, geom, lattice)?;
    let provenance = format!("{model:?} | {geom:?} | {lattice:?} | dt {dt:e}");
    Ok(Plan { modes, steps, provenance })
}

fn run(plan: &Plan, dt: f64, seed: u64, index: u64) -> FieldTrace {
    let mut samples = vec![0.0; plan.steps + 1];
    let mut rng = ChaCha8Rng::from_seed(key(seed, index));
    // Each real component draws from its own stream so a sample depends
    // only on (seed, trace, component, step).
    let mut stream = 0u64;
    for m in &plan.modes {
        let parts: &[f64] = if m.self_conjugate { &[m.weight_re] } else { &[m.weight_re, m.weight_im] };
        for &w in parts {
            rng.set_stream(stream);
            rng.set_word_pos(0);
            stream += 1;
            if m.variance == 0.0 {
                continue;
            }
            let decay = (-m.rate * dt).exp();
            let spread = (m.variance * -(-2.0 * m.rate * dt).exp_m1()).sqrt();
            let n0: f64 = StandardNormal.sample(&mut rng);
            let mut x = m.variance.sqrt() * n0;
            samples[0] += w * x;
            for s in samples.iter_mut().skip(1) {
                let n: f64 = StandardNormal.sample(&mut rng);
                x = x * decay + spread * n;
                *s += w * x;
            }
        }
    }
    FieldTrace { dt, samples, seed, index, provenance: plan.provenance.clone() }
}

/// One trace of the probe field, with every mode started from its
/// stationary distribution.
pub fn simulate_field_trace(
    model: &SampleModel,
    geom: &GeometryConfig,
    lattice: &LatticeSpec,
    duration: f64,
    dt: f64,
    seed: u64,
) -> Result<FieldTrace> {
    let p = plan(model, geom, lattice, duration, dt, DEFAULT_MODE_CAP)?;
    Ok(run(&p, dt, seed, 0))
}

/// Traces 0..count for one seed, generated in parallel; trace i is the
/// same whatever the number of workers.
pub fn simulate_ensemble(
    model: &SampleModel,
    geom: &GeometryConfig,
    lattice: &LatticeSpec,
    duration: f64,
    dt: f64,
    seed: u64,
    count: usize,
    mode_cap: usize,
) -> Result<Vec<FieldTrace>> {
    let p = plan(model, geom, lattice, duration, dt, mode_cap)?;
    Ok((0..count as u64).into_par_iter().map(|i| run(&p, dt, seed, i)).collect())
}

/// Sample mean of φ² over traces and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// φ = κ∫₀^τ f(t)B(t)dt on the piecewise-linear interpolant of each trace
/// (the trapezoid rule when the switch times fall on the grid).
pub fn phase_of_trace(trace: &FieldTrace, seq: &PulseSequence) -> Result<f64> {
    let tau = seq.total_time;
    if trace.duration() < tau * (1.0 - 1e-12) {
        return Err(Error::Range(format!("trace covers {:e} but the sequence needs {tau:e}", trace.duration())));
    }
    let max_dt = tau / (20.0 * seq.pulse_count().max(1) as f64);
    if trace.dt > max_dt * (1.0 + 1e-12) {
        return Err(Error::Validation(format!("dt = {:e} does not resolve the sequence (needs <= {max_dt:e})", trace.dt)));
    }
    let edges = seq.segment_edges();
    let b = &trace.samples;
    let dt = trace.dt;
    let interp = |t: f64| -> f64 {
        let x = t / dt;
        let i = (x.floor() as usize).min(b.len() - 2);
        let f = x - i as f64;
        b[i] * (1.0 - f) + b[i + 1] * f
    };
    let mut phi = 0.0;
    for (k, w) in edges.windows(2).enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let (a, e) = (w[0], w[1]);
        // Exact integral of the interpolant: trapezoids between grid points
        // inside [a, e] plus the two partial cells.
        let first = (a / dt).ceil() as usize;
        let last = ((e / dt).floor() as usize).min(b.len() - 1);
        let mut s = 0.0;
        if first > last || (first as f64 * dt) > e {
            s += 0.5 * (interp(a) + interp(e)) * (e - a);
        } else {
            let t0 = first as f64 * dt;
            let t1 = last as f64 * dt;
            s += 0.5 * (interp(a) + b[first]) * (t0 - a);
            for i in first..last {
                s += 0.5 * (b[i] + b[i + 1]) * dt;
            }
            s += 0.5 * (b[last] + interp(e)) * (e - t1);
        }
        phi += sign * s;
    }
    Ok(seq.kappa * phi)
}

pub fn monte_carlo_phi_squared(traces: &[FieldTrace], seq: &PulseSequence) -> Result<McEstimate> {
    seq.validate()?;
    if traces.len() < 2 {
        return Err(Error::Validation("at least two traces are needed for a standard error".into()));
    }
    let sq: Vec<f64> = traces.iter().map(|t| phase_of_trace(t, seq).map(|p| p * p)).collect::<Result<_>>()?;
    let n = sq.len() as f64;
    let mean = sq.iter().sum::<f64>() / n;
    let var = sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate { mean, stderr: (var / n).sqrt(), count: sq.len() })
}

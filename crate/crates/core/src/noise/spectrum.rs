//! Spectral densities consumed by the phase-variance integrator, including
//! the cached interpolant of an expensive source.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::Estimate;

/// A noise spectral density N(ω) that is cheap to evaluate.
pub trait SpectralDensity: Sync {
    /// N(|ω|).
    fn eval(&self, omega: f64) -> f64;

    /// Power p of N ∝ ω^p as ω → 0.
    fn low_frequency_exponent(&self) -> f64 {
        0.0
    }

    /// Rate below which the density is expected to be a pure power law.
    fn rate_hint(&self) -> f64 {
        f64::INFINITY
    }

    /// Relative accuracy of `eval` with respect to the underlying source.
    fn relative_accuracy(&self) -> f64 {
        0.0
    }

    fn is_zero(&self) -> bool {
        false
    }
}

/// An expensive N(ω), sampled once into a [`NoiseSpectrum`].
pub trait SpectralSource: Sync {
    fn density(&self, omega: f64) -> Result<Estimate>;
    fn rate_hint(&self) -> f64;
    fn is_zero(&self) -> bool;
    fn provenance(&self) -> String;
}

/// N(ω) = A ω₀/(ω₀² + ω²), the spectrum of an exponentially correlated
/// signal with ⟨B(t)B(0)⟩ = (A/2) e^{−ω₀|t|}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentzian {
    pub amplitude: f64,
    pub width: f64,
}

impl SpectralDensity for Lorentzian {
    fn eval(&self, omega: f64) -> f64 {
        self.amplitude * self.width / (self.width * self.width + omega * omega)
    }
    fn rate_hint(&self) -> f64 {
        self.width
    }
}

/// White noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flat(pub f64);

impl SpectralDensity for Flat {
    fn eval(&self, _omega: f64) -> f64 {
        self.0
    }
    fn is_zero(&self) -> bool {
        self.0 == 0.0
    }
}

/// One tabulated point of N(ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub omega: f64,
    pub density: f64,
    pub error: f64,
}

/// N(ω) tabulated on an adaptive logarithmic grid and interpolated with
/// four-point Lagrange polynomials in (ln ω, ln N). Power laws continue the
/// table beyond both ends.
#[derive(Debug, Clone)]
pub struct NoiseSpectrum {
    samples: Vec<SpectrumSample>,
    ln_omega: Vec<f64>,
    ln_density: Vec<f64>,
    zero: bool,
    rate_hint: f64,
    /// Relative tolerance of the source evaluations.
    pub source_tolerance: f64,
    /// Relative accuracy targeted by the interpolant.
    pub interpolation_tolerance: f64,
    pub provenance: String,
}

const MAX_NODES: usize = 40_000;

impl NoiseSpectrum {
    /// Samples `source` over [lo, hi] until every interval passes a
    /// midpoint check at relative accuracy `interp_tol`.
    pub fn build(source: &dyn SpectralSource, lo: f64, hi: f64, source_tol: f64, interp_tol: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(Error::Domain(format!("invalid frequency band [{lo}, {hi}]")));
        }
        if source.is_zero() {
            return Ok(Self {
                samples: vec![
                    SpectrumSample { omega: lo, density: 0.0, error: 0.0 },
                    SpectrumSample { omega: hi, density: 0.0, error: 0.0 },
                ],
                ln_omega: vec![lo.ln(), hi.ln()],
                ln_density: vec![f64::NEG_INFINITY; 2],
                zero: true,
                rate_hint: source.rate_hint(),
                source_tolerance: source_tol,
                interpolation_tolerance: interp_tol,
                provenance: source.provenance(),
            });
        }
        let (a, b) = (lo.ln(), hi.ln());
        let n0 = (((b - a) / (std::f64::consts::LN_10 / 3.0)).ceil() as usize).max(4);
        let xs: Vec<f64> = (0..=n0).map(|i| a + (b - a) * i as f64 / n0 as f64).collect();
        let mut nodes: Vec<(f64, SpectrumSample)> = evaluate(source, &xs)?;
        // Interval i lies between nodes i and i+1; all start unchecked.
        let mut pending: Vec<bool> = vec![true; nodes.len() - 1];
        loop {
            let todo: Vec<usize> = pending.iter().enumerate().filter(|(_, p)| **p).map(|(i, _)| i).collect();
            if todo.is_empty() {
                break;
            }
            if nodes.len() + todo.len() > MAX_NODES {
                return Err(Error::NonConvergence { estimate: f64::NAN, bound: f64::INFINITY });
            }
            let mids: Vec<f64> = todo.iter().map(|&i| 0.5 * (nodes[i].0 + nodes[i + 1].0)).collect();
            let fresh = evaluate(source, &mids)?;
            let ys: Vec<f64> = nodes.iter().map(|n| ln_clamped(n.1.density)).collect();
            let xs_now: Vec<f64> = nodes.iter().map(|n| n.0).collect();
            let mut failed = vec![false; todo.len()];
            for (k, &i) in todo.iter().enumerate() {
                let predicted = lagrange(&xs_now, &ys, i, mids[k]);
                let actual = ln_clamped(fresh[k].1.density);
                let noise = (fresh[k].1.error / fresh[k].1.density.max(f64::MIN_POSITIVE)).min(1.0);
                failed[k] = (predicted - actual).abs() > interp_tol + 2.0 * noise;
            }
            // Merge the midpoints in and mark the halves of failed intervals.
            let mut merged = Vec::with_capacity(nodes.len() + todo.len());
            let mut flags = Vec::with_capacity(nodes.len() + todo.len());
            let mut k = 0;
            for i in 0..nodes.len() {
                merged.push(nodes[i]);
                if i + 1 == nodes.len() {
                    break;
                }
                if k < todo.len() && todo[k] == i {
                    merged.push(fresh[k]);
                    flags.push(failed[k]);
                    flags.push(failed[k]);
                    k += 1;
                } else {
                    flags.push(false);
                }
            }
            nodes = merged;
            pending = flags;
        }
        let samples: Vec<SpectrumSample> = nodes.iter().map(|n| n.1).collect();
        let ln_omega = nodes.iter().map(|n| n.0).collect();
        let ln_density = samples.iter().map(|s| ln_clamped(s.density)).collect();
        Ok(Self {
            samples,
            ln_omega,
            ln_density,
            zero: false,
            rate_hint: source.rate_hint(),
            source_tolerance: source_tol,
            interpolation_tolerance: interp_tol,
            provenance: source.provenance(),
        })
    }

    pub fn samples(&self) -> &[SpectrumSample] {
        &self.samples
    }

    pub fn band(&self) -> (f64, f64) {
        (self.samples[0].omega, self.samples[self.samples.len() - 1].omega)
    }

    /// Local log-log slope at the high end of the table.
    pub fn high_frequency_exponent(&self) -> f64 {
        if self.zero {
            return 0.0;
        }
        let n = self.ln_omega.len();
        (self.ln_density[n - 1] - self.ln_density[n - 2]) / (self.ln_omega[n - 1] - self.ln_omega[n - 2])
    }
}

impl SpectralDensity for NoiseSpectrum {
    fn eval(&self, omega: f64) -> f64 {
        if self.zero {
            return 0.0;
        }
        let w = omega.abs();
        let xs = &self.ln_omega;
        let ys = &self.ln_density;
        let n = xs.len();
        if w == 0.0 {
            let p = self.low_frequency_exponent();
            return if p.abs() < 1e-3 {
                self.samples[0].density
            } else if p > 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        let x = w.ln();
        if x <= xs[0] {
            let p = (ys[1] - ys[0]) / (xs[1] - xs[0]);
            let p = if p.abs() < 1e-3 { 0.0 } else { p };
            return (ys[0] + p * (x - xs[0])).exp();
        }
        if x >= xs[n - 1] {
            let p = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
            return (ys[n - 1] + p * (x - xs[n - 1])).exp();
        }
        let i = match xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.samples[i].density,
            Err(i) => i - 1,
        };
        lagrange(xs, ys, i, x).exp()
    }

    fn low_frequency_exponent(&self) -> f64 {
        if self.zero {
            return 0.0;
        }
        (self.ln_density[1] - self.ln_density[0]) / (self.ln_omega[1] - self.ln_omega[0])
    }

    fn rate_hint(&self) -> f64 {
        self.rate_hint
    }

    fn relative_accuracy(&self) -> f64 {
        self.interpolation_tolerance + self.source_tolerance
    }

    fn is_zero(&self) -> bool {
        self.zero
    }
}

fn ln_clamped(v: f64) -> f64 {
    v.max(f64::MIN_POSITIVE).ln()
}

fn evaluate(source: &dyn SpectralSource, xs: &[f64]) -> Result<Vec<(f64, SpectrumSample)>> {
    xs.par_iter()
        .map(|&x| {
            let omega = x.exp();
            let e = source.density(omega)?;
            Ok((x, SpectrumSample { omega, density: e.value, error: e.error }))
        })
        .collect()
}

// Cubic through nodes i−1..i+2 (shifted inward at the ends), evaluated at x
// inside interval i.
fn lagrange(xs: &[f64], ys: &[f64], i: usize, x: f64) -> f64 {
    let n = xs.len();
    if n < 4 {
        let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] + t * (ys[i + 1] - ys[i]);
    }
    let start = i.saturating_sub(1).min(n - 4);
    let mut acc = 0.0;
    for a in start..start + 4 {
        let mut w = 1.0;
        for b in start..start + 4 {
            if a != b {
                w *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        acc += w * ys[a];
    }
    acc
}

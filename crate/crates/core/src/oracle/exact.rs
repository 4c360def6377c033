use std::collections::BTreeMap;

use crate::error::Result;
use crate::filters::{GeometryConfig, PulseSequence};
use crate::noise::SpectralDensity;
use crate::structure_factors::{chi, SampleModel};

use super::{check_model, field_coupling, LatticeSpec};

/// Lattice modes sharing |q|: the probe field autocovariance gains
/// `weight·e^{−rate|t|}` from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub q: f64,
    pub rate: f64,
    pub weight: f64,
    pub multiplicity: usize,
}

/// Noise spectral density of the lattice field,
/// `N(ω) = Σ_shells weight·2r/(r² + ω²)`: the discrete-mode counterpart of
/// the continuum q-integral.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModeNoise {
    pub shells: Vec<Shell>,
}

impl DiscreteModeNoise {
    pub fn new(model: &SampleModel, geom: &GeometryConfig, lattice: &LatticeSpec) -> Result<Self> {
        check_model(model)?;
        geom.validate()?;
        lattice.validate()?;
        let t = model.temperature();
        let mut groups: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
        for (m, self_conjugate) in lattice.representatives() {
            let key = m.n[0] * m.n[0] + m.n[1] * m.n[1];
            let count = if self_conjugate { 1 } else { 2 };
            let e = groups.entry(key).or_insert((m.magnitude(), 0));
            e.1 += count;
        }
        let shells = groups
            .into_values()
            .map(|(q, multiplicity)| {
                let h = field_coupling(q, geom, lattice);
                let tchi = t * chi(model, q, 0.0)?.re;
                Ok(Shell { q, rate: model.relaxation_rate(q)?, weight: multiplicity as f64 * h * h * tchi, multiplicity })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { shells })
    }

    /// ⟨B(t)B(0)⟩.
    pub fn autocovariance(&self, t: f64) -> f64 {
        self.shells.iter().map(|s| s.weight * (-s.rate * t.abs()).exp()).sum()
    }

    /// ⟨B²⟩.
    pub fn variance(&self) -> f64 {
        self.autocovariance(0.0)
    }
}

impl SpectralDensity for DiscreteModeNoise {
    fn eval(&self, omega: f64) -> f64 {
        self.shells.iter().map(|s| s.weight * 2.0 * s.rate / (s.rate * s.rate + omega * omega)).sum()
    }
    fn low_frequency_exponent(&self) -> f64 {
        0.0
    }
    fn rate_hint(&self) -> f64 {
        self.shells.iter().map(|s| s.rate).fold(f64::INFINITY, f64::min)
    }
    fn relative_accuracy(&self) -> f64 {
        0.0
    }
    fn is_zero(&self) -> bool {
        self.shells.iter().all(|s| s.weight == 0.0)
    }
}

// ∫_0^ℓ∫_0^ℓ e^{−r|t−s|} = 2(x − 1 + e^{−x})/r² with x = rℓ.
fn same_segment(r: f64, len: f64) -> f64 {
    let x = r * len;
    if x < 1e-3 {
        len * len * (1.0 - x / 3.0 + x * x / 12.0 - x * x * x / 60.0)
    } else {
        2.0 * (x + (-x).exp_m1()) / (r * r)
    }
}

// (1 − e^{−rℓ})/r, continuous at r = 0.
fn decayed_length(r: f64, len: f64) -> f64 {
    if r == 0.0 {
        len
    } else {
        -(-r * len).exp_m1() / r
    }
}

/// ⟨φ²⟩ of the lattice field under `seq` from the closed-form double
/// integral of every shell's exponential autocovariance over the sign
/// segments.
pub fn ou_phase_variance(noise: &DiscreteModeNoise, seq: &PulseSequence) -> Result<f64> {
    seq.validate()?;
    let edges = seq.segment_edges();
    let segs: Vec<(f64, f64, f64)> = edges
        .windows(2)
        .enumerate()
        .map(|(k, w)| (w[0], w[1], if k % 2 == 0 { 1.0 } else { -1.0 }))
        .collect();
    let mut total = 0.0;
    for s in &noise.shells {
        let r = s.rate;
        let mut acc = 0.0;
        for (i, a) in segs.iter().enumerate() {
            acc += same_segment(r, a.1 - a.0);
            for b in &segs[i + 1..] {
                let gap = b.0 - a.1;
                acc += 2.0 * a.2 * b.2 * decayed_length(r, a.1 - a.0) * decayed_length(r, b.1 - b.0) * (-r * gap).exp();
            }
        }
        total += s.weight * acc;
    }
    Ok(seq.kappa * seq.kappa * total)
}

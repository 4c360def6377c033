//! Stochastic ground truth for the mean-field models: every Fourier mode of
//! the order parameter on a periodic lattice is an independent
//! Ornstein–Uhlenbeck process, simulated exactly, and the probe field is
//! assembled from the modes through the dipolar kernel.
//!
//! Mode amplitudes are normalized so that a mode at wavevector q has
//! stationary variance `Tχ(q)` and the field at the probe is
//! `B = (moment/(La)) Σ_q H_zz(q) c_q e^{iq·r}`. With this convention the
//! lattice sum `(1/(La)²) Σ_q` replaces `∫ d²q/(2π)²` of the continuum.

mod exact;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::GeometryConfig;
use crate::structure_factors::{chi, SampleModel};

pub use exact::{ou_phase_variance, DiscreteModeNoise, Shell};
pub use trace::{
    monte_carlo_phi_squared, ou_mode_step, phase_of_trace, simulate_ensemble, simulate_field_trace, FieldTrace, McEstimate, DEFAULT_MODE_CAP,
};

/// Periodic L×L lattice of spacing `a`, with the probe above site `probe`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub size: usize,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub probe: [usize; 2],
}

fn one() -> f64 {
    1.0
}

impl LatticeSpec {
    pub fn new(size: usize) -> Self {
        Self { size, a: 1.0, probe: [0, 0] }
    }

    pub fn with_probe(mut self, probe: [usize; 2]) -> Self {
        self.probe = probe;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 16 || !self.size.is_multiple_of(2) {
            return Err(Error::Validation(format!("lattice size must be even and at least 16, got {}", self.size)));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::Validation(format!("lattice constant must be positive, got {}", self.a)));
        }
        if self.probe[0] >= self.size || self.probe[1] >= self.size {
            return Err(Error::Validation("probe site lies outside the lattice".into()));
        }
        Ok(())
    }

    /// Number of nonzero wavevectors.
    pub fn mode_count(&self) -> usize {
        self.size * self.size - 1
    }

    /// Signed mode index in [−L/2, L/2) for a raw index in [0, L).
    fn signed(&self, i: usize) -> i64 {
        let l = self.size as i64;
        let i = i as i64;
        if i >= l / 2 {
            i - l
        } else {
            i
        }
    }

    fn wavevector(&self, n: [i64; 2]) -> [f64; 2] {
        let s = 2.0 * std::f64::consts::PI / (self.size as f64 * self.a);
        [s * n[0] as f64, s * n[1] as f64]
    }

    /// One representative of every ±q pair, plus the self-conjugate modes,
    /// excluding q = 0.
    fn representatives(&self) -> Vec<(LatticeMode, bool)> {
        let l = self.size as i64;
        let h = l / 2;
        let mut out = Vec::with_capacity(self.size * self.size / 2 + 2);
        for iy in 0..self.size {
            for ix in 0..self.size {
                let n = [self.signed(ix), self.signed(iy)];
                if n == [0, 0] {
                    continue;
                }
                let self_conjugate = (n[0] == 0 || n[0] == -h) && (n[1] == 0 || n[1] == -h);
                let representative = n[1] > 0 || ((n[1] == 0 || n[1] == -h) && n[0] > 0);
                if self_conjugate || representative {
                    out.push((LatticeMode { n, q: self.wavevector(n) }, self_conjugate));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LatticeMode {
    n: [i64; 2],
    q: [f64; 2],
}

impl LatticeMode {
    fn magnitude(&self) -> f64 {
        self.q[0].hypot(self.q[1])
    }
}

/// Dynamics of one lattice mode and its projection onto the probe field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ModeDynamics {
    /// Relaxation rate r_q.
    pub rate: f64,
    /// Stationary variance of each simulated real component.
    pub variance: f64,
    /// B gains `weight_re·x + weight_im·y` from the components (x, y).
    pub weight_re: f64,
    pub weight_im: f64,
    pub self_conjugate: bool,
}

/// H_zz(q)·moment/(La) for the probe geometry.
fn field_coupling(q: f64, geom: &GeometryConfig, lattice: &LatticeSpec) -> f64 {
    let d = geom.layer_distances().next().unwrap_or(geom.d);
    let hzz = -(-q * d).exp() * q / (2.0 * geom.a * geom.a);
    geom.moment * hzz / (lattice.size as f64 * lattice.a)
}

pub(crate) fn mode_dynamics(model: &SampleModel, geom: &GeometryConfig, lattice: &LatticeSpec) -> Result<Vec<ModeDynamics>> {
    check_model(model)?;
    geom.validate()?;
    lattice.validate()?;
    if geom.layer_distances().count() != 1 {
        return Err(Error::Usage("the Langevin oracle simulates a single layer".into()));
    }
    let t = model.temperature();
    let r0 = [lattice.probe[0] as f64 * lattice.a, lattice.probe[1] as f64 * lattice.a];
    lattice
        .representatives()
        .into_iter()
        .map(|(m, self_conjugate)| {
            let q = m.magnitude();
            let rate = model.relaxation_rate(q)?;
            let tchi = t * chi(model, q, 0.0)?.re;
            let h = field_coupling(q, geom, lattice);
            let (s, c) = (m.q[0] * r0[0] + m.q[1] * r0[1]).sin_cos();
            Ok(if self_conjugate {
                ModeDynamics { rate, variance: tchi, weight_re: h * c, weight_im: 0.0, self_conjugate }
            } else {
                // c_q = x + iy with E x² = E y² = Tχ/2; the ±q pair adds 2 Re(H c_q e^{iq·r}).
                ModeDynamics { rate, variance: 0.5 * tchi, weight_re: 2.0 * h * c, weight_im: -2.0 * h * s, self_conjugate }
            })
        })
        .collect()
}

fn check_model(model: &SampleModel) -> Result<()> {
    model.validate()?;
    match model {
        SampleModel::ModelA { .. } | SampleModel::ModelB { .. } => Ok(()),
        _ => Err(Error::Usage(format!("the Langevin oracle covers Model A and Model B only, got {}", model.name()))),
    }
}

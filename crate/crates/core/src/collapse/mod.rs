//! Scaling collapse: fit critical exponents and the critical point by
//! demanding that decoherence data taken at different distances, times and
//! temperatures fall on one master surface.
//!
//! Classical data are collapsed as `y = φ² d^{2+η−z}/(Tτ)` against
//! `(τ/d^z, d/ξ)` with `ξ = ξ₀|T − T_c|^{−ν}`; quantum data as
//! `y = φ²/T^{(2+η−z)/z}` against `(Δτ, Δd^{1/z}, Δ/T)` with
//! `Δ = Δ₀|λ − λ_c|^{zν}`. All fits work in logarithms.

mod fit;
mod quality;
mod simplex;
mod tc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fit::{classical_collapse, quantum_collapse, scaled_points};
pub use quality::{collapse_quality, grouped_quality, ScaledPoint, MIN_POINTS};
pub use tc::{tc_locate, TcEstimate};

/// One measured (or computed) phase variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub d: f64,
    pub tau: f64,
    pub temperature: f64,
    pub lambda: Option<f64>,
    pub phi_sq: f64,
    pub err: f64,
}

/// Axes of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    D,
    Tau,
    Temperature,
    Lambda,
}

impl Axis {
    fn get(self, r: &SweepRecord) -> Option<f64> {
        match self {
            Axis::D => Some(r.d),
            Axis::Tau => Some(r.tau),
            Axis::Temperature => Some(r.temperature),
            Axis::Lambda => r.lambda,
        }
    }
}

/// Validated set of sweep records. Records that differ only along the
/// fastest swept axis (τ if swept, otherwise d) form one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    records: Vec<SweepRecord>,
    curves: Vec<usize>,
}

impl SweepGrid {
    pub fn new(records: Vec<SweepRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Validation("sweep grid is empty".into()));
        }
        let with_lambda = records[0].lambda.is_some();
        for (i, r) in records.iter().enumerate() {
            if r.lambda.is_some() != with_lambda {
                return Err(Error::Validation(format!("record {i}: lambda must be given for all records or none")));
            }
            let vals = [r.d, r.tau, r.temperature, r.phi_sq, r.lambda.unwrap_or(1.0)];
            if vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Validation(format!("record {i}: d, tau, T, lambda and phi_sq must be positive and finite")));
            }
            if !(r.err.is_finite() && r.err >= 0.0) {
                return Err(Error::Validation(format!("record {i}: uncertainty must be non-negative")));
            }
        }
        let mut grid = Self { records, curves: Vec::new() };
        for axis in [Axis::D, Axis::Tau, Axis::Temperature, Axis::Lambda] {
            let n = grid.distinct(axis).len();
            if n == 2 {
                return Err(Error::Validation(format!("swept axis {axis:?} needs at least 3 distinct values, got 2")));
            }
        }
        let along = if grid.is_swept(Axis::Tau) { Axis::Tau } else { Axis::D };
        let mut keys: Vec<[u64; 4]> = Vec::new();
        grid.curves = grid
            .records
            .iter()
            .map(|r| {
                let mut key = [r.d.to_bits(), r.tau.to_bits(), r.temperature.to_bits(), r.lambda.unwrap_or(0.0).to_bits()];
                key[if along == Axis::Tau { 1 } else { 0 }] = 0;
                match keys.iter().position(|k| *k == key) {
                    Some(p) => p,
                    None => {
                        keys.push(key);
                        keys.len() - 1
                    }
                }
            })
            .collect();
        Ok(grid)
    }

    pub fn records(&self) -> &[SweepRecord] {
        &self.records
    }

    pub fn has_lambda(&self) -> bool {
        self.records[0].lambda.is_some()
    }

    /// Sorted distinct values along an axis.
    pub fn distinct(&self, axis: Axis) -> Vec<f64> {
        let mut v: Vec<f64> = self.records.iter().filter_map(|r| axis.get(r)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn is_swept(&self, axis: Axis) -> bool {
        self.distinct(axis).len() >= 3
    }

    fn span(&self, axis: Axis) -> f64 {
        let v = self.distinct(axis);
        match (v.first(), v.last()) {
            (Some(a), Some(b)) => b / a,
            _ => 1.0,
        }
    }
}

/// Closed search interval; `lo == hi` pins the parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn pinned(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_pinned(&self) -> bool {
        self.lo == self.hi
    }
}

/// Search box for (ν, η, z, critical point, amplitude). The amplitude is ξ₀
/// for classical fits and Δ₀ for quantum fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseBounds {
    pub nu: Interval,
    pub eta: Interval,
    pub z: Interval,
    pub critical: Interval,
    pub amplitude: Interval,
}

impl CollapseBounds {
    /// Broad exponent ranges, T_c anywhere inside the sampled temperatures
    /// and ξ₀ pinned to 1.
    pub fn classical(grid: &SweepGrid) -> Self {
        let t = grid.distinct(Axis::Temperature);
        Self {
            nu: Interval::new(0.2, 2.0),
            eta: Interval::new(-0.5, 1.0),
            z: Interval::new(1.0, 5.0),
            critical: Interval::new(t[0], t[t.len() - 1]),
            amplitude: Interval::pinned(1.0),
        }
    }

    /// Broad exponent ranges, λ_c anywhere inside the sampled couplings and
    /// Δ₀ pinned to 1.
    pub fn quantum(grid: &SweepGrid) -> Self {
        let l = grid.distinct(Axis::Lambda);
        let (lo, hi) = if l.is_empty() { (0.0, 1.0) } else { (l[0], l[l.len() - 1]) };
        Self {
            nu: Interval::new(0.2, 2.0),
            eta: Interval::new(-0.5, 1.0),
            z: Interval::new(0.5, 3.0),
            critical: Interval::new(lo, hi),
            amplitude: Interval::pinned(1.0),
        }
    }

    pub fn with_critical(mut self, critical: Interval) -> Self {
        self.critical = critical;
        self
    }

    pub(crate) fn as_array(&self) -> [Interval; 5] {
        [self.nu, self.eta, self.z, self.critical, self.amplitude]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, iv) in PARAM_NAMES.iter().zip(self.as_array()) {
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi) {
                return Err(Error::Validation(format!("bounds for {name} must be finite with lo <= hi")));
            }
        }
        if self.nu.lo < 0.0 || self.z.lo <= 0.0 || self.amplitude.lo <= 0.0 {
            return Err(Error::Validation("nu must be non-negative, z and the amplitude positive".into()));
        }
        Ok(())
    }
}

pub(crate) const PARAM_NAMES: [&str; 5] = ["nu", "eta", "z", "critical", "amplitude"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollapseMode {
    Classical,
    Quantum,
}

/// Time variable of the classical collapse: `τ/d^z` or `τ/ξ^z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Grouping {
    #[default]
    DistanceTime,
    CorrelationTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseOptions {
    pub seed: u64,
    /// Multi-start count.
    pub starts: usize,
    /// Bootstrap replicas for the covariance; 0 skips it.
    pub bootstrap: usize,
    /// Evaluation budget of each simplex descent.
    pub max_evaluations: usize,
    /// Neighbourhood size of the quality function.
    pub neighbours: Option<usize>,
    pub grouping: Grouping,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self { seed: 0, starts: 8, bootstrap: 16, max_evaluations: 2000, neighbours: None, grouping: Grouping::DistanceTime }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub mode: CollapseMode,
    pub nu: f64,
    pub eta: f64,
    pub z: f64,
    /// T_c or λ_c.
    pub critical: f64,
    /// ξ₀ or Δ₀.
    pub amplitude: f64,
    pub residual: f64,
    /// Bootstrap covariance in the order (ν, η, z, critical, amplitude);
    /// NaN when fewer than two replicas succeeded.
    pub covariance: [[f64; 5]; 5],
    pub bootstrap_replicas: usize,
    pub converged: bool,
    /// Free parameters that ended on a bound.
    pub clamped: Vec<String>,
    /// Free parameters the residual does not respond to.
    pub degenerate: Vec<String>,
    pub evaluations: usize,
}

impl CollapseResult {
    pub fn params(&self) -> [f64; 5] {
        [self.nu, self.eta, self.z, self.critical, self.amplitude]
    }

    pub fn stderr(&self) -> [f64; 5] {
        std::array::from_fn(|i| self.covariance[i][i].sqrt())
    }

    /// Names of the five parameters for this mode.
    pub fn names(&self) -> [&'static str; 5] {
        match self.mode {
            CollapseMode::Classical => ["nu", "eta", "z", "T_c", "xi0"],
            CollapseMode::Quantum => ["nu", "eta", "z", "lambda_c", "delta0"],
        }
    }
}

//! Closed-form asymptotic regimes of ⟨φ²⟩, regime classification, and the
//! exponents of the higher cumulants.
//!
//! Every cell carries unit prefactors: the regimes are accurate in their
//! powers of τ, d, ξ and T, not in order-one constants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::structure_factors::{o3_transport, CorrelationLength, O3Side, SampleModel};

/// Margin below which a configuration is reported as a crossover.
pub const CROSSOVER_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeRegime {
    /// ω₀τ ≪ 1.
    Static,
    /// ω₀τ ≫ 1.
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthRegime {
    /// d ≪ ξ, including the critical point.
    NearField,
    /// d ≫ ξ.
    FarField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub time_regime: TimeRegime,
    pub length_regime: LengthRegime,
    /// ω₀τ.
    pub omega0_tau: f64,
    /// d/ξ; zero at the critical point.
    pub d_over_xi: f64,
    /// Set when either margin is within a factor of ten of one.
    pub warning: Option<String>,
}

impl RegimeLabel {
    /// Label with explicit regimes, for evaluating a chosen cell.
    pub fn new(time_regime: TimeRegime, length_regime: LengthRegime) -> Self {
        let omega0_tau = match time_regime {
            TimeRegime::Static => 0.0,
            TimeRegime::Dynamic => f64::INFINITY,
        };
        let d_over_xi = match length_regime {
            LengthRegime::NearField => 0.0,
            LengthRegime::FarField => f64::INFINITY,
        };
        Self { time_regime, length_regime, omega0_tau, d_over_xi, warning: None }
    }
}

fn margin(x: f64) -> f64 {
    if x == 0.0 || x.is_infinite() {
        f64::INFINITY
    } else {
        x.max(1.0 / x)
    }
}

/// Places a configuration in the (time, length) regime grid using the
/// model's characteristic rate at distance d.
pub fn classify(model: &SampleModel, tau: f64, d: f64) -> Result<RegimeLabel> {
    model.validate()?;
    ensure_positive("tau", tau)?;
    ensure_positive("d", d)?;
    let omega0_tau = model.characteristic_rate(d)? * tau;
    let xi = match model {
        SampleModel::ModelA { xi, .. } | SampleModel::ModelB { xi, .. } => xi.value(),
        SampleModel::TfimQc { c, temperature, z, .. } => c / temperature.powf(1.0 / z),
        SampleModel::DiffusiveO3 { .. } | SampleModel::O3Regime { .. } => 0.0,
    };
    let d_over_xi = if xi.is_infinite() {
        0.0
    } else if xi == 0.0 {
        f64::INFINITY
    } else {
        d / xi
    };
    let time_regime = if omega0_tau >= 1.0 { TimeRegime::Dynamic } else { TimeRegime::Static };
    let length_regime = if d_over_xi > 1.0 { LengthRegime::FarField } else { LengthRegime::NearField };
    let mut notes = Vec::new();
    if margin(omega0_tau) < CROSSOVER_MARGIN {
        notes.push(format!("omega0*tau = {omega0_tau:.3} is near the static/dynamic crossover"));
    }
    if margin(d_over_xi) < CROSSOVER_MARGIN {
        notes.push(format!("d/xi = {d_over_xi:.3} is near the near/far-field crossover"));
    }
    let warning = (!notes.is_empty()).then(|| notes.join("; "));
    Ok(RegimeLabel { time_regime, length_regime, omega0_tau, d_over_xi, warning })
}

/// κ²(τ²/d²)·min(1, 1/(ω₀τ))·min(1, ξ²/d²).
pub fn heuristic_phi_squared(tau: f64, d: f64, xi: CorrelationLength, omega0: f64, kappa: f64) -> Result<f64> {
    ensure_positive("tau", tau)?;
    ensure_positive("d", d)?;
    ensure_positive("omega0", omega0)?;
    ensure_positive("kappa", kappa)?;
    if let CorrelationLength::Finite(x) = xi {
        ensure_positive("xi", x)?;
    }
    let time = (1.0 / (omega0 * tau)).min(1.0);
    let length = (xi.value().powi(2) / (d * d)).min(1.0);
    Ok(kappa * kappa * tau * tau / (d * d) * time * length)
}

/// The classical Table-I cell for `regime`. Model A near field uses
/// `Tτ/(Γ₀J²)·ln(Γ₀Jτ/d²)`, far field `Tτξ⁴/(Γ₀J²d⁴)`; Model B near field
/// `Tτ^{3/2}/(√σ_s J^{3/2})`, far field `Tτξ⁴/(σ_s J²d²)`. The static
/// cells are `Tτ²/(Jd²)` and `Tτ²ξ²/(Jd⁴)` for both models.
pub fn table1_classical(model: &SampleModel, regime: &RegimeLabel, tau: f64, d: f64) -> Result<f64> {
    model.validate()?;
    ensure_positive("tau", tau)?;
    ensure_positive("d", d)?;
    let (j, xi, t) = match *model {
        SampleModel::ModelA { j, xi, temperature, .. } | SampleModel::ModelB { j, xi, temperature, .. } => (j, xi, temperature),
        _ => return Err(Error::Usage(format!("table1_classical needs Model A or Model B, got {}", model.name()))),
    };
    let far = regime.length_regime == LengthRegime::FarField;
    if far && xi.is_critical() {
        return Err(Error::Usage("the far-field cells need a finite correlation length".into()));
    }
    let x = xi.value();
    Ok(match (regime.time_regime, regime.length_regime, model) {
        (TimeRegime::Static, LengthRegime::NearField, _) => t * tau * tau / (j * d * d),
        (TimeRegime::Static, LengthRegime::FarField, _) => t * tau * tau * x * x / (j * d.powi(4)),
        (TimeRegime::Dynamic, LengthRegime::NearField, &SampleModel::ModelA { gamma0, .. }) => {
            t * tau / (gamma0 * j * j) * (gamma0 * j * tau / (d * d)).ln()
        }
        (TimeRegime::Dynamic, LengthRegime::FarField, &SampleModel::ModelA { gamma0, .. }) => {
            t * tau * x.powi(4) / (gamma0 * j * j * d.powi(4))
        }
        (TimeRegime::Dynamic, LengthRegime::NearField, &SampleModel::ModelB { sigma_s, .. }) => {
            t * tau.powf(1.5) / (sigma_s.sqrt() * j.powf(1.5))
        }
        (TimeRegime::Dynamic, LengthRegime::FarField, &SampleModel::ModelB { sigma_s, .. }) => {
            t * tau * x.powi(4) / (sigma_s * j * j * d * d)
        }
        _ => unreachable!(),
    })
}

/// A quantum Table-I cell with the regime-validity note it was computed under.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCell {
    pub value: f64,
    pub warning: Option<String>,
}

/// The quantum Table-I cell. Dynamic cells: O(3) critical `τT³/(d²c⁴)`,
/// ordered `(τT³/(d²c⁴))(ρ_s/T)^{3/2}e^{−2πρ_s/T}`, paramagnet
/// `(τT³/(d²c⁴))(Δ/T)²e^{−2Δ/T}/ln²(Δ/T)`, Ising `τT^{(2+η)/z}/c⁴·ln(c/(dT^{1/z}))`.
/// Static O(3) cells are `Tτ²χ_u/d⁴` with unit-prefactor χ_u; the Ising
/// static cell is not defined.
pub fn table1_quantum(model: &SampleModel, time: TimeRegime, tau: f64, d: f64) -> Result<QuantumCell> {
    model.validate()?;
    ensure_positive("tau", tau)?;
    ensure_positive("d", d)?;
    match *model {
        SampleModel::O3Regime { c, temperature: t, delta, side } => {
            let warning = o3_transport(model)?.warning;
            let c2 = c * c;
            let r = delta / t;
            let value = match (time, side) {
                (TimeRegime::Dynamic, O3Side::Critical) => tau * t.powi(3) / (d * d * c2 * c2),
                (TimeRegime::Dynamic, O3Side::Ordered) => tau * t.powi(3) / (d * d * c2 * c2) * r.powf(1.5) * (-2.0 * PI * r).exp(),
                (TimeRegime::Dynamic, O3Side::Paramagnet) => {
                    tau * t.powi(3) / (d * d * c2 * c2) * r * r * (-2.0 * r).exp() / r.ln().powi(2)
                }
                (TimeRegime::Static, side) => {
                    let phi_u = match side {
                        O3Side::Critical => 1.0,
                        O3Side::Ordered => r,
                        O3Side::Paramagnet => r * (-r).exp(),
                    };
                    t * t * tau * tau * phi_u / (c2 * d.powi(4))
                }
            };
            if !value.is_finite() {
                return Err(Error::Domain(format!("cell is singular at delta/T = {r}")));
            }
            Ok(QuantumCell { value, warning })
        }
        SampleModel::TfimQc { c, temperature: t, z, eta } => {
            if time == TimeRegime::Static {
                return Err(Error::Usage("no static cell for the Ising quantum-critical form".into()));
            }
            let xi = c / t.powf(1.0 / z);
            let warning = (d >= xi).then(|| format!("cell assumes d << xi = {xi:.4e}; here d = {d:.4e}"));
            let value = tau * t.powf((2.0 + eta) / z) / (c2(c) * c2(c)) * (xi / d).ln();
            Ok(QuantumCell { value, warning })
        }
        _ => Err(Error::Usage(format!("table1_quantum needs an O3 or Ising quantum model, got {}", model.name()))),
    }
}

fn c2(c: f64) -> f64 {
    c * c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpmgBranch {
    /// ω₀ ≥ ω_p: the same information as Ramsey.
    SlowPulses,
    /// ω₀ < ω_p: suppressed by (πω₀/2ω_p)².
    FastPulses,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpmgRegime {
    pub value: f64,
    pub branch: CpmgBranch,
}

/// `τ/(ω₀d²)·min(1, ξ²/d²)`, times `(πω₀/(2ω_p))²` when ω₀ < ω_p.
pub fn cpmg_regimes(omega0: f64, omega_p: f64, tau: f64, d: f64, xi: CorrelationLength) -> Result<CpmgRegime> {
    ensure_positive("omega0", omega0)?;
    ensure_positive("omega_p", omega_p)?;
    ensure_positive("tau", tau)?;
    ensure_positive("d", d)?;
    if let CorrelationLength::Finite(x) = xi {
        ensure_positive("xi", x)?;
    }
    let base = tau / (omega0 * d * d) * (xi.value().powi(2) / (d * d)).min(1.0);
    if omega0 >= omega_p {
        Ok(CpmgRegime { value: base, branch: CpmgBranch::SlowPulses })
    } else {
        let s = PI * omega0 / (2.0 * omega_p);
        Ok(CpmgRegime { value: base * s * s, branch: CpmgBranch::FastPulses })
    }
}

/// Cumulant order k with the critical exponents of the transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonGaussianOrder {
    pub k: u32,
    pub eta: f64,
    pub z: f64,
}

impl NonGaussianOrder {
    /// Δ̄ = (z + η)/2.
    pub fn scaling_dimension(&self) -> f64 {
        0.5 * (self.z + self.eta)
    }

    /// D = 2 + z.
    pub fn spacetime_dimension(&self) -> f64 {
        2.0 + self.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonGaussianExponents {
    /// The k-th cumulant falls off as d^{−d_power} at criticality.
    pub d_power: f64,
    /// and grows as T^{t_power} in the quantum-critical fan.
    pub t_power: f64,
    /// Far from criticality it falls off as d^{−far_field_power}.
    pub far_field_power: f64,
}

pub fn nongaussian_exponents(order: NonGaussianOrder) -> Result<NonGaussianExponents> {
    if order.k < 2 {
        return Err(Error::Domain(format!("cumulant order must be at least 2, got {}", order.k)));
    }
    ensure_positive("z", order.z)?;
    if !order.eta.is_finite() {
        return Err(Error::Domain("eta must be finite".into()));
    }
    let k = order.k as f64;
    Ok(NonGaussianExponents {
        d_power: 1.0 + k * order.scaling_dimension(),
        t_power: k * (2.0 + order.eta - order.z) / (2.0 * order.z),
        far_field_power: 3.0 * k - 2.0,
    })
}

//! SI-unit echo-time estimate for a layered magnet above its transition.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Vacuum permeability, T·m/A.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Elementary charge, C (to convert eV).
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;

/// Material and probe constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Exchange energy, J.
    pub j: f64,
    /// Lattice constant, m.
    pub a: f64,
    /// Spin magnitude.
    pub s: f64,
    /// Sample g-factor.
    pub g_s: f64,
    /// Probe g-factor.
    pub g_probe: f64,
}

impl MaterialParams {
    /// Monolayer CrI₃: J = 2.2 meV, a = 0.687 nm, S = 3/2, g = 2.
    pub fn cri3() -> Self {
        Self { j: 2.2e-3 * ELECTRON_VOLT, a: 0.687e-9, s: 1.5, g_s: 2.0, g_probe: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("J", self.j)?;
        ensure_positive("a", self.a)?;
        ensure_positive("S", self.s)?;
        ensure_positive("g_s", self.g_s)?;
        ensure_positive("g_probe", self.g_probe)
    }
}

/// Echo time with the factors that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct T2Report {
    /// Seconds.
    pub t2: f64,
    /// 1/T₂ in s⁻¹.
    pub rate: f64,
    /// (γ/2ħ)², T⁻² s⁻².
    pub coupling_sq: f64,
    /// (g_s μ_B μ₀ S)²/(16π a⁴ d²), T².
    pub field_sq: f64,
    /// ħ k_B T ξ⁴/(J² a⁴), s.
    pub correlation_time: f64,
    pub formula: String,
}

/// Far-field Model A echo time:
/// `1/T₂ = 2 (γ/2ħ)² (g_s μ_B μ₀ S)²/(16π a⁴ d²) · ħ k_B T ξ⁴/(J² a⁴)` with
/// γ = g_probe μ_B. Temperature in K, lengths in m.
pub fn cri3_t2_estimate(material: &MaterialParams, temperature: f64, d: f64, xi: f64) -> Result<T2Report> {
    material.validate()?;
    ensure_positive("temperature", temperature)?;
    ensure_positive("d", d)?;
    ensure_positive("xi", xi)?;
    let gamma = material.g_probe * MU_B;
    let coupling_sq = (gamma / (2.0 * HBAR)).powi(2);
    let moment = material.g_s * MU_B * MU_0 * material.s;
    let a4 = material.a.powi(4);
    let field_sq = moment * moment / (16.0 * std::f64::consts::PI * a4 * d * d);
    let correlation_time = HBAR * K_B * temperature * xi.powi(4) / (material.j * material.j * a4);
    let rate = 2.0 * coupling_sq * field_sq * correlation_time;
    Ok(T2Report {
        t2: 1.0 / rate,
        rate,
        coupling_sq,
        field_sq,
        correlation_time,
        formula: "1/T2 = 2 (gamma/2 hbar)^2 (g_s mu_B mu_0 S)^2/(16 pi a^4 d^2) * hbar k_B T xi^4/(J^2 a^4), gamma = g_probe mu_B"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cri3_headline() {
        let m = MaterialParams::cri3();
        let r = cri3_t2_estimate(&m, 60.0, 10e-9, 2.0 * m.a).unwrap();
        // Independent evaluation of the same expression term by term.
        let g = 2.0 * 9.274_010_078_3e-24 / (2.0 * 1.054_571_817e-34);
        let m2 = (2.0 * 9.274_010_078_3e-24 * 1.256_637_062_12e-6 * 1.5f64).powi(2);
        let a: f64 = 0.687e-9;
        let field = m2 / (16.0 * std::f64::consts::PI * a.powi(4) * 1e-16);
        let j = 2.2e-3 * 1.602_176_634e-19;
        let tc = 1.054_571_817e-34 * 1.380_649e-23 * 60.0 * 16.0 / (j * j);
        let expected = 1.0 / (2.0 * g * g * field * tc);
        assert!((r.t2 / expected - 1.0).abs() < 1e-12);
        assert!(r.t2 > 4e-6 && r.t2 < 6e-6, "{}", r.t2);
    }

    #[test]
    fn scalings() {
        let m = MaterialParams::cri3();
        let base = cri3_t2_estimate(&m, 60.0, 10e-9, 2.0 * m.a).unwrap().t2;
        let wide = cri3_t2_estimate(&m, 60.0, 10e-9, 4.0 * m.a).unwrap().t2;
        let far = cri3_t2_estimate(&m, 60.0, 20e-9, 2.0 * m.a).unwrap().t2;
        assert!((base / wide - 16.0).abs() < 1e-9);
        assert!((far / base - 4.0).abs() < 1e-9);
        assert!(cri3_t2_estimate(&m, -1.0, 1e-9, 1e-9).is_err());
    }
}

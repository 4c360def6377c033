//! JSON run configuration.

use std::path::{Path, PathBuf};

use critspec::collapse::{CollapseBounds, CollapseMode, Grouping, Interval};
use critspec::filters::{GeometryConfig, PulseSequence};
use critspec::noise::materials::{MaterialParams, ELECTRON_VOLT};
use critspec::oracle::LatticeSpec;
use critspec::structure_factors::{CorrelationLength, O3Side, SampleModel};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<SampleModel>,
    pub geometry: Option<GeometryConfig>,
    pub sequence: Option<SequenceSpec>,
    #[serde(default)]
    pub sweep: SweepSpec,
    /// Frequencies for `spectrum`.
    pub omega: Option<AxisSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub qubit: QubitSpec,
    /// How ξ (or the gap) follows a swept T (or λ).
    pub critical: Option<CriticalSpec>,
    pub collapse: Option<CollapseSpec>,
    pub oracle: Option<OracleSpec>,
    pub estimate: Option<EstimateSpec>,
}

/// Either an explicit list or `{"log": [lo, hi], "n": k}` /
/// `{"linear": [lo, hi], "n": k}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Values(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub log: Option<[f64; 2]>,
    pub linear: Option<[f64; 2]>,
    pub n: usize,
}

impl AxisSpec {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            AxisSpec::Values(v) => v.clone(),
            AxisSpec::Range(r) => {
                if r.n == 0 {
                    return Err(CliError::Config(format!("axis {name}: n must be positive")));
                }
                let step = |i: usize| if r.n == 1 { 0.0 } else { i as f64 / (r.n - 1) as f64 };
                match (r.log, r.linear) {
                    (Some([lo, hi]), None) => {
                        if !(lo > 0.0 && hi > 0.0) {
                            return Err(CliError::Config(format!("axis {name}: log range needs positive ends")));
                        }
                        let (a, b) = (lo.log10(), hi.log10());
                        (0..r.n).map(|i| 10f64.powf(a + (b - a) * step(i))).collect()
                    }
                    (None, Some([lo, hi])) => (0..r.n).map(|i| lo + (hi - lo) * step(i)).collect(),
                    _ => return Err(CliError::Config(format!("axis {name}: give exactly one of log or linear"))),
                }
            }
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("axis {name} is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("axis {name} has a non-finite value")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKindSpec {
    Ramsey,
    Hahn,
    Cpmg,
    Custom,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub kind: SequenceKindSpec,
    pub pulses: Option<u32>,
    /// Switch times as fractions of τ, for custom sequences.
    pub switch_fractions: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub kappa: f64,
}

fn one() -> f64 {
    1.0
}

impl SequenceSpec {
    pub fn at(&self, tau: f64) -> Result<PulseSequence, CliError> {
        let seq = match self.kind {
            SequenceKindSpec::Ramsey => PulseSequence::ramsey(tau),
            SequenceKindSpec::Hahn => PulseSequence::hahn(tau),
            SequenceKindSpec::Cpmg => {
                let n = self.pulses.ok_or_else(|| CliError::Config("cpmg sequence needs `pulses`".into()))?;
                PulseSequence::cpmg(n, tau)
            }
            SequenceKindSpec::Custom => {
                let f = self.switch_fractions.as_ref().ok_or_else(|| CliError::Config("custom sequence needs `switch_fractions`".into()))?;
                PulseSequence::custom(f.iter().map(|x| x * tau).collect(), tau)
            }
        }
        .with_kappa(self.kappa);
        seq.validate().map_err(|e| CliError::Config(format!("sequence: {e}")))?;
        Ok(seq)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub d: Option<AxisSpec>,
    pub tau: Option<AxisSpec>,
    pub temperature: Option<AxisSpec>,
    pub lambda: Option<AxisSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol_q")]
    pub q: f64,
    #[serde(default = "default_tol_omega")]
    pub omega: f64,
}

fn default_tol_q() -> f64 {
    critspec::noise::DEFAULT_TOL_Q
}

fn default_tol_omega() -> f64 {
    critspec::noise::DEFAULT_TOL_OMEGA
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { q: default_tol_q(), omega: default_tol_omega() }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSpec {
    /// Depolarisation time; absent means infinite.
    pub t1: Option<f64>,
}

/// Classical: ξ = amplitude·|T − point|^{−ν}. Quantum (O(3) rotor):
/// δ = amplitude·|λ − point|^{zν}, paramagnetic above the point.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalSpec {
    pub point: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "half")]
    pub nu: f64,
    #[serde(default = "one")]
    pub z: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    Classical,
    Quantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingSpec {
    #[default]
    DistanceTime,
    CorrelationTime,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub nu: Option<[f64; 2]>,
    pub eta: Option<[f64; 2]>,
    pub z: Option<[f64; 2]>,
    pub critical: Option<[f64; 2]>,
    pub amplitude: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseSpec {
    /// Sweep CSV, relative to the config file.
    pub data: PathBuf,
    pub mode: ModeSpec,
    #[serde(default)]
    pub bounds: BoundsSpec,
    pub starts: Option<usize>,
    pub bootstrap: Option<usize>,
    pub max_evaluations: Option<usize>,
    pub neighbours: Option<usize>,
    #[serde(default)]
    pub grouping: GroupingSpec,
    /// Scaled-points CSV; defaults to the report path with `.points.csv`.
    pub points: Option<PathBuf>,
}

impl CollapseSpec {
    pub fn mode(&self) -> CollapseMode {
        match self.mode {
            ModeSpec::Classical => CollapseMode::Classical,
            ModeSpec::Quantum => CollapseMode::Quantum,
        }
    }

    pub fn grouping(&self) -> Grouping {
        match self.grouping {
            GroupingSpec::DistanceTime => Grouping::DistanceTime,
            GroupingSpec::CorrelationTime => Grouping::CorrelationTime,
        }
    }

    /// Defaults for the mode with any configured intervals laid over them.
    pub fn bounds(&self, defaults: CollapseBounds) -> CollapseBounds {
        let pick = |o: Option<[f64; 2]>, d: Interval| o.map(|[lo, hi]| Interval::new(lo, hi)).unwrap_or(d);
        let b = &self.bounds;
        CollapseBounds {
            nu: pick(b.nu, defaults.nu),
            eta: pick(b.eta, defaults.eta),
            z: pick(b.z, defaults.z),
            critical: pick(b.critical, defaults.critical),
            amplitude: pick(b.amplitude, defaults.amplitude),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub lattice: LatticeSpec,
    pub traces: usize,
    pub tau: f64,
    /// Time step; defaults to τ/(100·max(1, N)).
    pub dt: Option<f64>,
    pub mode_cap: Option<usize>,
    /// Long-form trace CSV, relative to the config file.
    pub traces_out: Option<PathBuf>,
}

/// Material constants in laboratory units.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub j_mev: f64,
    pub a_nm: f64,
    pub spin: f64,
    pub g_s: f64,
    pub g_probe: f64,
}

impl MaterialSpec {
    pub fn to_si(self) -> MaterialParams {
        MaterialParams { j: self.j_mev * 1e-3 * ELECTRON_VOLT, a: self.a_nm * 1e-9, s: self.spin, g_s: self.g_s, g_probe: self.g_probe }
    }
}

/// Inline constants or the path of a JSON file holding them.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MaterialSource {
    Inline(MaterialSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    pub material: MaterialSource,
    pub temperature_k: f64,
    pub d_nm: f64,
    pub xi_nm: f64,
}

/// A parsed configuration with the directory relative paths resolve from
/// and its source text for provenance.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
    /// Whitespace-free JSON of the source.
    pub compact: String,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        let config: RunConfig = serde_json::from_value(value.clone()).map_err(|e| CliError::Config(format!("config: {e}")))?;
        let t = config.tolerances;
        if !(t.q > 0.0 && t.omega > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        Ok(Self { config, base: base.to_path_buf(), compact: value.to_string() })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn model(&self) -> Result<&SampleModel, CliError> {
        let m = self.config.model.as_ref().ok_or_else(|| CliError::Config("config needs a `model` block".into()))?;
        m.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
        Ok(m)
    }

    pub fn geometry(&self) -> Result<&GeometryConfig, CliError> {
        let g = self.config.geometry.as_ref().ok_or_else(|| CliError::Config("config needs a `geometry` block".into()))?;
        g.validate().map_err(|e| CliError::Config(format!("geometry: {e}")))?;
        Ok(g)
    }

    pub fn sequence(&self) -> Result<&SequenceSpec, CliError> {
        self.config.sequence.as_ref().ok_or_else(|| CliError::Config("config needs a `sequence` block".into()))
    }

    pub fn taus(&self) -> Result<Vec<f64>, CliError> {
        let t = self.config.sweep.tau.as_ref().ok_or_else(|| CliError::Config("sweep needs a `tau` axis".into()))?;
        let v = t.values("tau")?;
        if v.iter().any(|x| *x <= 0.0) {
            return Err(CliError::Config("tau values must be positive".into()));
        }
        Ok(v)
    }
}

/// The model at one sweep point: temperature T, and coupling λ for
/// quantum sweeps.
pub fn model_at(base: &SampleModel, critical: Option<&CriticalSpec>, t: f64, lambda: Option<f64>) -> Result<SampleModel, CliError> {
    let m = base.with_temperature(t);
    let out = match (lambda, critical, &m) {
        (Some(l), Some(c), SampleModel::O3Regime { c: vel, temperature, .. }) => {
            let gap = c.amplitude * (l - c.point).abs().powf(c.z * c.nu);
            let side = if l > c.point {
                O3Side::Paramagnet
            } else if l < c.point {
                O3Side::Ordered
            } else {
                O3Side::Critical
            };
            SampleModel::O3Regime { c: *vel, temperature: *temperature, delta: gap, side }
        }
        (Some(_), _, _) => return Err(CliError::Config("a lambda axis needs an o3_regime model and a `critical` block".into())),
        (None, Some(c), SampleModel::ModelA { .. } | SampleModel::ModelB { .. }) => {
            let dt = (t - c.point).abs();
            let xi = if dt == 0.0 { CorrelationLength::Critical } else { CorrelationLength::Finite(c.amplitude * dt.powf(-c.nu)) };
            m.with_correlation_length(xi)
        }
        _ => m,
    };
    out.validate().map_err(|e| CliError::Config(format!("model at T = {t}: {e}")))?;
    Ok(out)
}

use critspec::collapse::*;
use critspec::filters::{GeometryConfig, PulseSequence};
use critspec::noise::{t2_extract, NoiseEngine, QubitParams};
use critspec::structure_factors::{CorrelationLength, SampleModel};
use critspec::Error;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (n - 1) as f64)).collect()
}

const TEMPS: [f64; 7] = [0.9, 0.95, 0.98, 1.02, 1.05, 1.1, 1.2];

/// Exact-quadrature Ramsey sweep of Model A or Model B with T_c = 1 and
/// ξ = |T − 1|^{−1/2}.
fn quadrature_grid(model_b: bool) -> SweepGrid {
    let eng = NoiseEngine::default();
    let ds = [1.0, 2.3, 5.3, 12.0, 28.0];
    let taus = if model_b { logspace(0.0, 6.0, 8) } else { logspace(-1.0, 3.0, 8) };
    let mut recs = Vec::new();
    for &d in &ds {
        for &t in &TEMPS {
            let xi = CorrelationLength::Finite((t - 1.0f64).abs().powf(-0.5));
            let m = if model_b { SampleModel::model_b(1.0, 1.0, xi, t) } else { SampleModel::model_a(1.0, 1.0, xi, t) };
            let c = eng.decoherence_curve(&taus, &PulseSequence::ramsey(1.0), &m, &GeometryConfig::new(d)).unwrap();
            for p in c.points {
                recs.push(SweepRecord { d, tau: p.tau, temperature: t, lambda: None, phi_sq: p.phi_sq, err: p.error });
            }
        }
    }
    SweepGrid::new(recs).unwrap()
}

/// Records that obey the classical scaling form exactly with a smooth
/// master function.
fn analytic_records(nu: f64, eta: f64, z: f64, tc: f64, temps: &[f64], ds: &[f64], taus: &[f64]) -> Vec<SweepRecord> {
    let mut recs = Vec::new();
    for &d in ds {
        for &t in temps {
            let xi = (t - tc).abs().powf(-nu);
            for &tau in taus {
                let u = tau / d.powf(z);
                let v = d / xi;
                let f = (1.0 + u).ln() / (1.0 + v * v).powi(2);
                let phi_sq = t * tau * d.powf(z - 2.0 - eta) * f;
                recs.push(SweepRecord { d, tau, temperature: t, lambda: None, phi_sq, err: 0.0 });
            }
        }
    }
    recs
}

fn small_analytic() -> SweepGrid {
    SweepGrid::new(analytic_records(0.5, 0.0, 2.0, 1.0, &TEMPS, &[1.0, 3.0, 10.0, 30.0], &logspace(-1.0, 3.0, 6))).unwrap()
}

fn fast_options(seed: u64) -> CollapseOptions {
    CollapseOptions { seed, bootstrap: 0, ..Default::default() }
}

#[test]
fn shuffled_values_collapse_much_worse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pts: Vec<(f64, f64, f64)> = (0..300)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            (a, b, (a + 0.5 * b).sin())
        })
        .collect();
    let good = collapse_quality(&pts).unwrap();
    let mut ys: Vec<f64> = pts.iter().map(|p| p.2).collect();
    // Deterministic derangement.
    ys.rotate_left(137);
    let bad: Vec<_> = pts.iter().zip(&ys).map(|(p, &y)| (p.0, p.1, y)).collect();
    let bad = collapse_quality(&bad).unwrap();
    assert!(good < 1e-3, "{good}");
    assert!(bad > 100.0 * good, "{bad} vs {good}");
}

#[test]
fn smooth_surface_is_nearly_exact() {
    // A non-polynomial surface on a dense grid: the local quadratic misses
    // only at third order in the spacing.
    let pts: Vec<(f64, f64, f64)> = (0..40)
        .flat_map(|i| (0..40).map(move |j| (i as f64 * 0.025, j as f64 * 0.025)))
        .map(|(a, b)| (a, b, (a + 0.5 * b).sin()))
        .collect();
    assert!(collapse_quality(&pts).unwrap() < 1e-10);
}

#[test]
fn exact_quadrature_model_a_exponents() {
    let g = quadrature_grid(false);
    let r = classical_collapse(&g, &CollapseBounds::classical(&g), &fast_options(1)).unwrap();
    assert!((r.nu - 0.5).abs() < 0.1 && r.eta.abs() < 0.1 && (r.z - 2.0).abs() < 0.1, "{r:?}");
    assert!((r.critical - 1.0).abs() < 0.02, "{r:?}");
    assert!(r.residual >= 0.0);
}

#[test]
fn exact_quadrature_model_b_exponents() {
    let g = quadrature_grid(true);
    let r = classical_collapse(&g, &CollapseBounds::classical(&g), &fast_options(2)).unwrap();
    assert!((r.nu - 0.5).abs() < 0.1 && r.eta.abs() < 0.1 && (r.z - 4.0).abs() < 0.1, "{r:?}");
    assert!((r.critical - 1.0).abs() < 0.02, "{r:?}");
}

#[test]
fn refit_of_regenerated_data_is_self_consistent() {
    let g = small_analytic();
    let first = classical_collapse(&g, &CollapseBounds::classical(&g), &fast_options(3)).unwrap();
    let ds = [1.0, 3.0, 10.0, 30.0];
    let regen = SweepGrid::new(analytic_records(first.nu, first.eta, first.z, first.critical, &TEMPS, &ds, &logspace(-1.0, 3.0, 6))).unwrap();
    let at_generator = grouped_quality(&scaled_points(&regen, CollapseMode::Classical, Grouping::DistanceTime, first.params()), None).unwrap();
    let second = classical_collapse(&regen, &CollapseBounds::classical(&regen), &fast_options(3)).unwrap();
    assert!(second.residual <= 2.0 * at_generator.max(first.residual), "{} vs {at_generator}", second.residual);
    assert!((second.nu - first.nu).abs() < 0.1 && (second.z - first.z).abs() < 0.1);
}

#[test]
fn pinned_critical_temperature_is_honoured() {
    let g = small_analytic();
    let b = CollapseBounds::classical(&g).with_critical(Interval::pinned(1.0));
    let r = classical_collapse(&g, &b, &fast_options(4)).unwrap();
    assert_eq!(r.critical, 1.0);
    assert!((r.nu - 0.5).abs() < 0.05 && (r.z - 2.0).abs() < 0.05, "{r:?}");
}

#[test]
fn scale_factor_leaves_the_argmin_alone() {
    let g = small_analytic();
    let scaled = SweepGrid::new(g.records().iter().map(|r| SweepRecord { phi_sq: 37.5 * r.phi_sq, ..*r }).collect()).unwrap();
    let b = CollapseBounds::classical(&g);
    let a = classical_collapse(&g, &b, &fast_options(5)).unwrap();
    let c = classical_collapse(&scaled, &b, &fast_options(5)).unwrap();
    for (x, y) in a.params().iter().zip(c.params()) {
        assert!((x - y).abs() < 1e-3, "{:?} vs {:?}", a.params(), c.params());
    }
}

#[test]
fn identical_inputs_give_identical_results() {
    let g = small_analytic();
    let b = CollapseBounds::classical(&g).with_critical(Interval::new(0.97, 1.03));
    let opts = CollapseOptions { seed: 9, bootstrap: 6, ..Default::default() };
    let a = classical_collapse(&g, &b, &opts).unwrap();
    let c = classical_collapse(&g, &b, &opts).unwrap();
    assert_eq!(format!("{a:?}"), format!("{c:?}"));
    assert_eq!(a.bootstrap_replicas, 6);
    assert!(a.stderr().iter().all(|s| s.is_finite()));
}

#[test]
fn correlation_time_grouping_agrees() {
    let g = small_analytic();
    let b = CollapseBounds::classical(&g).with_critical(Interval::pinned(1.0));
    let opts = CollapseOptions { grouping: Grouping::CorrelationTime, ..fast_options(6) };
    let r = classical_collapse(&g, &b, &opts).unwrap();
    assert!((r.nu - 0.5).abs() < 0.05 && (r.z - 2.0).abs() < 0.05, "{r:?}");
}

#[test]
fn classical_preconditions() {
    let narrow = SweepGrid::new(analytic_records(0.5, 0.0, 2.0, 1.0, &TEMPS, &[1.0, 1.5, 2.0], &logspace(-1.0, 3.0, 6))).unwrap();
    assert!(matches!(
        classical_collapse(&narrow, &CollapseBounds::classical(&narrow), &fast_options(0)),
        Err(Error::Validation(_))
    ));
    let g = small_analytic();
    let outside = CollapseBounds::classical(&g).with_critical(Interval::new(2.0, 3.0));
    assert!(classical_collapse(&g, &outside, &fast_options(0)).is_err());
    let two = analytic_records(0.5, 0.0, 2.0, 1.0, &[0.9, 1.1], &[1.0, 3.0, 10.0], &[1.0, 10.0, 100.0]);
    assert!(SweepGrid::new(two).is_err());
}

/// O(3) paramagnet forward model with a = c = 1: the critical cell
/// τT³/d² joined to the paramagnetic cell by a harmonic blend, with
/// Δ = (λ − λ_c)^{zν}.
fn o3_records(znu: f64, lambda_c: f64, lambdas: &[f64], temps: &[f64], taus: &[f64], gap_dependent: bool) -> Vec<SweepRecord> {
    use critspec::asymptotics::{table1_quantum, TimeRegime};
    use critspec::structure_factors::O3Side;
    let mut recs = Vec::new();
    for &l in lambdas {
        let delta = (l - lambda_c).powf(znu);
        for &t in temps {
            for &tau in taus {
                let crit = SampleModel::O3Regime { c: 1.0, temperature: t, delta: 0.0, side: O3Side::Critical };
                let crit = table1_quantum(&crit, TimeRegime::Dynamic, tau, 1.0).unwrap().value;
                let phi_sq = if gap_dependent {
                    let pm = SampleModel::O3Regime { c: 1.0, temperature: t, delta, side: O3Side::Paramagnet };
                    let pm = table1_quantum(&pm, TimeRegime::Dynamic, tau, 1.0).map(|c| c.value).unwrap_or(f64::INFINITY);
                    1.0 / (1.0 / crit + 1.0 / pm)
                } else {
                    crit
                };
                recs.push(SweepRecord { d: 1.0, tau, temperature: t, lambda: Some(l), phi_sq, err: 0.0 });
            }
        }
    }
    recs
}

const LAMBDAS: [f64; 5] = [1.1, 1.2, 1.4, 1.7, 2.0];
const QTEMPS: [f64; 4] = [0.05, 0.08, 0.12, 0.2];

fn quantum_bounds(g: &SweepGrid) -> CollapseBounds {
    let mut b = CollapseBounds::quantum(g);
    b.z = Interval::pinned(1.0);
    b.eta = Interval::new(-0.5, 3.0);
    b.critical = Interval::new(0.8, 1.08);
    b
}

#[test]
fn o3_paramagnet_gap_exponent() {
    let g = SweepGrid::new(o3_records(0.7, 1.0, &LAMBDAS, &QTEMPS, &[1.0, 3.0, 10.0], true)).unwrap();
    let r = quantum_collapse(&g, &quantum_bounds(&g), &fast_options(7)).unwrap();
    assert!((r.z * r.nu - 0.7).abs() < 0.15, "{r:?}");
}

#[test]
fn gap_free_data_flag_the_gap_direction() {
    let g = SweepGrid::new(o3_records(0.7, 1.0, &LAMBDAS, &QTEMPS, &[1.0, 3.0, 10.0], false)).unwrap();
    let mut b = quantum_bounds(&g);
    b.nu = Interval::new(0.0, 2.0);
    let r = quantum_collapse(&g, &b, &fast_options(8)).unwrap();
    assert!(r.degenerate.iter().any(|p| p == "critical"), "{r:?}");
}

#[test]
fn out_of_bounds_optimum_is_flagged() {
    let g = SweepGrid::new(o3_records(0.7, 1.0, &LAMBDAS, &QTEMPS, &[1.0, 3.0, 10.0], true)).unwrap();
    let mut b = quantum_bounds(&g);
    b.nu = Interval::new(1.2, 2.0);
    b.critical = Interval::pinned(1.0);
    let r = quantum_collapse(&g, &b, &fast_options(9)).unwrap();
    assert_eq!(r.nu, 1.2);
    assert!(r.clamped.iter().any(|p| p == "nu"), "{r:?}");
    assert!(r.nu >= b.nu.lo && r.nu <= b.nu.hi);
}

#[test]
fn quantum_preconditions() {
    let g = small_analytic();
    assert!(quantum_collapse(&g, &CollapseBounds::quantum(&g), &fast_options(0)).is_err());
}

#[test]
fn model_a_t2_minimum_marks_the_transition() {
    let eng = NoiseEngine::default();
    let geom = GeometryConfig::new(2.0);
    let taus = logspace(-2.0, 7.0, 91);
    let temps: Vec<f64> = (0..9).map(|i| 0.8 + 0.05 * i as f64).collect();
    let qubit = QubitParams { kappa: 0.5, ..Default::default() };
    let seq = PulseSequence::ramsey(1.0).with_kappa(qubit.kappa);
    let t2: Vec<(f64, f64)> = temps
        .iter()
        .map(|&t| {
            let xi = if (t - 1.0f64).abs() < 1e-12 { CorrelationLength::Critical } else { CorrelationLength::Finite((t - 1.0f64).abs().powf(-0.5)) };
            let c = eng.decoherence_curve(&taus, &seq, &SampleModel::model_a(1.0, 1.0, xi, t), &geom).unwrap();
            (t, t2_extract(&c, &qubit).unwrap().t2)
        })
        .collect();
    let e = tc_locate(&t2).unwrap();
    assert!((e.t_c - 1.0).abs() <= 0.05, "{e:?} from {t2:?}");
    assert!((e.half_width - 0.025).abs() < 1e-12);
}

#[test]
fn bootstrap_interval_coverage() {
    // Noisy analytic data with only ν free: the ±1σ bootstrap interval
    // should cover the generating ν in most trials.
    let temps = [0.9, 0.95, 0.98, 1.02, 1.05, 1.1];
    let base = analytic_records(0.5, 0.0, 2.0, 1.0, &temps, &[1.0, 4.0, 16.0], &logspace(-1.0, 3.0, 6));
    let mut covered = 0;
    let trials = 50;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let recs: Vec<SweepRecord> = base
            .iter()
            .map(|r| {
                let n: f64 = StandardNormal.sample(&mut rng);
                SweepRecord { phi_sq: r.phi_sq * (0.03 * n).exp(), err: 0.03 * r.phi_sq, ..*r }
            })
            .collect();
        let g = SweepGrid::new(recs).unwrap();
        let mut b = CollapseBounds::classical(&g);
        b.eta = Interval::pinned(0.0);
        b.z = Interval::pinned(2.0);
        b.critical = Interval::pinned(1.0);
        let opts = CollapseOptions { seed: trial, bootstrap: 100, ..Default::default() };
        let r = classical_collapse(&g, &b, &opts).unwrap();
        let s = r.stderr()[0];
        if (r.nu - 0.5).abs() <= s {
            covered += 1;
        }
    }
    assert!(covered * 10 >= trials * 6, "covered {covered} of {trials}");
}

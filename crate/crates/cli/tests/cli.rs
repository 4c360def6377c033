use std::path::Path;
use std::process::Command;

use critspec_cli::commands::sweep::{sweep_records, sweep_table};
use critspec_cli::table::{Report, Table, TIMESTAMP_PREFIX};
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn critspec(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_critspec"))
        .args(args)
        .current_dir(dir)
        .env_remove("CRITSPEC_THREADS")
        .output()
        .expect("binary runs");
    Run { code: out.status.code().unwrap_or(-1), stdout: String::from_utf8(out.stdout).unwrap(), stderr: String::from_utf8(out.stderr).unwrap() }
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let r = critspec(dir, args);
    assert_eq!(r.code, 0, "{args:?}: {}", r.stderr);
    r.stdout
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn strip_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with(&format!("# {TIMESTAMP_PREFIX}"))).map(|l| format!("{l}\n")).collect()
}

fn column(t: &Table, name: &str) -> Vec<f64> {
    let i = t.column(name).unwrap_or_else(|| panic!("no column {name}"));
    t.rows.iter().map(|r| r[i]).collect()
}

const FAR_A: &str = r#"{"kind": "model_a", "j": 1, "gamma0": 1, "xi": 1, "temperature": 1}"#;

#[test]
fn spectrum_schema_and_determinism() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "model_b", "j": 1, "sigma_s": 1, "xi": "critical", "temperature": 1},
            "geometry": {"d": 1}, "omega": {"log": [1e-14, 1e-11], "n": 4}, "seed": 3}"#,
    );
    let a = ok(dir.path(), &["spectrum", "--config", "c.json"]);
    let b = ok(dir.path(), &["spectrum", "--config", "c.json", "--threads", "2"]);
    assert_eq!(strip_timestamp(&a), strip_timestamp(&b));
    let t = Table::parse(&a).unwrap();
    assert_eq!(t.header, ["omega", "noise_density", "err_estimate"]);
    assert!(t.comments.iter().any(|c| c.starts_with("config: ") && c.contains("model_b")));
    assert!(t.comments.iter().any(|c| c.starts_with("tolerances: ")));
    assert!(t.comments.iter().any(|c| c == "seed: 3"));
    let (w, n) = (column(&t, "omega"), column(&t, "noise_density"));
    let slope = (n[3] / n[0]).ln() / (w[3] / w[0]).ln();
    assert!((slope + 0.5).abs() < 0.01, "slope {slope}");
}

#[test]
fn zero_temperature_spectrum_is_silent() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "model_a", "j": 1, "gamma0": 1, "xi": 2, "temperature": 0}, "geometry": {"d": 1}, "omega": [0, 0.1, 1, 10]}"#,
    );
    let t = Table::parse(&ok(dir.path(), &["spectrum", "--config", "c.json"])).unwrap();
    assert_eq!(t.rows.len(), 4);
    assert!(column(&t, "noise_density").iter().all(|&x| x == 0.0));
}

#[test]
fn decohere_ramsey_is_monotone_and_flags_the_crossing() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "c.json",
        &format!(r#"{{"model": {FAR_A}, "geometry": {{"d": 1}}, "sequence": {{"kind": "ramsey"}}, "sweep": {{"tau": {{"log": [0.1, 1e4], "n": 16}}}}}}"#),
    );
    let t = Table::parse(&ok(dir.path(), &["decohere", "--config", "c.json"])).unwrap();
    assert_eq!(t.header, ["tau", "phi_sq", "coherence", "err", "t2_crossing"]);
    let c = column(&t, "coherence");
    assert!(c.windows(2).all(|w| w[1] < w[0]));
    let phi = column(&t, "phi_sq");
    let flags = column(&t, "t2_crossing");
    assert_eq!(flags.iter().filter(|&&f| f == 1.0).count(), 1);
    let i = flags.iter().position(|&f| f == 1.0).unwrap();
    assert!(2.0 * phi[i] >= 1.0 && 2.0 * phi[i - 1] < 1.0);
    let t2: f64 = t.comments.iter().find_map(|c| c.strip_prefix("t2: ")).unwrap().parse().unwrap();
    let tau = column(&t, "tau");
    assert!(tau[i - 1] < t2 && t2 <= tau[i]);
}

#[test]
fn decohere_t1_overlay_and_cpmg_closed_form() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"model": {FAR_A}, "geometry": {{"d": 3}}, "sequence": {{"kind": "cpmg", "pulses": 32}},
                "sweep": {{"tau": {{"log": [0.1, 1000], "n": 9}}}}, "qubit": {{"t1": 50}}}}"#
        ),
    );
    let t = Table::parse(&ok(dir.path(), &["decohere", "--config", "c.json"])).unwrap();
    let (tau, c, c1) = (column(&t, "tau"), column(&t, "coherence"), column(&t, "coherence_t1"));
    for i in 0..tau.len() {
        let want = c[i] * (-tau[i] / 50.0).exp();
        assert!((c1[i] / want - 1.0).abs() < 1e-12);
    }
    for (phi, cf) in column(&t, "phi_sq").iter().zip(column(&t, "cpmg_closed_form")) {
        assert!((cf / phi - 1.0).abs() < 0.02, "{cf} vs {phi}");
    }
}

fn sweep_config(dir: &Path) {
    write(
        dir,
        "c.json",
        &format!(
            r#"{{"model": {FAR_A}, "geometry": {{"d": 1}}, "sequence": {{"kind": "ramsey"}},
                "critical": {{"point": 1}},
                "sweep": {{"d": [1, 3, 10], "tau": {{"log": [0.1, 100], "n": 4}}, "temperature": [0.8, 1.2]}},
                "collapse": {{"data": "sweep.csv", "mode": "classical", "bounds": {{"critical": [1, 1]}}}}}}"#
        ),
    );
}

#[test]
fn sweep_grid_round_trips() {
    let dir = TempDir::new().unwrap();
    sweep_config(dir.path());
    ok(dir.path(), &["sweep", "--config", "c.json", "--out", "sweep.csv"]);
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let t = Table::parse(&text).unwrap();
    assert_eq!(t.header, ["d", "tau", "T", "phi_sq", "err"]);
    assert_eq!(t.rows.len(), 3 * 4 * 2);
    // d outermost, then T, with τ varying fastest.
    assert_eq!(&t.rows[0][..3], &[1.0, 0.1, 0.8]);
    assert_eq!(&t.rows[4][..3], &[1.0, 0.1, 1.2]);
    assert_eq!(t.rows[8][0], 3.0);
    assert_eq!(t.render(), text);
    let again = sweep_table(t.comments.clone(), &sweep_records(&t).unwrap());
    assert_eq!(again.render(), text);
    let mut restamped = t.clone();
    restamped.restamp();
    assert_eq!(strip_timestamp(&restamped.render()), strip_timestamp(&text));

    ok(dir.path(), &["sweep", "--config", "c.json", "--out", "again.csv", "--threads", "1"]);
    let other = std::fs::read_to_string(dir.path().join("again.csv")).unwrap();
    assert_eq!(strip_timestamp(&other), strip_timestamp(&text));
}

#[test]
fn lambda_sweep_writes_the_lambda_column() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "o3_regime", "c": 1, "temperature": 0.1, "delta": 0, "side": "critical"},
            "geometry": {"d": 1}, "sequence": {"kind": "ramsey"}, "critical": {"point": 1, "nu": 0.7},
            "sweep": {"tau": [10, 100], "temperature": [0.1], "lambda": [0.9, 1.0, 1.1]}}"#,
    );
    let t = Table::parse(&ok(dir.path(), &["sweep", "--config", "c.json"])).unwrap();
    assert_eq!(t.header, ["d", "tau", "T", "lambda", "phi_sq", "err"]);
    assert_eq!(t.rows.len(), 6);
    let recs = sweep_records(&t).unwrap();
    assert_eq!(recs[2].lambda, Some(1.0));
}

#[test]
fn collapse_honours_a_pinned_critical_point() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"model": {FAR_A}, "geometry": {{"d": 1}}, "sequence": {{"kind": "ramsey"}},
                "critical": {{"point": 1}},
                "sweep": {{"d": {{"log": [1, 10], "n": 5}}, "tau": {{"log": [0.1, 1000], "n": 8}}, "temperature": [0.8, 0.9, 0.95, 1.05, 1.1, 1.2, 1.4]}},
                "collapse": {{"data": "sweep.csv", "mode": "classical", "bounds": {{"critical": [1, 1]}}, "bootstrap": 4}}}}"#
        ),
    );
    ok(dir.path(), &["sweep", "--config", "c.json", "--out", "sweep.csv"]);
    ok(dir.path(), &["collapse", "--config", "c.json", "--out", "report.txt", "--seed", "7"]);
    let r = Report::parse(&std::fs::read_to_string(dir.path().join("report.txt")).unwrap());
    assert_eq!(r.get("T_c"), Some("1"));
    assert_eq!(r.get("seed"), Some("7"));
    let z: f64 = r.get("z").unwrap().parse().unwrap();
    assert!((1.9..=2.1).contains(&z), "z = {z}");
    let pts = Table::parse(&std::fs::read_to_string(dir.path().join("report.txt.points.csv")).unwrap()).unwrap();
    assert_eq!(pts.header, ["x0", "x1", "y", "group", "branch"]);
    assert_eq!(pts.rows.len(), 5 * 8 * 7);
}

#[test]
fn malformed_sweep_file_names_the_line() {
    let dir = TempDir::new().unwrap();
    sweep_config(dir.path());
    write(dir.path(), "sweep.csv", "# header\nd,tau,T,phi_sq,err\n1,1,0.8,0.1,0\n1,2,0.8,oops,0\n");
    let r = critspec(dir.path(), &["collapse", "--config", "c.json"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 4"), "{}", r.stderr);
    write(dir.path(), "sweep.csv", "d,tau,T,phi_sq,err\n1,1,0.8,0.1,0\n1,2\n");
    let r = critspec(dir.path(), &["collapse", "--config", "c.json"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 3"), "{}", r.stderr);
}

fn oracle_config(dir: &Path, temperature: f64) {
    write(
        dir,
        "c.json",
        &format!(
            r#"{{"model": {{"kind": "model_a", "j": 1, "gamma0": 1, "xi": 1, "temperature": {temperature}}}, "geometry": {{"d": 3}},
                "sequence": {{"kind": "hahn"}}, "seed": 5,
                "oracle": {{"lattice": {{"size": 16}}, "traces": 300, "tau": 2, "traces_out": "traces.csv"}}}}"#
        ),
    );
}

#[test]
fn oracle_agrees_and_reproduces() {
    let dir = TempDir::new().unwrap();
    oracle_config(dir.path(), 1.0);
    let a = ok(dir.path(), &["oracle", "--config", "c.json"]);
    let traces_a = std::fs::read_to_string(dir.path().join("traces.csv")).unwrap();
    let b = ok(dir.path(), &["oracle", "--config", "c.json", "--threads", "3"]);
    let traces_b = std::fs::read_to_string(dir.path().join("traces.csv")).unwrap();
    assert_eq!(strip_timestamp(&a), strip_timestamp(&b));
    assert_eq!(strip_timestamp(&traces_a), strip_timestamp(&traces_b));
    let r = Report::parse(&a);
    let z: f64 = r.get("z_score").unwrap().parse().unwrap();
    assert!(z.abs() < 3.0, "z = {z}");
    let t = Table::parse(&traces_a).unwrap();
    assert_eq!(t.header, ["trace", "t", "b"]);
    assert_eq!(t.rows.len(), 300 * 101);
    let c = ok(dir.path(), &["oracle", "--config", "c.json", "--seed", "6"]);
    assert_ne!(Report::parse(&c).get("mc_mean"), r.get("mc_mean"));
}

#[test]
fn oracle_at_zero_temperature_reports_zero_variance() {
    let dir = TempDir::new().unwrap();
    oracle_config(dir.path(), 0.0);
    let r = Report::parse(&ok(dir.path(), &["oracle", "--config", "c.json"]));
    for k in ["mc_mean", "mc_stderr", "quadrature", "z_score"] {
        assert_eq!(r.get(k), Some("0"), "{k}");
    }
}

fn estimate(dir: &Path, d_nm: f64) -> f64 {
    write(
        dir,
        "m.json",
        r#"{"j_mev": 2.2, "a_nm": 0.687, "spin": 1.5, "g_s": 2, "g_probe": 2}"#,
    );
    write(
        dir,
        "c.json",
        &format!(r#"{{"estimate": {{"material": "m.json", "temperature_k": 60, "d_nm": {d_nm}, "xi_nm": 1.374}}}}"#),
    );
    let r = Report::parse(&ok(dir, &["estimate-t2", "--config", "c.json"]));
    assert!(r.get("formula").is_some());
    r.get("t2_us").unwrap().parse().unwrap()
}

#[test]
fn estimate_t2_headline_and_distance_scaling() {
    let dir = TempDir::new().unwrap();
    let t2 = estimate(dir.path(), 10.0);
    assert!((4.0..=6.0).contains(&t2), "{t2} us");
    let doubled = estimate(dir.path(), 20.0);
    assert!((doubled / t2 - 4.0).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "m.json", r#"{"j_mev": 2.2, "a_nm": 0.687, "spin": 1.5, "g_s": 2}"#);
    write(dir.path(), "c.json", r#"{"estimate": {"material": "m.json", "temperature_k": 60, "d_nm": 10, "xi_nm": 1.374}}"#);
    let r = critspec(dir.path(), &["estimate-t2", "--config", "c.json"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("g_probe"), "{}", r.stderr);

    write(dir.path(), "c.json", r#"{"model": {"kind": "model_a", "j": 1}}"#);
    assert_eq!(critspec(dir.path(), &["spectrum", "--config", "c.json"]).code, 2);
    write(dir.path(), "c.json", r#"{"unknown": 1}"#);
    assert_eq!(critspec(dir.path(), &["spectrum", "--config", "c.json"]).code, 2);
    write(dir.path(), "c.json", &format!(r#"{{"model": {FAR_A}, "geometry": {{"d": 1}}, "omega": [1], "tolerances": {{"q": -1}}}}"#));
    assert_eq!(critspec(dir.path(), &["spectrum", "--config", "c.json"]).code, 2);

    assert_eq!(critspec(dir.path(), &["spectrum", "--config", "missing.json"]).code, 4);
    write(dir.path(), "c.json", &format!(r#"{{"model": {FAR_A}, "geometry": {{"d": 1}}, "omega": [1]}}"#));
    assert_eq!(critspec(dir.path(), &["spectrum", "--config", "c.json", "--out", "no/such/dir/x.csv"]).code, 4);
    assert_eq!(critspec(dir.path(), &["spectrum", "--config", "c.json"]).code, 0);
    assert_eq!(critspec(dir.path(), &["bogus"]).code, 2);
}

#[test]
fn threads_fall_back_to_the_environment() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "c.json", &format!(r#"{{"model": {FAR_A}, "geometry": {{"d": 1}}, "omega": [1]}}"#));
    let out = Command::new(env!("CARGO_BIN_EXE_critspec"))
        .args(["spectrum", "--config", "c.json"])
        .current_dir(dir.path())
        .env("CRITSPEC_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("threads"));
}

use std::path::{Path, PathBuf};
use std::process::Command;

use locmet::cli::{run, Envelope};
use serde_json::Value;

fn spec(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("specs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

/// Runs the CLI in-process; returns exit code, stdout and stderr.
fn locmet(args: &[&str]) -> (i32, String, String) {
    let argv = std::iter::once("locmet").chain(args.iter().copied());
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(args: &[&str]) -> (i32, Envelope) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let (code, out, _) = locmet(&all);
    let env = Envelope::from_json(&out).unwrap_or_else(|e| panic!("{e}: {out}"));
    assert_eq!(env.get("exit_code"), Some(&Value::from(code)));
    (code, env)
}

fn num(env: &Envelope, key: &str) -> f64 {
    env.get(key)
        .and_then(Value::as_f64)
        .unwrap_or_else(|| panic!("missing {key}"))
}

fn text<'a>(env: &'a Envelope, key: &str) -> &'a str {
    env.get(key)
        .and_then(Value::as_str)
        .unwrap_or_else(|| panic!("missing {key}"))
}

#[test]
fn check_verdicts_and_exit_codes() {
    for (file, verdict, code) in [
        ("skew.conn", "Metric", 0),
        ("scrambled.conn", "Metric", 0),
        ("realeig.conn", "NotMetricEigen", 1),
        ("nonskew.conn", "NotMetricSkew", 1),
        ("torus.conn", "Flat", 2),
    ] {
        let (c, env) = json(&["check", &spec(file)]);
        assert_eq!(c, code, "{file}");
        assert_eq!(text(&env, "verdict"), verdict, "{file}");
        assert_eq!(text(&env, "normalization"), "det S = 1");
        assert_eq!(text(&env, "certification"), "grid-sampled");
    }
}

#[test]
fn levi_civita_of_band_is_metric_with_conformal_factor() {
    let (code, env) = json(&["example", "hyperbolic_band"]);
    assert_eq!(code, 0);
    assert_eq!(text(&env, "verdict"), "Metric");
    assert_eq!(text(&env, "metric.kind"), "conformal");
    // G at the basepoint x = −1 is proportional to diag(1, e^{−2}).
    let ratio = num(&env, "metric.at_basepoint.2.2") / num(&env, "metric.at_basepoint.1.1");
    assert!((ratio - (-2.0f64).exp()).abs() < 1e-12);
    let k = -(1f64.exp() - (-1f64).exp());
    assert!((num(&env, "euler.number") - k).abs() < 1e-8);
}

#[test]
fn text_and_json_agree() {
    let (c1, out, _) = locmet(&["check", &spec("skew.conn")]);
    let (c2, env) = json(&["check", &spec("skew.conn")]);
    assert_eq!(c1, c2);
    assert_eq!(out, env.to_text());
}

#[test]
fn output_is_deterministic() {
    let a = locmet(&["--json", "check", &spec("scrambled.conn")]).1;
    let b = locmet(&["--json", "check", &spec("scrambled.conn")]).1;
    assert_eq!(a, b);
    assert!(!a.contains("wall_clock"));
    let (_, env) = json(&["--timing", "check", &spec("skew.conn")]);
    assert!(num(&env, "wall_clock_seconds") >= 0.0);
}

#[test]
fn global_flags() {
    let (_, env) = json(&[
        "check",
        &spec("skew.conn"),
        "--grid",
        "16",
        "12",
        "--tol",
        "10",
    ]);
    assert_eq!(num(&env, "chart.grid.nx"), 16.0);
    assert_eq!(num(&env, "chart.grid.ny"), 12.0);
    assert_eq!(num(&env, "tolerance.skew"), 1e-7);
    let (code, env) = json(&["check", &spec("skew.conn"), "--basepoint", "-0.5", "0.2"]);
    assert_eq!(code, 0);
    let x = num(&env, "basepoint.x");
    assert!((x + 0.5).abs() <= 2.0 / 63.0, "{x}");
}

#[test]
fn input_errors_exit_3() {
    let bad = std::env::temp_dir().join("locmet-cli-bad.conn");
    std::fs::write(
        &bad,
        "[chart]\nx = 0 .. 1\ny = 0 .. 1\n\n[connection]\ntheta.1.1.dx = x + \n",
    )
    .unwrap();
    let (code, env) = json(&["check", &bad.to_string_lossy()]);
    assert_eq!(code, 3);
    assert!(text(&env, "error.message").contains("line 6"));
    let (code, _) = json(&["check", "/definitely/not/here.conn"]);
    assert_eq!(code, 3);
    let (code, env) = json(&["check", &spec("skew.conn"), "--basepoint", "50", "0"]);
    assert_eq!(code, 3);
    assert_eq!(text(&env, "error.kind"), "precondition");
    let (code, _, err) = locmet(&["check", &spec("skew.conn"), "--grid", "4", "4"]);
    assert_eq!(code, 3, "{err}");
    let (code, _, _) = locmet(&["frobnicate"]);
    assert_eq!(code, 3);
    let (code, _, _) = locmet(&["check", &spec("skew.conn"), "--tol", "-1"]);
    assert_eq!(code, 3);
}

#[test]
fn help_and_version_exit_0() {
    let (code, out, _) = locmet(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("check"));
    let (code, out, _) = locmet(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn metric_dump_covers_grid() {
    let (code, env) = json(&["metric", &spec("skew.conn"), "--grid", "8", "9"]);
    assert_eq!(code, 0);
    let n = env
        .entries()
        .keys()
        .filter(|k| k.starts_with("metric.grid.") && k.ends_with(".g11"))
        .count();
    assert_eq!(n, 72);
    assert!(env.get("metric.grid.0007.0008.g22").is_some());
}

#[test]
fn volume_command() {
    let (code, env) = json(&["volume", &spec("torus.conn")]);
    assert_eq!(code, 2);
    assert!((num(&env, "period_defect.x") - std::f64::consts::TAU).abs() < 1e-9);
    let (code, env) = json(&["volume", &spec("volume.conn")]);
    assert_eq!(code, 0);
    assert_eq!(env.get("closed"), Some(&Value::Bool(true)));
}

#[test]
fn euler_and_compare() {
    let (code, env) = json(&["compare", &spec("compare_a.conn"), &spec("compare_b.conn")]);
    assert_eq!(code, 0, "{:?}", env.get("error.message"));
    assert!(num(&env, "euler.difference") <= 1e-9);
    let (code, env) = json(&[
        "compare",
        &spec("compare_a.conn"),
        &spec("compare_b.conn"),
        "--metric",
        &spec("identity_metric.conn"),
    ]);
    assert_eq!(code, 0);
    assert!(num(&env, "euler.difference") <= 1e-9);
    // A non-skew connection is not compatible with the identity metric.
    let (code, env) = json(&[
        "compare",
        &spec("compare_a.conn"),
        &spec("nonskew.conn"),
        "--metric",
        &spec("identity_metric.conn"),
    ]);
    assert_ne!(code, 0);
    assert!(env.get("error.message").is_some());
}

#[test]
fn tangent_bundle_commands() {
    let (code, env) = json(&["semi-symmetric", &spec("semi_symmetric.conn")]);
    assert_eq!(code, 0);
    assert!(num(&env, "torsion.formula_residual") <= 1e-10);
    assert!(num(&env, "compat_residual") <= 1e-10);
    let (code, env) = json(&["levi-civita", &spec("hyperbolic_band.conn")]);
    assert_eq!(code, 0);
    assert!(num(&env, "compat_residual") <= 1e-12);
    let (code, env) = json(&["torsion", &spec("hyperbolic_band.conn")]);
    assert_eq!(code, 0);
    assert_eq!(num(&env, "torsion.max_abs"), 0.0);
}

#[test]
fn examples_run() {
    let (code, env) = json(&["example", "torus"]);
    assert_eq!(code, 2);
    assert_eq!(env.get("curvature.exactly_zero"), Some(&Value::Bool(true)));
    assert!(num(&env, "transport.relative_error") <= 1e-6);
    let (code, env) = json(&["example", "semi-symmetric"]);
    assert_eq!(code, 0);
    assert!(num(&env, "euler.periodic.difference") <= 1e-6);
    let (code, _) = json(&["example", "klein_bottle"]);
    assert_eq!(code, 3);
}

#[test]
fn binary_matches_in_process_run() {
    let path: PathBuf = spec("nonskew.conn").into();
    let out = Command::new(env!("CARGO_BIN_EXE_locmet"))
        .args(["--json", "check"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let (_, inproc, _) = locmet(&["--json", "check", &path.to_string_lossy()]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), inproc);
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("finished in"));
}

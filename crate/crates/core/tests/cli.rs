use std::f64::consts::PI;
use std::fs;
use std::process::Command;

use arcparam::cli::{self, ClassifyReport, LengthReport, ReparamReport};
use arcparam::sphere::{DomainReport, ExtensionReport, StepKind};
use serde_json::Value;

fn bin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_arcparam"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn in_process(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["arcparam"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn length_examples() {
    let (code, out, _) = bin(&["length", "--curve", "line", "--metric", "spherical", "--domain=-inf,inf"]);
    assert_eq!(code, 0);
    let r: LengthReport = serde_json::from_str(&out).unwrap();
    assert!((r.total_length - PI).abs() < 1e-8);
    assert_eq!(r.domain, [f64::NEG_INFINITY, f64::INFINITY]);

    let (code, out) = in_process(&["length", "--curve", "circle", "--metric", "euclidean", "--domain", "0,6.283185307179586"]);
    assert_eq!(code, 0);
    let r: LengthReport = serde_json::from_str(&out).unwrap();
    assert!((r.total_length - 2.0 * PI).abs() < 1e-12);

    let (code, out) = in_process(&["length", "--curve", "vertical_geodesic", "--metric", "hyperbolic", "--domain", "0,2"]);
    assert_eq!(code, 0);
    let r: LengthReport = serde_json::from_str(&out).unwrap();
    assert!((r.total_length - 2.0).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    // Euclidean length of the whole line diverges
    assert_eq!(in_process(&["length", "--curve", "line", "--domain=-inf,inf"]).0, 3);
    // hyperbolic speed is undefined on the real axis
    assert_eq!(in_process(&["length", "--curve", "line", "--metric", "hyperbolic", "--domain", "0,1"]).0, 2);
    assert_eq!(in_process(&["continue", "--curve", "exp_essential"]).0, 4);
    assert_eq!(in_process(&["length", "--curve", "nope"]).0, 1);
    assert_eq!(in_process(&["length"]).0, 1);
    assert_eq!(in_process(&["length", "--curve", "line", "--tol-quad", "-1"]).0, 1);
    assert_eq!(in_process(&["length", "--curve", "line", "--domain", "2,1"]).0, 1);
    assert_eq!(in_process(&["frobnicate"]).0, 1);
    assert_eq!(in_process(&["--help"]).0, 0);
    let (code, _, err) = bin(&["continue", "--curve", "line", "--metric", "euclidean"]);
    assert_eq!(code, 1);
    assert!(err.contains("spherical"));
}

#[test]
fn not_analytic_report_embeds_diagnostic() {
    let (code, out) = in_process(&["continue", "--curve", "exp_essential"]);
    assert_eq!(code, 4);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["exit_code"], 4);
    assert!(v["error"].as_str().unwrap().contains("infinity"));
}

#[test]
fn reparam_line_spherical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("samples.csv");
    let report = dir.path().join("report.json");
    let (code, out, _) = bin(&[
        "reparam",
        "--curve",
        "line",
        "--metric",
        "spherical",
        "--domain=-1000,1000",
        "--samples",
        "57",
        "--out",
        csv.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let r: ReparamReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r.residual_ok);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,t,re,im"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 57);
    for row in &rows {
        if row[0].abs() <= 1.4 {
            assert!((row[2] - row[0].tan()).abs() <= 1e-6, "{row:?}");
        }
    }
}

#[test]
fn reparam_circle_and_parabola() {
    let (code, out) = in_process(&["reparam", "--curve", "circle", "--samples", "11"]);
    assert_eq!(code, 0);
    let r: ReparamReport = serde_json::from_str(&out).unwrap();
    assert!(r.residual <= 1e-8);
    assert!((r.total_length - 2.0 * PI).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let (code, out) = in_process(&["reparam", "--curve", "parabola", "--domain", "0,1", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r: ReparamReport = serde_json::from_str(&out).unwrap();
    assert!(r.residual <= 1e-8);
    let s: Vec<f64> = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(s.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn circle_t_column_is_shifted_s() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let code = in_process(&["reparam", "--curve", "circle", "--samples", "23", "--out", csv.to_str().unwrap()]).0;
    assert_eq!(code, 0);
    let rows: Vec<Vec<f64>> = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let shift = rows[0][1] - rows[0][0];
    for r in &rows {
        assert!((r[1] - r[0] - shift).abs() < 1e-10);
    }
}

#[test]
fn continue_reports() {
    let (code, out) = in_process(&["continue", "--curve", "line"]);
    assert_eq!(code, 0);
    let r: ExtensionReport = serde_json::from_str(&out).unwrap();
    assert!((r.spherical_domain[0] + PI / 2.0).abs() < 1e-8);
    assert!((r.spherical_domain[1] - 1.5 * PI).abs() < 1e-8);
    assert_eq!(r.steps[0].kind, StepKind::Periodic);

    let (code, out) = in_process(&["continue", "--curve", "line", "--end", "both", "--max-steps", "3"]);
    assert_eq!(code, 0);
    let r: DomainReport = serde_json::from_str(&out).unwrap();
    assert!((r.spherical_domain[0] + 3.5 * PI).abs() < 1e-8);
    assert!((r.spherical_domain[1] - 3.5 * PI).abs() < 1e-8);

    let (code, out) = in_process(&["continue", "--curve", "square", "--end", "both"]);
    assert_eq!(code, 0);
    let r: DomainReport = serde_json::from_str(&out).unwrap();
    assert!(r.left.steps.is_empty() && r.right.steps.is_empty());
    assert_eq!(r.left.classification.name(), "finite_point");
    assert_eq!(r.right.classification.name(), "finite_point");
}

#[test]
fn classify_reports() {
    let (code, out) = in_process(&["classify", "--curve", "line"]);
    assert_eq!(code, 0);
    let r: ClassifyReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.left.classification.name(), "infinity");
    assert_eq!(r.right.classification.name(), "infinity");

    let (_, out) = in_process(&["classify", "--curve", "log_spiral"]);
    let r: ClassifyReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.right.classification.name(), "infinity");
    assert_eq!(r.left.classification.name(), "finite_point");

    let (code, out) = in_process(&["classify", "--curve", "circle", "--domain", "0,inf"]);
    assert_eq!(code, 0);
    let r: ClassifyReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.right.classification.name(), "non_singleton");
}

#[test]
fn curve_spec_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"kind": "catalog", "name": "circle", "params": {"scale": [2.0, 0.0]}, "domain": [0.0, 3.141592653589793]}"#,
    )
    .unwrap();
    let (code, out) = in_process(&["length", "--curve", spec.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r: LengthReport = serde_json::from_str(&out).unwrap();
    assert!((r.total_length - 2.0 * PI).abs() < 1e-12);

    // the parabola t + it² as one polynomial chart
    let charts = dir.path().join("charts.json");
    fs::write(
        &charts,
        r#"{"kind": "charts", "domain": [0.0, 1.0],
            "charts": [{"center": [0.5, 0.0], "coeffs": [[0.5, 0.25], [1.0, 1.0], [0.0, 1.0]], "radius": null}]}"#,
    )
    .unwrap();
    let (code, out) = in_process(&["length", "--charts", charts.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let r: LengthReport = serde_json::from_str(&out).unwrap();
    let exact = (2.0 * 5f64.sqrt() + (2.0 + 5f64.sqrt()).ln()) / 4.0;
    assert!((r.total_length - exact).abs() < 1e-12);

    assert_eq!(
        in_process(&["length", "--curve", "line", "--charts", charts.to_str().unwrap()]).0,
        1
    );
}

#[test]
fn reports_round_trip() {
    for args in [
        vec!["length", "--curve", "parabola"],
        vec!["reparam", "--curve", "parabola", "--samples", "5"],
        vec!["classify", "--curve", "square"],
    ] {
        let (code, out) = in_process(&args);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let again = match args[0] {
            "length" => serde_json::to_value(serde_json::from_value::<LengthReport>(v.clone()).unwrap()),
            "reparam" => serde_json::to_value(serde_json::from_value::<ReparamReport>(v.clone()).unwrap()),
            _ => serde_json::to_value(serde_json::from_value::<ClassifyReport>(v.clone()).unwrap()),
        }
        .unwrap();
        assert_eq!(again, v);
    }
}

#[test]
fn deterministic_output() {
    let a = in_process(&["reparam", "--curve", "parabola", "--metric", "spherical"]).1;
    let b = in_process(&["reparam", "--curve", "parabola", "--metric", "spherical"]).1;
    assert_eq!(a, b);
}

use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;

use super::run;

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn call(args: &[&str]) -> i32 {
    let mut full = vec!["wvsim"];
    full.extend_from_slice(args);
    run(full)
}

fn json_at(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn pair(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

/// Exit code and stderr line for a configuration, via the library entry.
fn failure_for(sub: &str, body: &str) -> (i32, String) {
    use super::{commands, Common, Failure};
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", body);
    let common = Common {
        config: Some(cfg),
        preset: None,
        out: dir.path().join("out"),
        seed: None,
        exact: false,
    };
    let result = match sub {
        "weak-value" => commands::weak_value(&common),
        "sweep-xi" => commands::sweep_xi(&common),
        "wavefunction" => commands::wavefunction(&common),
        "diagram" => commands::diagram(&common),
        "kd" => commands::kd(&common),
        _ => unreachable!(),
    };
    let f: Failure = result.expect_err("configuration should fail");
    (f.code(), f.line())
}

#[test]
fn weak_value_preset_gives_minus_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    assert_eq!(
        call(&[
            "weak-value",
            "--preset",
            "anomalous",
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let doc = json_at(&out.join("report.json"));
    let (re, im) = pair(&doc["report"]["estimate"]);
    assert!((re + 2.0).abs() < 1e-10 && im.abs() < 1e-10);
    assert_eq!(doc["mode"], "exact");
}

#[test]
fn weak_value_error_codes() {
    let (code, line) = failure_for(
        "weak-value",
        r#"{"protocol": {"variant": "modified_weak", "xi": 2}, "boundary": {"preset": "anomalous"}}"#,
    );
    assert_eq!(code, 3);
    assert!(line.starts_with("ERR:3:protocol.xi "), "{line}");

    let (code, line) = failure_for("weak-value", r#"{"protocol": "#);
    assert_eq!(code, 2);
    assert!(line.starts_with("ERR:2:config "), "{line}");

    let (code, line) = failure_for(
        "weak-value",
        r#"{"protocol": {"variant": "modified_weak", "xi": 1}, "boundary": {"preset": "anomalous"}, "noise": 1}"#,
    );
    assert_eq!(code, 2);
    assert!(line.starts_with("ERR:2:noise "), "{line}");

    let (code, line) = failure_for(
        "weak-value",
        r#"{"protocol": {"variant": "modified_weak", "xi": 1},
            "boundary": {"psi_i": [[1, 0], [0, 0]], "psi_f": [[0, 0], [1, 0]]}}"#,
    );
    assert_eq!(code, 4);
    assert!(line.starts_with("ERR:4:boundary "), "{line}");

    let (code, line) = failure_for(
        "weak-value",
        r#"{"protocol": {"variant": "conventional_weak", "xi": -1}, "boundary": {"preset": "anomalous"}}"#,
    );
    assert_eq!(code, 2);
    assert!(line.starts_with("ERR:2:protocol.xi "), "{line}");

    let (code, line) = failure_for(
        "weak-value",
        r#"{"protocol": {"variant": "telepathy"}, "boundary": {"preset": "anomalous"}}"#,
    );
    assert_eq!(code, 2);
    assert!(line.starts_with("ERR:2:protocol.variant "), "{line}");

    let (code, line) = failure_for(
        "weak-value",
        r#"{"protocol": {"variant": "modified_weak", "xi": 1}, "boundary": {"preset": "anomalous"},
            "sampler": {"seed": 1, "shots": {"x": 10, "y": 10}}}"#,
    );
    assert_eq!(code, 2);
    assert!(line.starts_with("ERR:2:sampler.shots.z "), "{line}");
}

#[test]
fn weak_value_shots_and_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"protocol": {"variant": "modified_weak", "xi": 1}, "boundary": {"preset": "anomalous"},
            "sampler": {"seed": 5, "total_shots": 300000, "reps": 4}}"#,
    );
    let run_to = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec![
            "weak-value",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        assert_eq!(call(&args), 0);
        out
    };
    let a = run_to("a", &[]);
    let b = run_to("b", &[]);
    let c = run_to("c", &["--seed", "6"]);
    let d = run_to("d", &["--exact"]);
    let read = |p: &Path, f: &str| std::fs::read(p.join(f)).unwrap();
    assert_eq!(read(&a, "report.json"), read(&b, "report.json"));
    assert_eq!(read(&a, "sweep.csv"), read(&b, "sweep.csv"));
    assert_ne!(read(&a, "report.json"), read(&c, "report.json"));
    let doc = json_at(&a.join("report.json"));
    assert_eq!(doc["report"]["shots_used"]["z"], 100_000);
    assert!(doc["report"]["stderr"].as_f64().unwrap() > 0.0);
    assert_eq!(json_at(&d.join("report.json"))["mode"], "exact");
    assert!(!d.join("sweep.csv").exists());
}

fn sweep_config(grid: &str) -> String {
    format!(
        r#"{{"protocol": {{"variant": "conventional_weak"}}, "boundary": {{"preset": "anomalous"}},
            "xi_grid": {grid}, "sampler": {{"seed": 11, "shots": {{"x": 100000, "y": 100000}}, "reps": 10}}}}"#
    )
}

#[test]
fn sweep_rows_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.json", &sweep_config("[0.05, 0.1, 0.2]"));
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert_eq!(
            call(&[
                "sweep-xi",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap()
            ]),
            0
        );
        outputs.push(std::fs::read_to_string(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let lines: Vec<&str> = outputs[0].lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], crate::sampling::SWEEP_HEADER);
    let stds: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(10).unwrap().parse().unwrap())
        .collect();
    assert!(stds[0] > stds[1] && stds[1] > stds[2], "{stds:?}");
}

#[test]
fn sweep_rejects_empty_grid() {
    let (code, line) = failure_for("sweep-xi", &sweep_config("[]"));
    assert_eq!(code, 2);
    assert!(line.starts_with("ERR:2:xi_grid "), "{line}");
}

#[test]
fn sweep_exact_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.json", &sweep_config("[0.01, 0.02]"));
    let out = dir.path().join("o");
    assert_eq!(
        call(&[
            "sweep-xi",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--exact"
        ]),
        0
    );
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().contains(",0,0,0,0,"));
}

#[test]
fn wavefunction_commands() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sf");
    assert_eq!(
        call(&[
            "wavefunction",
            "--preset",
            "gaussian64",
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let summary = json_at(&out.join("summary.json"));
    assert!(summary["fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
    assert_eq!(summary["N"], 64);
    assert_eq!(summary["method"], "scan_free");
    let csv = std::fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(csv.lines().count(), 65);

    let mut amps = String::from("[");
    for x in 0..8 {
        let phase = 2.0 * std::f64::consts::PI * x as f64 / 8.0;
        amps.push_str(&format!(
            "[{}, {}]{}",
            phase.cos(),
            phase.sin(),
            if x < 7 { ", " } else { "]" }
        ));
    }
    let (code, line) = failure_for(
        "wavefunction",
        &format!(
            r#"{{"method": "scanning", "xi": 0.1, "state": {{"kind": "custom", "amps": {amps}}}}}"#
        ),
    );
    assert_eq!(code, 3);
    assert!(
        line.starts_with("ERR:3:state ") && line.contains("zero-momentum"),
        "{line}"
    );

    let cfg = write(
        dir.path(),
        "cmp.json",
        r#"{"method": "compare", "xi": 0.1, "target_fidelity": 0.9, "seed": 2,
            "state": {"kind": "gaussian", "n": 16, "x0": 6, "sigma": 2, "k": 0.4}}"#,
    );
    let out = dir.path().join("cmp");
    assert_eq!(
        call(&[
            "wavefunction",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let doc = json_at(&out.join("compare.json"));
    assert_eq!(doc["scanning"]["status"], "reached");
    assert!(doc["scanning"]["shots"].as_u64().unwrap() > 0);
    assert!(doc["scan_free"]["shots"].as_u64().unwrap() > 0);
    assert!(doc["ratio"].as_f64().unwrap() > 0.0);

    let (code, line) = failure_for(
        "wavefunction",
        r#"{"method": "scanning", "xi": 3.0, "state": {"preset": "gaussian64"}}"#,
    );
    assert_eq!(code, 2);
    assert!(line.starts_with("ERR:2:xi "), "{line}");
}

#[test]
fn diagram_commands() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ev");
    assert_eq!(
        call(&[
            "diagram",
            "--preset",
            "benchmark",
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let (re, im) = pair(&json_at(&out.join("diagram.json"))["value"]);
    assert!((re - 0.5).abs() < 1e-12 && im.abs() < 1e-12);

    let cfg = write(
        dir.path(),
        "rot.json",
        r#"{"preset": "benchmark", "action": "rotate", "k": 1}"#,
    );
    let out = dir.path().join("rot");
    assert_eq!(
        call(&[
            "diagram",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let doc = json_at(&out.join("diagram.json"));
    let (re, _) = pair(&doc["value"]);
    assert!((re - 0.5).abs() < 1e-12);
    // the rotated loop round-trips through the config format
    let rotated = serde_json::json!({ "diagram": doc["diagram"], "action": "evaluate" });
    let cfg = write(dir.path(), "ev2.json", &rotated.to_string());
    let out = dir.path().join("ev2");
    assert_eq!(
        call(&[
            "diagram",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let (re, _) = pair(&json_at(&out.join("diagram.json"))["value"]);
    assert!((re - 0.5).abs() < 1e-12);

    let cfg = write(
        dir.path(),
        "sp.json",
        r#"{"preset": "benchmark", "action": "split", "index": 3}"#,
    );
    let out = dir.path().join("sp");
    assert_eq!(
        call(&[
            "diagram",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let doc = json_at(&out.join("diagram.json"));
    assert_eq!(doc["children"].as_array().unwrap().len(), 2);
    let (re, _) = pair(&doc["recombined"]);
    assert!((re - 0.5).abs() < 1e-12);

    let cfg = write(
        dir.path(),
        "cp.json",
        r#"{"preset": "benchmark", "action": "compile"}"#,
    );
    let out = dir.path().join("cp");
    assert_eq!(
        call(&[
            "diagram",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let (re, _) = pair(&json_at(&out.join("diagram.json"))["measured_value"]);
    assert!((re - 0.5).abs() < 1e-10);

    let z = r#"[[1,0],[0,0],[0,0],[-1,0]]"#;
    let id = r#"[[1,0],[0,0],[0,0],[1,0]]"#;
    let (code, line) = failure_for(
        "diagram",
        &format!(
            r#"{{"diagram": {{"nodes": [{z}, {id}, {id}, {id}], "scale": [1, 0]}}, "action": "compile"}}"#
        ),
    );
    assert_eq!(code, 3);
    assert!(line.starts_with("ERR:3:slot0 "), "{line}");

    let (code, line) = failure_for("diagram", r#"{"preset": "benchmark", "action": "rotate"}"#);
    assert_eq!(code, 2);
    assert!(line.starts_with("ERR:2:k "), "{line}");
}

#[test]
fn kd_command() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("kd");
    assert_eq!(
        call(&[
            "kd",
            "--preset",
            "qubit_mub",
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let doc = json_at(&out.join("kd.json"));
    let (re, im) = pair(&doc["total"]);
    assert!((re - 1.0).abs() < 1e-12 && im.abs() < 1e-12);
    assert!(doc["max_deviation"].as_f64().unwrap() < 1e-10);
    let (re, _) = pair(&doc["grid"][0][1]);
    assert!((re - 0.5).abs() < 1e-12);

    let cfg = write(
        dir.path(),
        "kd4.json",
        r#"{"psi": [[0.5, 0], [0.5, 0], [0, 0.5], [0.5, 0]], "basis_a": "computational", "basis_b": "fourier"}"#,
    );
    let out = dir.path().join("kd4");
    assert_eq!(
        call(&[
            "kd",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        0
    );
    let doc = json_at(&out.join("kd.json"));
    assert_eq!(doc["grid"].as_array().unwrap().len(), 4);

    let (code, line) = failure_for(
        "kd",
        r#"{"rho": [[[2, 0], [0, 0]], [[0, 0], [0, 0]]], "basis_a": "computational", "basis_b": "fourier"}"#,
    );
    assert_eq!(code, 2);
    assert!(line.starts_with("ERR:2:rho "), "{line}");
}

#[test]
fn argument_errors() {
    assert_eq!(call(&["--help"]), 0);
    assert_eq!(call(&["frobnicate"]), 2);
    assert_eq!(call(&["weak-value"]), 2);
    assert_eq!(
        call(&["weak-value", "--preset", "anomalous", "--config", "x.json"]),
        2
    );
    assert_eq!(call(&["weak-value", "--preset", "nonsense"]), 2);
    assert_eq!(call(&["weak-value", "--config", "/nonexistent/c.json"]), 2);
}

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn arcmean(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arcmean")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn result<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["name"] == name)
        .unwrap_or_else(|| panic!("no result {name}"))
}

fn csv_rows(text: &str) -> Vec<[f64; 4]> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,y,z"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3]]
        })
        .collect()
}

#[test]
fn sample_great_circle_endpoints_inclusive() {
    let o = arcmean(&["sample", "--curve", r#"{"family":"great_circle","domain":[0,1]}"#, "--n", "5"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 5);
    for (k, r) in rows.iter().enumerate() {
        let t = k as f64 * 0.25;
        assert_eq!(r[0], t);
        let expected = [(2.0 * PI * t).sin(), 0.0, (2.0 * PI * t).cos()];
        for i in 0..3 {
            assert!((r[i + 1] - expected[i]).abs() < 1e-15);
        }
    }
}

#[test]
fn sample_tennis_ball_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("seam.csv");
    let o = arcmean(&["sample", "--curve", r#"{"family":"tennis_ball"}"#, "--n", "1024", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1024);
    let a: f64 = 0.7037;
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[0][1] - a.sin()).abs() < 1e-15 && rows[0][2] == 0.0 && (rows[0][3] - a.cos()).abs() < 1e-15);
    assert!((rows[1023][0] - 4.0 * PI).abs() < 1e-15);
    for r in &rows {
        assert!((r[1] * r[1] + r[2] * r[2] + r[3] * r[3] - 1.0).abs() < 1e-12);
    }
    // 17 significant digits: one leading digit and 16 after the point
    let first = text.lines().nth(2).unwrap().split(',').nth(1).unwrap();
    let mantissa = first.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.len(), 18, "{first}");
}

#[test]
fn sample_rejects_a_single_row() {
    let o = arcmean(&["sample", "--curve", r#"{"family":"tennis_ball"}"#, "--n", "1"]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(code(&arcmean(&["verify", "--config", bad.to_str().unwrap()])), 2);

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"command": "eval", "colour": "red"}"#).unwrap();
    assert_eq!(code(&arcmean(&["--config", unknown.to_str().unwrap()])), 2);

    assert_eq!(code(&arcmean(&["eval"])), 2, "missing curve");
    assert_eq!(code(&arcmean(&["eval", "--curve", r#"{"family":"tennis_ball","params":{"A":3}}"#])), 2);
    assert_eq!(code(&arcmean(&["eval", "--curve", r#"{"family":"tennis_ball"}"#, "--point", "4,0"])), 2);
    assert_eq!(code(&arcmean(&["optimize", "--curve", r#"{"family":"tennis_ball"}"#, "--objective", "nope"])), 2);
    assert_eq!(code(&arcmean(&["frobnicate"])), 2);
}

#[test]
fn config_command_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "sample", "curve": {"family": "great_circle"}}"#).unwrap();
    assert_eq!(code(&arcmean(&["eval", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn eval_reports_functionals() {
    let dir = tempfile::tempdir().unwrap();
    let seam = dir.path().join("seam.json");
    let o = arcmean(&["eval", "--curve", r#"{"family":"tennis_ball"}"#, "--out", seam.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&seam);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["command"], "eval");
    let m = result(&r, "M_tilde");
    assert!((m["value"].as_f64().unwrap() - 2.0 * PI * PI).abs() < 1e-6);
    assert!(m["error_estimate"].as_f64().is_some());
    assert_eq!(result(&r, "is_simple")["value"], true);
    assert_eq!(result(&r, "is_closed")["value"], true);
    for name in ["arc_length", "M", "mean_min"] {
        assert!(result(&r, name)["value"].is_f64());
    }

    let wavy = dir.path().join("wavy.json");
    let o = arcmean(&["eval", "--curve", r#"{"family":"wavy_circle"}"#, "--point", "0,1", "--out", wavy.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s = result(&read_json(&wavy), "S_tilde(theta=0, phi=1)")["value"].as_f64().unwrap();
    assert!((s - 2.3562).abs() < 1e-4);

    let gc = dir.path().join("gc.json");
    let o = arcmean(&["eval", "--curve", r#"{"family":"great_circle","domain":[0,2]}"#, "--out", gc.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let simple = result(&read_json(&gc), "is_simple").clone();
    assert_eq!(simple["value"], false);
    assert!(simple["note"].as_str().unwrap().contains("t1"));
}

#[test]
fn reports_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command": "eval", "curve": {"family": "wavy_circle", "params": {"B": 0.2}},
            "sphere_rule": {"rule": "monte_carlo", "n": 2000, "tol": 1e-3, "seed": 7},
            "points": [[1.0, 2.0]], "mean_min_points": 500, "seed": 9}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = arcmean(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap(), "reports differ");

    // the embedded config reproduces the run
    let embedded = dir.path().join("embedded.json");
    std::fs::write(&embedded, serde_json::to_string(&read_json(&a)["config"]).unwrap()).unwrap();
    let c = dir.path().join("c.json");
    let o = arcmean(&["--config", embedded.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&a)["results"], read_json(&c)["results"]);
}

#[test]
fn calibrate_named_families() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal.json");
    let o = arcmean(&["calibrate", "--curve", r#"{"family":"tennis_ball"}"#, "--tol", "1e-9", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = read_json(&out);
    let p = result(&r, "parameter");
    assert!((p["value"].as_f64().unwrap() - 0.7037).abs() < 5e-4);
    assert_eq!(p["pass"], true);
    assert!(r["details"]["residual"].as_f64().unwrap() <= 1e-9);

    // the 4pi root of the wavy circle is not the published constant
    let o = arcmean(&["calibrate", "--curve", r#"{"family":"wavy_circle"}"#, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = read_json(&out);
    let p = result(&r, "parameter");
    assert!((p["value"].as_f64().unwrap() - 0.28624).abs() < 1e-4);
    assert_eq!(p["paper_value"], 0.1856);
    assert_eq!(p["pass"], false);
}

#[test]
fn optimize_with_a_single_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("opt.json");
    let o = arcmean(&[
        "optimize",
        "--curve",
        r#"{"family":"trig_series"}"#,
        "--max-evals",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_eq!(result(&r, "status")["value"], "max_evaluations_reached");
    assert_eq!(r["details"]["best_parameters"], r["details"]["initial_parameters"]);
    assert_eq!(result(&r, "evaluations")["value"], 1);
}

#[test]
fn optimize_infeasible_start_is_a_numerical_failure() {
    // a doubled great circle is never simple
    let o = arcmean(&["optimize", "--curve", r#"{"family":"great_circle"}"#, "--max-evals", "3"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_exit_code_matches_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.json");
    let o = arcmean(&["verify", "--out", out.to_str().unwrap()]);
    let r = read_json(&out);
    let rows = r["results"].as_array().unwrap();
    assert!(rows.len() >= 12);
    let all_pass = rows.iter().all(|row| row["pass"] == true);
    assert_eq!(code(&o), if all_pass { 0 } else { 1 });
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(table.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), rows.len());
}

//! One test per acceptance criterion. Each prints a PASS/FAIL line per row
//! (run with `--nocapture` to see them) and fails if any row fails.

use arcmean::verify::{run_criterion, AcceptanceRow, VerifySettings};

fn check(id: u32) {
    let rows = run_criterion(id, &VerifySettings::default());
    assert!(!rows.is_empty());
    let mut failed = Vec::new();
    for r in &rows {
        println!("{}", line(r));
        if !r.pass {
            failed.push(r.id.clone());
        }
    }
    assert!(failed.is_empty(), "failed rows: {failed:?}");
}

fn line(r: &AcceptanceRow) -> String {
    let reported = r.paper_value.map_or("-".to_string(), |v| format!("{v}"));
    format!(
        "[{}] criterion {:<4} {} | reported {} | computed {:.10} | tolerance {:.1e} | {:.2}s | {}",
        if r.pass { "PASS" } else { "FAIL" },
        r.id,
        r.claim,
        reported,
        r.computed,
        r.tolerance,
        r.seconds,
        r.note
    )
}

#[test]
fn criterion_01_point_to_sphere_mean() {
    check(1);
}

#[test]
fn criterion_02_arcsin_identity() {
    check(2);
}

#[test]
fn criterion_03_curve_to_sphere_mean_of_seam() {
    check(3);
}

#[test]
fn criterion_04_great_circle_mean_from_points() {
    check(4);
}

#[test]
fn criterion_05_wavy_circle_value() {
    check(5);
}

#[test]
fn criterion_06_calibration_constants() {
    check(6);
}

#[test]
fn criterion_07_seam_sphere_to_curve_mean() {
    check(7);
}

#[test]
fn criterion_08_wavy_circle_excess() {
    check(8);
}

#[test]
fn criterion_09_simplicity() {
    check(9);
}

#[test]
fn criterion_10_stationary_points() {
    check(10);
}

#[test]
fn criterion_11_properties() {
    check(11);
}

#[test]
fn criterion_12_optimizer() {
    check(12);
}

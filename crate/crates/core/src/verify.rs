//! Reproduction checks for the published constants and the derived
//! properties, one row per claim.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{CurveDomain, SphericalCurve, TrigSeries, DEFAULT_SIMPLE_EPS, DEFAULT_SIMPLE_SAMPLES, TENNIS_BALL_A, WAVY_CIRCLE_B};
use crate::functionals::{
    arcsin_identity_residual, curve_to_sphere_mean_M, el_residuals, mean_min_arc_distance, mean_point_to_sphere,
    point_to_curve_mean, point_to_curve_min, sphere_to_curve_mean, DEFAULT_SCAN,
};
use crate::geometry::{fibonacci_design, uniform_sphere_sample, Rotation, SpherePoint};
use crate::optimizer::{
    calibrate_arc_length, candidate_objective, minimize_functional, CalibrationSettings, ObjectiveKind,
    OptimizeError, OptimizerConfig, TennisBallScale, TrigSearchFamily, WavyCircleScale,
};
use crate::quadrature::{QuadratureRule, RuleKind};

/// Number of the last check.
pub const CRITERIA: u32 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRow {
    pub id: String,
    pub claim: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_value: Option<f64>,
    pub computed: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
    /// Wall-clock time; left out of reports so they stay byte-reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl AcceptanceRow {
    fn new(id: &str, claim: &str, paper_value: Option<f64>, computed: f64, tolerance: f64, pass: bool) -> Self {
        Self {
            id: id.into(),
            claim: claim.into(),
            paper_value,
            computed,
            tolerance,
            pass,
            note: String::new(),
            seconds: 0.0,
        }
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    fn failed(id: &str, claim: &str, err: impl std::fmt::Display) -> Self {
        Self::new(id, claim, None, f64::NAN, f64::NAN, false).note(format!("error: {err}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    /// Rule for the point-to-sphere checks (1 and 2). With a Monte Carlo
    /// rule the tolerance becomes three standard errors.
    pub sphere_rule: QuadratureRule,
    pub seed: u64,
    pub optimizer_max_evals: usize,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            sphere_rule: QuadratureRule::sphere_default(),
            seed: 42,
            optimizer_max_evals: 500,
        }
    }
}

fn curve_rule() -> QuadratureRule {
    QuadratureRule::trapezoid(512, 1e-10).expect("valid rule")
}

fn random_points(seed: u64, n: usize) -> Vec<SpherePoint> {
    uniform_sphere_sample(seed, n).expect("n > 0")
}

pub fn run_all(settings: &VerifySettings) -> Vec<AcceptanceRow> {
    (1..=CRITERIA).flat_map(|id| run_criterion(id, settings)).collect()
}

/// Runs one numbered check; each returned row carries the elapsed time of
/// the whole check.
pub fn run_criterion(id: u32, settings: &VerifySettings) -> Vec<AcceptanceRow> {
    let start = Instant::now();
    let mut rows = match id {
        1 => vec![point_to_sphere_constant(settings)],
        2 => vec![arcsin_identity(settings)],
        3 => vec![m_for_seam()],
        4 => vec![great_circle_s_tilde(settings)],
        5 => vec![counterexample_value()],
        6 => calibration_constants(),
        7 => vec![seam_m_tilde()],
        8 => vec![counterexample_m_tilde()],
        9 => simplicity(),
        10 => vec![el_discrete_solution(settings)],
        11 => property_suite(settings),
        12 => optimizer_sanity(settings),
        _ => Vec::new(),
    };
    let seconds = start.elapsed().as_secs_f64();
    for r in &mut rows {
        r.seconds = seconds;
    }
    rows
}

fn is_monte_carlo(rule: &QuadratureRule) -> bool {
    rule.kind() == RuleKind::MonteCarlo
}

fn point_to_sphere_constant(s: &VerifySettings) -> AcceptanceRow {
    let claim = "mean distance from any point to the sphere is pi/2";
    let mc = is_monte_carlo(&s.sphere_rule);
    let mut worst = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for p in random_points(s.seed, 100) {
        match mean_point_to_sphere(&p.to_unit_vector(), &s.sphere_rule) {
            Ok(r) => {
                let dev = (r.value - FRAC_PI_2).abs();
                worst = worst.max(dev);
                worst_ratio = worst_ratio.max(dev / r.error_estimate.max(f64::MIN_POSITIVE));
            }
            Err(e) => return AcceptanceRow::failed("1", claim, e),
        }
    }
    if mc {
        AcceptanceRow::new("1", claim, Some(FRAC_PI_2), worst, 3.0, worst_ratio <= 3.0)
            .note(format!("100 random points; max |D - pi/2| = {worst:.3e}, max deviation = {worst_ratio:.2} standard errors"))
    } else {
        AcceptanceRow::new("1", claim, Some(FRAC_PI_2), worst, 1e-6, worst <= 1e-6)
            .note("100 random points; computed = max |D - pi/2|")
    }
}

fn arcsin_identity(s: &VerifySettings) -> AcceptanceRow {
    let claim = "double integral of sin(theta) arcsin(D sin(theta) + E cos(theta)) vanishes";
    let mc = is_monte_carlo(&s.sphere_rule);
    let mut worst = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for p in random_points(s.seed ^ 0x5eed, 20) {
        match arcsin_identity_residual(&p.to_unit_vector(), &s.sphere_rule) {
            Ok(r) => {
                worst = worst.max(r.value.abs());
                worst_ratio = worst_ratio.max(r.value.abs() / r.error_estimate.max(f64::MIN_POSITIVE));
            }
            Err(e) => return AcceptanceRow::failed("2", claim, e),
        }
    }
    if mc {
        AcceptanceRow::new("2", claim, Some(0.0), worst, 3.0, worst_ratio <= 3.0)
            .note(format!("20 random points; max deviation = {worst_ratio:.2} standard errors"))
    } else {
        AcceptanceRow::new("2", claim, Some(0.0), worst, 1e-6, worst <= 1e-6).note("20 random points; computed = max |residual|")
    }
}

fn calibrated_seam() -> Result<SphericalCurve, OptimizeError> {
    let r = calibrate_arc_length(&TennisBallScale, (0.1, 1.4), &CalibrationSettings::default())?;
    Ok(SphericalCurve::tennis_ball(r.parameter)?)
}

fn m_for_seam() -> AcceptanceRow {
    let claim = "M = 2 pi^2 for the calibrated tennis-ball seam";
    let target = 2.0 * PI * PI;
    let m = calibrated_seam()
        .map_err(|e| e.to_string())
        .and_then(|c| curve_to_sphere_mean_M(&c, &curve_rule()).map_err(|e| e.to_string()));
    match m {
        Ok(m) => {
            let rel = (m.value - target).abs() / target;
            AcceptanceRow::new("3", claim, Some(target), m.value, 1e-3, rel <= 1e-3)
                .note(format!("relative error {rel:.2e}"))
        }
        Err(e) => AcceptanceRow::failed("3", claim, e),
    }
}

fn great_circle_s_tilde(s: &VerifySettings) -> AcceptanceRow {
    let claim = "S~(P) = pi/2 for the doubled great circle";
    let c = SphericalCurve::great_circle();
    let mut worst = 0.0f64;
    for p in random_points(s.seed.wrapping_add(4), 50) {
        match point_to_curve_mean(&c, &p, &curve_rule()) {
            Ok(r) => worst = worst.max((r.value - FRAC_PI_2).abs()),
            Err(e) => return AcceptanceRow::failed("4", claim, e),
        }
    }
    AcceptanceRow::new("4", claim, Some(FRAC_PI_2), worst, 1e-8, worst <= 1e-8)
        .note("50 random points; computed = max |S~ - pi/2|")
}

fn counterexample_value() -> AcceptanceRow {
    let claim = "S~ = 2.3562 at (theta0=0, phi0=1) for the wavy circle, B = 0.1856";
    let r = SphericalCurve::wavy_circle(WAVY_CIRCLE_B)
        .map_err(|e| e.to_string())
        .and_then(|c| {
            let p = SpherePoint::new(0.0, 1.0).expect("valid point");
            point_to_curve_mean(&c, &p, &curve_rule()).map_err(|e| e.to_string())
        });
    match r {
        Ok(r) => AcceptanceRow::new("5", claim, Some(2.3562), r.value, 1e-4, (r.value - 2.3562).abs() <= 1e-4)
            .note(format!("exact value 3pi/4 = {:.10}", 3.0 * FRAC_PI_4)),
        Err(e) => AcceptanceRow::failed("5", claim, e),
    }
}

fn calibration_constants() -> Vec<AcceptanceRow> {
    let settings = CalibrationSettings::default();
    let row = |id: &str, claim: &str, reported: f64, result: Result<f64, OptimizeError>| match result {
        Ok(root) => {
            let pass = (root - reported).abs() <= 5e-4;
            let note = if pass {
                format!("root of L - 4pi = {root:.6}")
            } else {
                format!(
                    "root of L - 4pi = {root:.6} deviates from the reported {reported} by {:.4}; \
                     the reported constant is not fixed by the 4pi arc-length constraint alone (open question)",
                    (root - reported).abs()
                )
            };
            AcceptanceRow::new(id, claim, Some(reported), root, 5e-4, pass).note(note)
        }
        Err(e) => AcceptanceRow::failed(id, claim, e),
    };
    vec![
        row(
            "6a",
            "tennis-ball amplitude A giving arc-length 4pi",
            TENNIS_BALL_A,
            calibrate_arc_length(&TennisBallScale, (0.1, 1.4), &settings).map(|r| r.parameter),
        ),
        row(
            "6b",
            "wavy-circle amplitude B giving arc-length 4pi",
            WAVY_CIRCLE_B,
            calibrate_arc_length(&WavyCircleScale, (0.01, 0.6), &settings).map(|r| r.parameter),
        ),
    ]
}

fn m_tilde_rules() -> (QuadratureRule, QuadratureRule) {
    (
        QuadratureRule::sphere_default(),
        QuadratureRule::trapezoid(512, 1e-6).expect("valid rule"),
    )
}

fn seam_m_tilde() -> AcceptanceRow {
    let claim = "M~ = 2 pi^2 for the tennis-ball seam";
    let target = 2.0 * PI * PI;
    let curve = match calibrated_seam() {
        Ok(c) => c,
        Err(e) => return AcceptanceRow::failed("7", claim, e),
    };
    let (sphere, inner) = m_tilde_rules();
    let m = match sphere_to_curve_mean(&curve, &sphere, &inner) {
        Ok(m) => m,
        Err(e) => return AcceptanceRow::failed("7", claim, e),
    };
    let mut sup = 0.0f64;
    for q in fibonacci_design(122) {
        if let Ok(r) = point_to_curve_mean(&curve, &q.to_spherical(), &curve_rule()) {
            sup = sup.max((r.value - FRAC_PI_2).abs());
        }
    }
    let rel = (m.integral.value - target).abs() / target;
    AcceptanceRow::new("7", claim, Some(target), m.integral.value, 5e-2, rel <= 5e-2).note(format!(
        "error estimate {:.2e}; normalized M~/4pi = {:.10}; sup |S~(P) - pi/2| over the 122-point design = {sup:.4}",
        m.integral.error_estimate, m.normalized.value
    ))
}

fn counterexample_m_tilde() -> AcceptanceRow {
    let claim = "M~ > 2 pi^2 for the wavy circle, B = 0.1856";
    let target = 2.0 * PI * PI;
    let curve = match SphericalCurve::wavy_circle(WAVY_CIRCLE_B) {
        Ok(c) => c,
        Err(e) => return AcceptanceRow::failed("8", claim, e),
    };
    let (sphere, inner) = m_tilde_rules();
    match sphere_to_curve_mean(&curve, &sphere, &inner) {
        Ok(m) => {
            let excess = m.integral.value - target;
            let threshold = 3.0 * m.integral.error_estimate;
            let pass = excess > threshold;
            let mut note = format!(
                "M~ - 2pi^2 = {excess:.3e}, error estimate {:.3e}",
                m.integral.error_estimate
            );
            if !pass {
                note.push_str(
                    "; exchanging the order of integration gives M~ = (1/T) int_0^T (int_S dist dS) dt = 2pi^2 \
                     for every curve, so no excess can be measured",
                );
            }
            AcceptanceRow::new("8", claim, Some(target), m.integral.value, threshold, pass).note(note)
        }
        Err(e) => AcceptanceRow::failed("8", claim, e),
    }
}

fn simplicity() -> Vec<AcceptanceRow> {
    let (n, eps) = (DEFAULT_SIMPLE_SAMPLES, DEFAULT_SIMPLE_EPS);
    let mut rows = Vec::new();

    let doubled = SphericalCurve::great_circle();
    match doubled.is_simple(n, eps) {
        Ok(r) => {
            let pass = !r.simple && r.witness.is_some();
            let note = match r.witness {
                Some((a, b)) => format!("witness t1 = {a:.6}, t2 = {b:.6}"),
                None => "no witness".into(),
            };
            rows.push(
                AcceptanceRow::new("9a", "doubled great circle on [0, 2] is not simple", None, r.simple as u8 as f64, eps, pass)
                    .note(note),
            );
        }
        Err(e) => rows.push(AcceptanceRow::failed("9a", "doubled great circle is not simple", e)),
    }

    let mut simple_row = |id: &str, claim: &str, c: Result<SphericalCurve, String>| {
        let r = c.and_then(|c| c.is_simple(n, eps).map_err(|e| e.to_string()));
        rows.push(match r {
            Ok(r) => AcceptanceRow::new(id, claim, None, r.simple as u8 as f64, eps, r.simple),
            Err(e) => AcceptanceRow::failed(id, claim, e),
        });
    };
    simple_row(
        "9b",
        "tennis-ball seam is simple",
        calibrated_seam().map_err(|e| e.to_string()),
    );
    simple_row(
        "9c",
        "single-traversal great circle on [0, 1] is simple",
        Ok(SphericalCurve::great_circle().with_domain(CurveDomain::new(0.0, 1.0).expect("valid domain"))),
    );
    rows
}

fn el_discrete_solution(s: &VerifySettings) -> AcceptanceRow {
    let claim = "theta = m pi, phi = phi0 - (pi/2 + k pi) solves both stationarity equations";
    let mut worst = 0.0f64;
    for p in random_points(s.seed.wrapping_add(10), 10) {
        for m in -2..=2 {
            for k in -2..=2 {
                let theta = m as f64 * PI;
                let phi = p.phi() - (FRAC_PI_2 + k as f64 * PI);
                let r = el_residuals(theta, phi, &p);
                worst = worst.max(r.res_theta.abs()).max(r.res_phi.abs());
            }
        }
    }
    AcceptanceRow::new("10", claim, Some(0.0), worst, 1e-14, worst <= 1e-14)
        .note("10 random (theta0, phi0) on the m, k in -2..2 grid")
}

fn property_suite(s: &VerifySettings) -> Vec<AcceptanceRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(11));
    let mut rows = Vec::new();
    let rule = curve_rule();

    // rotation invariance of S~, nearest distance and D
    {
        let claim = "distances and functionals are rotation invariant";
        let seam = SphericalCurve::tennis_ball(TENNIS_BALL_A).expect("valid");
        let mut worst_ratio = 0.0f64;
        let mut worst_min = 0.0f64;
        let mut failure = None;
        for p in random_points(s.seed.wrapping_add(111), 10) {
            let rot = Rotation::random(&mut rng);
            let rc = seam.clone().rotated(rot);
            let rp = rot.apply(&p.to_unit_vector()).to_spherical();
            let pair = point_to_curve_mean(&seam, &p, &rule).and_then(|a| point_to_curve_mean(&rc, &rp, &rule).map(|b| (a, b)));
            let mins = point_to_curve_min(&seam, &p, DEFAULT_SCAN)
                .and_then(|a| point_to_curve_min(&rc, &rp, DEFAULT_SCAN).map(|b| (a, b)));
            let d = mean_point_to_sphere(&p.to_unit_vector(), &QuadratureRule::gauss_legendre(32, 1e-10).expect("valid"))
                .and_then(|a| {
                    mean_point_to_sphere(&rot.apply(&p.to_unit_vector()), &QuadratureRule::gauss_legendre(32, 1e-10).expect("valid"))
                        .map(|b| (a, b))
                });
            match (pair, mins, d) {
                (Ok((a, b)), Ok((ma, mb)), Ok((da, db))) => {
                    let allowance = 3.0 * (a.error_estimate + b.error_estimate) + 1e-13;
                    worst_ratio = worst_ratio.max((a.value - b.value).abs() / allowance);
                    let d_allow = 3.0 * (da.error_estimate + db.error_estimate) + 1e-13;
                    worst_ratio = worst_ratio.max((da.value - db.value).abs() / d_allow);
                    worst_min = worst_min.max((ma.distance - mb.distance).abs());
                }
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => failure = Some(e.to_string()),
            }
        }
        rows.push(match failure {
            Some(e) => AcceptanceRow::failed("11a", claim, e),
            None => AcceptanceRow::new("11a", claim, None, worst_ratio, 1.0, worst_ratio <= 1.0 && worst_min < 1e-8)
                .note(format!(
                    "computed = max |difference| / (3 x combined error estimate); max nearest-distance difference {worst_min:.2e}"
                )),
        });
    }

    // nearest distance never exceeds the mean distance
    {
        let claim = "nearest distance <= mean distance on 200 random (curve, point) pairs";
        let mut violations = 0usize;
        let mut failure = None;
        for p in random_points(s.seed.wrapping_add(112), 200) {
            let curve = random_curve(&mut rng);
            match (
                point_to_curve_min(&curve, &p, DEFAULT_SCAN),
                point_to_curve_mean(&curve, &p, &QuadratureRule::trapezoid(256, 1e-6).expect("valid")),
            ) {
                (Ok(m), Ok(r)) => {
                    if m.distance > r.value {
                        violations += 1;
                    }
                }
                (Err(e), _) | (_, Err(e)) => failure = Some(e.to_string()),
            }
        }
        rows.push(match failure {
            Some(e) => AcceptanceRow::failed("11b", claim, e),
            None => AcceptanceRow::new("11b", claim, None, violations as f64, 0.0, violations == 0).note("computed = violations"),
        });
    }

    // Monte Carlo standard error of M~ shrinks with four times the samples
    {
        let claim = "Monte Carlo standard error of M~ shrinks >= 1.8x when samples x4";
        let seam = SphericalCurve::tennis_ball(TENNIS_BALL_A).expect("valid");
        let inner = QuadratureRule::trapezoid(256, 1e-6).expect("valid");
        let run = |n: usize| {
            let rule = QuadratureRule::monte_carlo(n, s.seed).expect("valid");
            sphere_to_curve_mean(&seam, &rule, &inner)
        };
        rows.push(match (run(1000), run(4000)) {
            (Ok(a), Ok(b)) => {
                let ratio = a.integral.error_estimate / b.integral.error_estimate;
                AcceptanceRow::new("11c", claim, None, ratio, 1.8, ratio >= 1.8).note(format!(
                    "standard errors {:.4e} (n=1000) and {:.4e} (n=4000)",
                    a.integral.error_estimate, b.integral.error_estimate
                ))
            }
            (Err(e), _) | (_, Err(e)) => AcceptanceRow::failed("11c", claim, e),
        });
    }

    // closed form of the mean nearest distance to a great circle
    {
        let claim = "mean nearest distance to a great circle is pi/2 - 1";
        let expected = FRAC_PI_2 - 1.0;
        rows.push(match mean_min_arc_distance(&SphericalCurve::great_circle(), 100_000, s.seed) {
            Ok(r) => {
                let dev = (r.value - expected).abs();
                AcceptanceRow::new("11d", claim, Some(expected), r.value, 3.0 * r.error_estimate, dev <= 3.0 * r.error_estimate)
                    .note(format!("n = 100000, standard error {:.2e}", r.error_estimate))
            }
            Err(e) => AcceptanceRow::failed("11d", claim, e),
        });
    }
    rows
}

/// A curve from one of the built-in families with random parameters.
fn random_curve<R: Rng>(rng: &mut R) -> SphericalCurve {
    match rng.random_range(0..4) {
        0 => SphericalCurve::great_circle().rotated(Rotation::random(rng)),
        1 => SphericalCurve::tennis_ball(rng.random_range(0.2..1.3)).expect("valid"),
        2 => SphericalCurve::wavy_circle(rng.random_range(0.05..0.7)).expect("valid"),
        _ => {
            let series = TrigSeries {
                theta0: rng.random_range(0.5..2.5),
                theta_cos: (0..3).map(|_| rng.random_range(-0.4..0.4)).collect(),
                theta_sin: (0..3).map(|_| rng.random_range(-0.4..0.4)).collect(),
                phi0: rng.random_range(0.0..6.0),
                phi_rate: 1.0,
                phi_sin: (0..3).map(|_| rng.random_range(-0.4..0.4)).collect(),
                phi_cos: Vec::new(),
            };
            SphericalCurve::trig_series(series, CurveDomain::new(0.0, 2.0 * PI).expect("valid")).expect("valid")
        }
    }
}

fn optimizer_sanity(s: &VerifySettings) -> Vec<AcceptanceRow> {
    let config = OptimizerConfig {
        max_evals: s.optimizer_max_evals,
        seed: s.seed,
        ..OptimizerConfig::default()
    };
    let mut rows = Vec::new();
    let family = match TrigSearchFamily::seam_seeded(config.harmonics, TENNIS_BALL_A) {
        Ok(f) => f,
        Err(e) => return vec![AcceptanceRow::failed("12a", "optimizer runs", e)],
    };
    match minimize_functional(&family, ObjectiveKind::SupDevFromHalfPi, &config) {
        Ok(report) => {
            let monotone = report.trace.windows(2).all(|w| w[1].objective <= w[0].objective);
            let improved = report.best_objective <= report.initial_objective;
            rows.push(
                AcceptanceRow::new(
                    "12a",
                    "objective trace is non-increasing",
                    None,
                    report.best_objective,
                    report.initial_objective,
                    monotone && improved,
                )
                .note(format!(
                    "sup |S~ - pi/2|: initial {:.6}, best {:.6} after {} evaluations ({:?})",
                    report.initial_objective, report.best_objective, report.evaluations, report.status
                )),
            );
            let worst = report.trace.iter().map(|t| t.arc_length_residual).fold(0.0, f64::max);
            rows.push(
                AcceptanceRow::new("12b", "every iterate has |L - 4pi| <= 1e-4", None, worst, 1e-4, worst <= 1e-4)
                    .note(format!("{} accepted iterates", report.trace.len())),
            );
        }
        Err(e) => rows.push(AcceptanceRow::failed("12a", "optimizer runs", e)),
    }
    let claim = "doubled great circle is never feasible";
    rows.push(
        match candidate_objective(&SphericalCurve::great_circle(), ObjectiveKind::SupDevFromHalfPi, &config) {
            Ok(v) => AcceptanceRow::new("12c", claim, None, v, f64::INFINITY, v == f64::INFINITY),
            Err(e) => AcceptanceRow::failed("12c", claim, e),
        },
    );
    rows
}

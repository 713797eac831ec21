use std::f64::consts::PI;
use std::fmt::Write as _;

use arcmean::curves::{CurveFamily, DEFAULT_SIMPLE_EPS, DEFAULT_SIMPLE_SAMPLES, TENNIS_BALL_A, WAVY_CIRCLE_B};
use arcmean::functionals::FunctionalError;
use arcmean::optimizer::{scale_family_for, search_family_for, OptimizeError};
use arcmean::verify::{run_all, AcceptanceRow, VerifySettings};
use arcmean::{
    calibrate_arc_length, curve_to_sphere_mean_M, mean_min_arc_distance, minimize_functional, point_to_curve_mean,
    sphere_to_curve_mean, SpherePoint, SphericalCurve,
};

use crate::config::{Command, RunConfig};
use crate::report::{emit, Report, ResultEntry};
use crate::CliError;

/// Closure tolerance used by `eval`.
const CLOSED_EPS: f64 = 1e-8;

/// Runs a validated config; returns the process exit code.
pub fn run(cfg: &RunConfig) -> Result<u8, CliError> {
    match cfg.command.expect("validated") {
        Command::Verify => verify(cfg),
        Command::Eval => eval(cfg).map(|_| 0),
        Command::Sample => sample(cfg).map(|_| 0),
        Command::Calibrate => calibrate(cfg).map(|_| 0),
        Command::Optimize => optimize(cfg).map(|_| 0),
    }
}

fn numerical(what: &str) -> impl Fn(FunctionalError) -> CliError + '_ {
    move |e| CliError::Numerical(format!("{what}: {e}"))
}

fn optimize_error(e: OptimizeError) -> CliError {
    match e {
        OptimizeError::Config(m) => CliError::Config(m),
        other => CliError::Numerical(other.to_string()),
    }
}

fn curve(cfg: &RunConfig) -> Result<SphericalCurve, CliError> {
    let spec = cfg.curve.as_ref().expect("validated");
    spec.build().map_err(|e| CliError::Config(format!("curve: {e}")))
}

fn report(cfg: &RunConfig, results: Vec<ResultEntry>, details: Option<serde_json::Value>) -> Report {
    Report {
        config: cfg.clone(),
        version: arcmean::VERSION,
        results,
        details,
    }
}

fn verify(cfg: &RunConfig) -> Result<u8, CliError> {
    let settings = VerifySettings {
        sphere_rule: cfg.sphere_rule,
        seed: cfg.seed,
        ..VerifySettings::default()
    };
    let rows = run_all(&settings);
    let mut table = String::new();
    for r in &rows {
        writeln!(table, "{}", table_line(r)).unwrap();
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    writeln!(table, "{passed}/{} rows pass", rows.len()).unwrap();
    print!("{table}");

    if let Some(out) = &cfg.out {
        let results = rows
            .iter()
            .map(|r| ResultEntry {
                paper_value: r.paper_value,
                pass: Some(r.pass),
                tolerance: Some(r.tolerance),
                note: (!r.note.is_empty()).then(|| r.note.clone()),
                ..ResultEntry::value(format!("{}: {}", r.id, r.claim), r.computed)
            })
            .collect();
        emit(Some(out), &report(cfg, results, None).to_json())?;
    }
    Ok(if passed == rows.len() { 0 } else { 1 })
}

fn table_line(r: &AcceptanceRow) -> String {
    let reported = r.paper_value.map_or("-".to_string(), |v| format!("{v}"));
    let mut line = format!(
        "{} {:<4} {} | reported {} | computed {:.10} | tol {:.1e}",
        if r.pass { "PASS" } else { "FAIL" },
        r.id,
        r.claim,
        reported,
        r.computed,
        r.tolerance
    );
    if !r.note.is_empty() {
        write!(line, " | {}", r.note).unwrap();
    }
    line
}

fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let c = curve(cfg)?;
    let mut results = Vec::new();

    let length = c
        .arc_length(&cfg.curve_rule)
        .map_err(|e| CliError::Numerical(format!("arc_length: {e}")))?;
    results.push(ResultEntry::functional("arc_length", &length));
    results.push(ResultEntry::value("is_closed", c.is_closed(CLOSED_EPS)));

    let simple = c
        .is_simple(DEFAULT_SIMPLE_SAMPLES, DEFAULT_SIMPLE_EPS)
        .map_err(|e| CliError::Numerical(format!("is_simple: {e}")))?;
    let mut entry = ResultEntry::value("is_simple", simple.simple);
    if let Some((a, b)) = simple.witness {
        entry = entry.with_note(format!("self-intersection at t1 = {a}, t2 = {b}"));
    }
    results.push(entry);

    results.push(match curve_to_sphere_mean_M(&c, &cfg.curve_rule) {
        Ok(m) => ResultEntry::functional("M", &m),
        Err(FunctionalError::NotClosed) => {
            ResultEntry::value("M", serde_json::Value::Null).with_note("undefined: curve is not closed")
        }
        Err(e) => return Err(numerical("M")(e)),
    });

    for p in &cfg.points {
        let name = format!("S_tilde(theta={}, phi={})", p[0], p[1]);
        let point = SpherePoint::new(p[0], p[1]).expect("validated");
        let s = point_to_curve_mean(&c, &point, &cfg.curve_rule).map_err(numerical(&name))?;
        results.push(ResultEntry::functional(name, &s));
    }

    let m = sphere_to_curve_mean(&c, &cfg.sphere_rule, &cfg.curve_rule).map_err(numerical("M_tilde"))?;
    results.push(ResultEntry::functional("M_tilde", &m.integral));
    results.push(ResultEntry::functional("M_tilde_over_4pi", &m.normalized));

    let mm = mean_min_arc_distance(&c, cfg.mean_min_points, cfg.seed).map_err(numerical("mean_min"))?;
    results.push(ResultEntry::functional("mean_min", &mm));

    emit(cfg.out.as_deref(), &report(cfg, results, None).to_json())
}

fn sample(cfg: &RunConfig) -> Result<(), CliError> {
    let c = curve(cfg)?;
    let d = c.domain();
    let n = cfg.samples;
    let mut csv = String::with_capacity(80 * (n + 1));
    csv.push_str("t,x,y,z\n");
    for k in 0..n {
        let t = if k == n - 1 {
            d.end()
        } else {
            d.start() + d.width() * k as f64 / (n - 1) as f64
        };
        let [x, y, z] = c.position(t).to_array();
        writeln!(csv, "{t:.16e},{x:.16e},{y:.16e},{z:.16e}").unwrap();
    }
    emit(cfg.out.as_deref(), &csv)
}

/// Published scale for the named families, for comparison.
fn reported_scale(c: &SphericalCurve) -> Option<f64> {
    match c.family() {
        CurveFamily::TennisBallSeam { .. } => Some(TENNIS_BALL_A),
        CurveFamily::WavyCircle { .. } => Some(WAVY_CIRCLE_B),
        _ => None,
    }
}

fn calibrate(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.curve.as_ref().expect("validated");
    let family = scale_family_for(spec, cfg.optimizer.harmonics).map_err(optimize_error)?;
    let settings = &cfg.optimizer.calibration;
    let r = calibrate_arc_length(family.as_ref(), family.default_bracket(), settings).map_err(optimize_error)?;

    let mut param = ResultEntry::value("parameter", r.parameter);
    if let Some(reported) = reported_scale(&curve(cfg)?) {
        let pass = (r.parameter - reported).abs() <= 5e-4;
        param.paper_value = Some(reported);
        param.pass = Some(pass);
        param.tolerance = Some(5e-4);
        if !pass {
            param.note = Some(format!(
                "root of L - 4pi differs from the reported {reported} by {:.4}",
                (r.parameter - reported).abs()
            ));
        }
    }
    let results = vec![
        param,
        ResultEntry {
            error_estimate: Some(r.residual),
            ..ResultEntry::value("arc_length", r.arc_length)
        },
        ResultEntry::value("arc_length_residual", r.residual),
        ResultEntry::value("iterations", r.iterations),
        ResultEntry::value("non_monotone", r.non_monotone),
    ];
    let details = serde_json::to_value(&r).expect("report serializes");
    emit(cfg.out.as_deref(), &report(cfg, results, Some(details)).to_json())
}

fn optimize(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.curve.as_ref().expect("validated");
    let family = search_family_for(spec, cfg.optimizer.harmonics).map_err(optimize_error)?;
    let r = minimize_functional(family.as_ref(), cfg.optimizer.objective, &cfg.optimizer).map_err(optimize_error)?;

    let mut best = ResultEntry::value(format!("best_{}", r.objective.as_str()), r.best_objective);
    if r.objective == arcmean::ObjectiveKind::MTilde {
        best.paper_value = Some(2.0 * PI * PI);
    }
    let results = vec![
        ResultEntry::value(format!("initial_{}", r.objective.as_str()), r.initial_objective),
        best,
        ResultEntry::value("best_scale", r.best_scale),
        ResultEntry::value("constraint_residual", r.constraint_residual),
        ResultEntry::value("evaluations", r.evaluations),
        ResultEntry {
            converged: Some(r.converged),
            ..ResultEntry::value("status", serde_json::to_value(r.status).expect("status serializes"))
        },
    ];
    let details = serde_json::to_value(&r).expect("report serializes");
    emit(cfg.out.as_deref(), &report(cfg, results, Some(details)).to_json())
}

//! Arc-length calibration and derivative-free search over curve families.
//!
//! Every family has one designated scale parameter. Calibration bisects on
//! it until the arc-length hits the target; the outer Nelder–Mead search
//! moves the remaining shape parameters and recalibrates the scale at every
//! trial point, so each candidate it scores satisfies the length constraint.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{
    CurveDomain, CurveError, CurveFamily, CurveSpec, SphericalCurve, TrigSeries, DEFAULT_SIMPLE_EPS,
    DEFAULT_SIMPLE_SAMPLES, TENNIS_BALL_A,
};
use crate::functionals::{mean_min_arc_distance, point_to_curve_mean, sphere_to_curve_mean, FunctionalError};
use crate::geometry::fibonacci_design;
use crate::quadrature::{QuadratureError, QuadratureRule};
use crate::TARGET_LENGTH;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("no sign change of L - target in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("bisection stalled at {parameter} with |L - target| = {residual}")]
    ToleranceNotMet { parameter: f64, residual: f64 },
    #[error("calibration failed at the initial point: {0}")]
    CalibrationFailed(String),
    #[error("initial point is infeasible: {0}")]
    InfeasibleStart(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("invalid optimizer config: {0}")]
    Config(String),
}

/// A curve family with one designated scale parameter.
pub trait ScaleFamily {
    fn tag(&self) -> String;
    fn curve(&self, scale: f64) -> Result<SphericalCurve, CurveError>;
    fn default_bracket(&self) -> (f64, f64);
}

/// Tennis-ball seam with the amplitude `A` as scale.
#[derive(Debug, Clone, Copy, Default)]
pub struct TennisBallScale;

impl ScaleFamily for TennisBallScale {
    fn tag(&self) -> String {
        "tennis_ball".into()
    }

    fn curve(&self, a: f64) -> Result<SphericalCurve, CurveError> {
        SphericalCurve::tennis_ball(a)
    }

    fn default_bracket(&self) -> (f64, f64) {
        (0.1, 1.4)
    }
}

/// Wavy circle with the amplitude `B` as scale.
#[derive(Debug, Clone, Copy, Default)]
pub struct WavyCircleScale;

impl ScaleFamily for WavyCircleScale {
    fn tag(&self) -> String {
        "wavy_circle".into()
    }

    fn curve(&self, b: f64) -> Result<SphericalCurve, CurveError> {
        SphericalCurve::wavy_circle(b)
    }

    fn default_bracket(&self) -> (f64, f64) {
        (0.01, 0.6)
    }
}

/// Great circle traversed over `[0, 2s]`; the scale `s` stretches the domain.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreatCircleDomainScale;

impl ScaleFamily for GreatCircleDomainScale {
    fn tag(&self) -> String {
        "great_circle".into()
    }

    fn curve(&self, s: f64) -> Result<SphericalCurve, CurveError> {
        Ok(SphericalCurve::great_circle().with_domain(CurveDomain::new(0.0, 2.0 * s)?))
    }

    fn default_bracket(&self) -> (f64, f64) {
        (0.5, 1.7)
    }
}

/// Trigonometric search curve
/// `theta = pi/2 + sum a_j cos(jt) + b_j sin(jt)`, `phi = t/2 + sum c_j sin(jt)`
/// on `[0, 4pi]`, whose coefficient vector `(a, b, c)` is the unit
/// direction of `shape` times the scale.
#[derive(Debug, Clone)]
pub struct TrigDirectionScale {
    shape: Vec<f64>,
    harmonics: usize,
}

impl TrigDirectionScale {
    pub fn new(shape: Vec<f64>, harmonics: usize) -> Result<Self, OptimizeError> {
        if shape.len() != 3 * harmonics {
            return Err(OptimizeError::Config(format!(
                "shape has {} entries, expected 3J = {}",
                shape.len(),
                3 * harmonics
            )));
        }
        Ok(Self { shape, harmonics })
    }

    fn norm(&self) -> f64 {
        self.shape.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Coefficients `(a, b, c)` at the given scale.
    pub fn coefficients(&self, scale: f64) -> Vec<f64> {
        let norm = self.norm();
        if norm == 0.0 {
            return vec![0.0; self.shape.len()];
        }
        self.shape.iter().map(|v| scale * v / norm).collect()
    }
}

/// Builds the search-family curve from coefficients `(a_1..a_J, b_1..b_J, c_1..c_J)`.
pub fn trig_search_curve(coefficients: &[f64], harmonics: usize) -> Result<SphericalCurve, CurveError> {
    let j = harmonics;
    let series = TrigSeries {
        theta0: FRAC_PI_2,
        theta_cos: coefficients[..j].to_vec(),
        theta_sin: coefficients[j..2 * j].to_vec(),
        phi0: 0.0,
        phi_rate: 0.5,
        phi_sin: coefficients[2 * j..3 * j].to_vec(),
        phi_cos: Vec::new(),
    };
    SphericalCurve::trig_series(series, CurveDomain::new(0.0, 2.0 * TAU)?)
}

impl ScaleFamily for TrigDirectionScale {
    fn tag(&self) -> String {
        format!("trig_series(J={})", self.harmonics)
    }

    fn curve(&self, scale: f64) -> Result<SphericalCurve, CurveError> {
        if self.norm() == 0.0 {
            return Err(CurveError::Spec("shape direction is zero".into()));
        }
        trig_search_curve(&self.coefficients(scale), self.harmonics)
    }

    fn default_bracket(&self) -> (f64, f64) {
        (0.05, 2.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    pub target: f64,
    pub tol: f64,
    pub scan_points: usize,
    pub max_iterations: usize,
    pub rule: QuadratureRule,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            target: TARGET_LENGTH,
            tol: 1e-9,
            scan_points: 32,
            max_iterations: 200,
            rule: QuadratureRule::trapezoid(512, 1e-11).expect("valid rule"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub family: String,
    pub parameter: f64,
    pub arc_length: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Search bracket as given.
    pub bracket: [f64; 2],
    /// Sub-interval of the pre-scan in which the root was bisected.
    pub root_bracket: [f64; 2],
    /// More than one sign change was found in the pre-scan.
    pub non_monotone: bool,
}

/// Bisects the family's scale parameter until `|L - target| <= tol`.
///
/// The bracket is pre-scanned at `scan_points` equispaced values. When
/// several sign changes exist the one whose interval midpoint lies closest
/// to the bracket midpoint is used and `non_monotone` is set.
pub fn calibrate_arc_length(
    family: &dyn ScaleFamily,
    bracket: (f64, f64),
    settings: &CalibrationSettings,
) -> Result<CalibrationReport, OptimizeError> {
    let (lo, hi) = bracket;
    if !(lo < hi) || settings.scan_points < 2 {
        return Err(OptimizeError::NoBracket { lo, hi });
    }
    let excess = |p: f64| -> Result<(f64, f64), OptimizeError> {
        let l = family.curve(p)?.arc_length(&settings.rule)?.value;
        Ok((l - settings.target, l))
    };

    let m = settings.scan_points;
    let grid: Vec<f64> = (0..m).map(|k| lo + (hi - lo) * k as f64 / (m - 1) as f64).collect();
    let mut values = Vec::with_capacity(m);
    for &p in &grid {
        values.push(excess(p)?);
    }

    let report = |parameter: f64, (g, l): (f64, f64), iterations: usize, root: [f64; 2], non_monotone: bool| {
        CalibrationReport {
            family: family.tag(),
            parameter,
            arc_length: l,
            residual: g.abs(),
            iterations,
            bracket: [lo, hi],
            root_bracket: root,
            non_monotone,
        }
    };

    let mut changes = Vec::new();
    for k in 0..m - 1 {
        let (g0, g1) = (values[k].0, values[k + 1].0);
        if g0 == 0.0 || g0 * g1 < 0.0 {
            changes.push(k);
        }
    }
    if values[m - 1].0 == 0.0 {
        changes.push(m - 1);
    }
    let non_monotone = changes.len() > 1;
    let mid = 0.5 * (lo + hi);
    let Some(&k) = changes.iter().min_by(|&&a, &&b| {
        let ca = (0.5 * (grid[a] + grid[(a + 1).min(m - 1)]) - mid).abs();
        let cb = (0.5 * (grid[b] + grid[(b + 1).min(m - 1)]) - mid).abs();
        ca.total_cmp(&cb)
    }) else {
        return Err(OptimizeError::NoBracket { lo, hi });
    };
    if values[k].0.abs() <= settings.tol || k == m - 1 {
        return Ok(report(grid[k], values[k], 0, [grid[k], grid[k]], non_monotone));
    }

    let (mut a, mut b) = (grid[k], grid[k + 1]);
    let mut ga = values[k].0;
    let root_bracket = [a, b];
    let mut best = (a, values[k]);
    for iteration in 1..=settings.max_iterations {
        let c = 0.5 * (a + b);
        let gc = excess(c)?;
        if gc.0.abs() < best.1 .0.abs() {
            best = (c, gc);
        }
        if gc.0.abs() <= settings.tol {
            return Ok(report(c, gc, iteration, root_bracket, non_monotone));
        }
        if (gc.0 < 0.0) == (ga < 0.0) {
            a = c;
            ga = gc.0;
        } else {
            b = c;
        }
        if b - a <= f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
    }
    Err(OptimizeError::ToleranceNotMet {
        parameter: best.0,
        residual: best.1 .0.abs(),
    })
}

/// Objective minimized by [`minimize_functional`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    /// `M̃ = ∬_S S̃ dS`.
    #[serde(rename = "M_tilde")]
    MTilde,
    /// `max |S̃(P) - pi/2|` over a fixed 122-point design.
    #[serde(rename = "sup_dev_from_half_pi")]
    SupDevFromHalfPi,
    /// Monte Carlo mean nearest-point distance at a fixed seed.
    #[serde(rename = "mean_min")]
    MeanMin,
}

impl ObjectiveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectiveKind::MTilde => "M_tilde",
            ObjectiveKind::SupDevFromHalfPi => "sup_dev_from_half_pi",
            ObjectiveKind::MeanMin => "mean_min",
        }
    }
}

/// Optimizer settings. The wire form accepts
/// `{"objective": "...", "max_evals": 2000, "simplex_scale": 0.1, "seed": 42, "J": 3}`;
/// the remaining fields have defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub objective: ObjectiveKind,
    pub max_evals: usize,
    pub simplex_scale: f64,
    pub seed: u64,
    #[serde(rename = "J")]
    pub harmonics: usize,
    pub diameter_tol: f64,
    pub constraint_tol: f64,
    pub calibration: CalibrationSettings,
    pub design_points: usize,
    pub mean_min_points: usize,
    pub curve_rule: QuadratureRule,
    pub sphere_rule: QuadratureRule,
    pub simple_samples: usize,
    pub simple_eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            objective: ObjectiveKind::SupDevFromHalfPi,
            max_evals: 2000,
            simplex_scale: 0.1,
            seed: 42,
            harmonics: 3,
            diameter_tol: 1e-6,
            constraint_tol: 1e-4,
            calibration: CalibrationSettings {
                tol: 1e-6,
                ..CalibrationSettings::default()
            },
            design_points: 122,
            mean_min_points: 2000,
            curve_rule: QuadratureRule::trapezoid(512, 1e-8).expect("valid rule"),
            sphere_rule: QuadratureRule::gauss_legendre(16, 1e-6).expect("valid rule"),
            simple_samples: DEFAULT_SIMPLE_SAMPLES,
            simple_eps: DEFAULT_SIMPLE_EPS,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |m: &str| Err(OptimizeError::Config(m.into()));
        if self.max_evals == 0 {
            return bad("max_evals must be positive");
        }
        if !(self.simplex_scale > 0.0) {
            return bad("simplex_scale must be positive");
        }
        if self.harmonics == 0 {
            return bad("J must be at least 1");
        }
        if !(self.diameter_tol > 0.0) || !(self.constraint_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.calibration.tol > self.constraint_tol {
            return bad("calibration tolerance must not exceed the constraint tolerance");
        }
        if self.design_points == 0 || self.mean_min_points < 100 || self.simple_samples < 64 {
            return bad("design_points > 0, mean_min_points >= 100, simple_samples >= 64 required");
        }
        Ok(())
    }
}

/// A family searched by [`minimize_functional`]: free shape parameters plus
/// a scale fixed by calibration.
pub trait SearchFamily {
    fn tag(&self) -> String;
    fn initial(&self) -> Vec<f64>;
    fn scale_family(&self, shape: &[f64]) -> Result<Box<dyn ScaleFamily>, OptimizeError>;
    fn bracket(&self) -> (f64, f64);
}

/// Trigonometric search family; the shape vector is `(a, b, c)` up to scale.
#[derive(Debug, Clone)]
pub struct TrigSearchFamily {
    harmonics: usize,
    initial: Vec<f64>,
}

impl TrigSearchFamily {
    pub fn new(harmonics: usize, initial: Vec<f64>) -> Result<Self, OptimizeError> {
        TrigDirectionScale::new(initial.clone(), harmonics)?;
        Ok(Self { harmonics, initial })
    }

    /// Seeded at the tennis-ball seam: `a_1 = -(pi/2 - A)`, `c_2 = A`.
    pub fn seam_seeded(harmonics: usize, a: f64) -> Result<Self, OptimizeError> {
        if harmonics < 2 {
            return Err(OptimizeError::Config("the seam needs J >= 2".into()));
        }
        let mut v = vec![0.0; 3 * harmonics];
        v[0] = -(FRAC_PI_2 - a);
        v[2 * harmonics + 1] = a;
        Self::new(harmonics, v)
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }
}

impl SearchFamily for TrigSearchFamily {
    fn tag(&self) -> String {
        format!("trig_series(J={})", self.harmonics)
    }

    fn initial(&self) -> Vec<f64> {
        self.initial.clone()
    }

    fn scale_family(&self, shape: &[f64]) -> Result<Box<dyn ScaleFamily>, OptimizeError> {
        Ok(Box::new(TrigDirectionScale::new(shape.to_vec(), self.harmonics)?))
    }

    fn bracket(&self) -> (f64, f64) {
        (0.05, 2.5)
    }
}

/// A family with no free shape parameters.
pub struct FixedFamily<F: ScaleFamily + Clone + 'static> {
    family: F,
    bracket: (f64, f64),
}

impl<F: ScaleFamily + Clone + 'static> FixedFamily<F> {
    pub fn new(family: F) -> Self {
        let bracket = family.default_bracket();
        Self { family, bracket }
    }
}

impl<F: ScaleFamily + Clone + 'static> SearchFamily for FixedFamily<F> {
    fn tag(&self) -> String {
        self.family.tag()
    }

    fn initial(&self) -> Vec<f64> {
        Vec::new()
    }

    fn scale_family(&self, _shape: &[f64]) -> Result<Box<dyn ScaleFamily>, OptimizeError> {
        Ok(Box::new(self.family.clone()))
    }

    fn bracket(&self) -> (f64, f64) {
        self.bracket
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizationStatus {
    Converged,
    MaxEvaluationsReached,
}

/// Accepted improvement of the best feasible objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub evaluation: usize,
    pub objective: f64,
    pub scale: f64,
    pub arc_length_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub objective: ObjectiveKind,
    pub family: String,
    pub initial_parameters: Vec<f64>,
    pub initial_objective: f64,
    pub best_parameters: Vec<f64>,
    pub best_scale: f64,
    pub best_objective: f64,
    pub best_curve: CurveSpec,
    pub constraint_residual: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub status: OptimizationStatus,
    pub trace: Vec<TraceEntry>,
}

/// Objective value of a curve that already satisfies the length constraint,
/// or `+inf` when the curve is not closed, misses the length, or is not simple.
pub fn candidate_objective(
    curve: &SphericalCurve,
    objective: ObjectiveKind,
    config: &OptimizerConfig,
) -> Result<f64, OptimizeError> {
    if !curve.is_closed(1e-8) {
        return Ok(f64::INFINITY);
    }
    let length = curve.arc_length(&config.calibration.rule)?.value;
    if (length - config.calibration.target).abs() > config.constraint_tol {
        return Ok(f64::INFINITY);
    }
    if !curve.is_simple(config.simple_samples, config.simple_eps)?.simple {
        return Ok(f64::INFINITY);
    }
    let value = match objective {
        ObjectiveKind::MTilde => sphere_to_curve_mean(curve, &config.sphere_rule, &config.curve_rule)?.integral.value,
        ObjectiveKind::SupDevFromHalfPi => {
            let mut worst = 0.0f64;
            for q in fibonacci_design(config.design_points) {
                let s = point_to_curve_mean(curve, &q.to_spherical(), &config.curve_rule)?.value;
                worst = worst.max((s - FRAC_PI_2).abs());
            }
            worst
        }
        ObjectiveKind::MeanMin => mean_min_arc_distance(curve, config.mean_min_points, config.seed)?.value,
    };
    Ok(if value.is_nan() { f64::INFINITY } else { value })
}

struct Evaluated {
    objective: f64,
    scale: f64,
    residual: f64,
    curve: Option<SphericalCurve>,
}

struct Search<'a> {
    family: &'a dyn SearchFamily,
    objective: ObjectiveKind,
    config: &'a OptimizerConfig,
    evaluations: usize,
    best: Option<(Vec<f64>, Evaluated)>,
    trace: Vec<TraceEntry>,
}

impl Search<'_> {
    fn budget_left(&self) -> bool {
        self.evaluations < self.config.max_evals
    }

    fn evaluate(&mut self, shape: &[f64]) -> Result<f64, OptimizeError> {
        self.evaluations += 1;
        let e = self.score(shape)?;
        let value = e.objective;
        let improves = value.is_finite() && self.best.as_ref().is_none_or(|(_, b)| value < b.objective);
        if improves {
            self.trace.push(TraceEntry {
                evaluation: self.evaluations,
                objective: value,
                scale: e.scale,
                arc_length_residual: e.residual,
            });
            self.best = Some((shape.to_vec(), e));
        }
        Ok(value)
    }

    fn score(&self, shape: &[f64]) -> Result<Evaluated, OptimizeError> {
        let infeasible = Evaluated {
            objective: f64::INFINITY,
            scale: f64::NAN,
            residual: f64::INFINITY,
            curve: None,
        };
        let Ok(scale_family) = self.family.scale_family(shape) else {
            return Ok(infeasible);
        };
        let calibration = match calibrate_arc_length(scale_family.as_ref(), self.family.bracket(), &self.config.calibration) {
            Ok(c) => c,
            Err(_) => return Ok(infeasible),
        };
        let curve = match scale_family.curve(calibration.parameter) {
            Ok(c) => c,
            Err(_) => return Ok(infeasible),
        };
        let objective = candidate_objective(&curve, self.objective, self.config)?;
        Ok(Evaluated {
            objective,
            scale: calibration.parameter,
            residual: calibration.residual,
            curve: Some(curve),
        })
    }
}

/// Nelder–Mead over the family's shape parameters (reflection 1, expansion
/// 2, contraction 0.5, shrink 0.5), recalibrating the scale at every trial
/// point. Infeasible candidates score `+inf`. Stops when the simplex
/// diameter drops below `diameter_tol` or after `max_evals` evaluations.
pub fn minimize_functional(
    family: &dyn SearchFamily,
    objective: ObjectiveKind,
    config: &OptimizerConfig,
) -> Result<OptimizationReport, OptimizeError> {
    config.validate()?;
    let mut search = Search {
        family,
        objective,
        config,
        evaluations: 0,
        best: None,
        trace: Vec::new(),
    };

    let x0 = family.initial();
    let f0 = search.evaluate(&x0)?;
    if !f0.is_finite() {
        let scale_family = family.scale_family(&x0)?;
        return Err(
            match calibrate_arc_length(scale_family.as_ref(), family.bracket(), &config.calibration) {
                Err(e) => OptimizeError::CalibrationFailed(e.to_string()),
                Ok(_) => OptimizeError::InfeasibleStart("calibrated initial curve is not simple".into()),
            },
        );
    }

    let dim = x0.len();
    let status = if dim == 0 {
        OptimizationStatus::Converged
    } else {
        nelder_mead(&mut search, x0.clone(), f0)?
    };

    let (best_x, best) = search.best.take().expect("initial point is feasible");
    let curve = best.curve.expect("feasible points carry a curve");
    Ok(OptimizationReport {
        objective,
        family: family.tag(),
        initial_parameters: x0,
        initial_objective: f0,
        best_parameters: best_x,
        best_scale: best.scale,
        best_objective: best.objective,
        best_curve: CurveSpec::from(&curve),
        constraint_residual: best.residual,
        evaluations: search.evaluations,
        converged: status == OptimizationStatus::Converged,
        status,
        trace: search.trace,
    })
}

fn nelder_mead(search: &mut Search<'_>, x0: Vec<f64>, f0: f64) -> Result<OptimizationStatus, OptimizeError> {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let dim = x0.len();
    let scale = search.config.simplex_scale;
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.clone(), f0)];
    for i in 0..dim {
        if !search.budget_left() {
            return Ok(OptimizationStatus::MaxEvaluationsReached);
        }
        let mut x = x0.clone();
        x[i] += scale;
        let f = search.evaluate(&x)?;
        simplex.push((x, f));
    }

    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect()
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if diameter < search.config.diameter_tol {
            return Ok(OptimizationStatus::Converged);
        }
        if !search.budget_left() {
            return Ok(OptimizationStatus::MaxEvaluationsReached);
        }

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let (worst_x, worst_f) = simplex[dim].clone();
        let second_worst_f = simplex[dim - 1].1;
        let best_f = simplex[0].1;

        let xr = combine(&centroid, &worst_x, -REFLECT);
        let fr = search.evaluate(&xr)?;
        if fr < best_f {
            if !search.budget_left() {
                simplex[dim] = (xr, fr);
                continue;
            }
            let xe = combine(&centroid, &xr, EXPAND);
            let fe = search.evaluate(&xe)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst_f {
            simplex[dim] = (xr, fr);
            continue;
        }
        if !search.budget_left() {
            if fr < worst_f {
                simplex[dim] = (xr, fr);
            }
            continue;
        }
        let (xc, fc, accept) = if fr < worst_f {
            let xc = combine(&centroid, &xr, CONTRACT);
            let fc = search.evaluate(&xc)?;
            (xc, fc, fc <= fr)
        } else {
            let xc = combine(&centroid, &worst_x, CONTRACT);
            let fc = search.evaluate(&xc)?;
            (xc, fc, fc < worst_f)
        };
        if accept {
            simplex[dim] = (xc, fc);
            continue;
        }
        let best_x = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if !search.budget_left() {
                return Ok(OptimizationStatus::MaxEvaluationsReached);
            }
            let x = combine(&best_x, &vertex.0, SHRINK);
            let f = search.evaluate(&x)?;
            *vertex = (x, f);
        }
    }
}

/// Builds a search family from a curve spec: trigonometric series become a
/// seeded [`TrigSearchFamily`]; the named families have no free shape.
pub fn search_family_for(curve: &CurveSpec, harmonics: usize) -> Result<Box<dyn SearchFamily>, OptimizeError> {
    let built = curve.build()?;
    Ok(match built.family() {
        CurveFamily::TennisBallSeam { .. } => Box::new(FixedFamily::new(TennisBallScale)),
        CurveFamily::WavyCircle { .. } => Box::new(FixedFamily::new(WavyCircleScale)),
        CurveFamily::GreatCircle => Box::new(FixedFamily::new(GreatCircleDomainScale)),
        CurveFamily::TrigSeries(s) => {
            let j = harmonics;
            let take = |v: &[f64]| (0..j).map(|k| v.get(k).copied().unwrap_or(0.0)).collect::<Vec<_>>();
            let mut shape = take(&s.theta_cos);
            shape.extend(take(&s.theta_sin));
            shape.extend(take(&s.phi_sin));
            if shape.iter().all(|v| *v == 0.0) {
                return Ok(Box::new(TrigSearchFamily::seam_seeded(j, TENNIS_BALL_A)?));
            }
            Box::new(TrigSearchFamily::new(j, shape)?)
        }
    })
}

/// Scale family matching a curve spec, for calibration.
pub fn scale_family_for(curve: &CurveSpec, harmonics: usize) -> Result<Box<dyn ScaleFamily>, OptimizeError> {
    let search = search_family_for(curve, harmonics)?;
    let initial = search.initial();
    search.scale_family(&initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn seam_calibration() {
        let r = calibrate_arc_length(&TennisBallScale, (0.1, 1.4), &CalibrationSettings::default()).unwrap();
        assert!((r.parameter - 0.7037).abs() < 5e-4, "{r:?}");
        assert!(r.residual <= 1e-9);
        assert!(!r.non_monotone);
    }

    #[test]
    fn great_circle_identity_calibration() {
        let settings = CalibrationSettings {
            tol: 1e-11,
            ..CalibrationSettings::default()
        };
        let r = calibrate_arc_length(&GreatCircleDomainScale, (0.5, 1.7), &settings).unwrap();
        assert!((r.parameter - 1.0).abs() < 1e-9, "{}", r.parameter);
    }

    #[test]
    fn calibration_is_deterministic() {
        let s = CalibrationSettings::default();
        let a = calibrate_arc_length(&WavyCircleScale, (0.01, 0.6), &s).unwrap();
        let b = calibrate_arc_length(&WavyCircleScale, (0.01, 0.6), &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_bracket() {
        let err = calibrate_arc_length(&TennisBallScale, (0.1, 0.3), &CalibrationSettings::default()).unwrap_err();
        assert!(matches!(err, OptimizeError::NoBracket { .. }));
    }

    struct Bumpy;

    impl ScaleFamily for Bumpy {
        fn tag(&self) -> String {
            "bumpy".into()
        }
        // length 4pi * (1 + 0.5 sin(6s)) crosses the target several times
        fn curve(&self, s: f64) -> Result<SphericalCurve, CurveError> {
            let w = 2.0 * (1.0 + 0.5 * (6.0 * s).sin());
            Ok(SphericalCurve::great_circle().with_domain(CurveDomain::new(0.0, w)?))
        }
        fn default_bracket(&self) -> (f64, f64) {
            (0.1, 2.0)
        }
    }

    #[test]
    fn multiple_sign_changes_are_flagged() {
        let r = calibrate_arc_length(&Bumpy, (0.1, 2.0), &CalibrationSettings::default()).unwrap();
        assert!(r.non_monotone);
        // roots at k pi / 6; the one nearest the midpoint 1.05 is pi/3
        assert!((r.parameter - PI / 3.0).abs() < 1e-6, "{}", r.parameter);
    }

    #[test]
    fn seam_embeds_in_search_family() {
        let fam = TrigSearchFamily::seam_seeded(3, TENNIS_BALL_A).unwrap();
        let scale = fam.scale_family(&fam.initial()).unwrap();
        let c = scale.curve(fam.initial().iter().map(|v| v * v).sum::<f64>().sqrt()).unwrap();
        let seam = SphericalCurve::tennis_ball(TENNIS_BALL_A).unwrap();
        for i in 0..50 {
            let t = 0.25 * i as f64;
            assert!(c.position(t).chord_squared(&seam.position(t)).sqrt() < 1e-14);
        }
    }

    #[test]
    fn doubled_great_circle_is_infeasible() {
        let config = OptimizerConfig::default();
        let v = candidate_objective(&SphericalCurve::great_circle(), ObjectiveKind::SupDevFromHalfPi, &config).unwrap();
        assert_eq!(v, f64::INFINITY);
    }

    #[test]
    fn fixed_family_takes_one_evaluation() {
        let config = OptimizerConfig {
            objective: ObjectiveKind::MeanMin,
            ..OptimizerConfig::default()
        };
        let fam = FixedFamily::new(TennisBallScale);
        let r = minimize_functional(&fam, ObjectiveKind::MeanMin, &config).unwrap();
        assert_eq!(r.evaluations, 1);
        assert!(r.converged);
        assert!(r.best_parameters.is_empty());
        assert!((r.best_scale - 0.7037).abs() < 5e-4);
        assert_eq!(r.best_objective, r.initial_objective);
    }

    #[test]
    fn single_evaluation_budget() {
        let config = OptimizerConfig {
            max_evals: 1,
            ..OptimizerConfig::default()
        };
        let fam = TrigSearchFamily::seam_seeded(3, TENNIS_BALL_A).unwrap();
        let r = minimize_functional(&fam, ObjectiveKind::SupDevFromHalfPi, &config).unwrap();
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.status, OptimizationStatus::MaxEvaluationsReached);
        assert_eq!(r.best_parameters, r.initial_parameters);
    }

    #[test]
    fn config_wire_form() {
        let c: OptimizerConfig = serde_json::from_str(
            r#"{"objective": "M_tilde", "max_evals": 2000, "simplex_scale": 0.1, "seed": 42, "J": 3}"#,
        )
        .unwrap();
        assert_eq!(c.objective, ObjectiveKind::MTilde);
        assert_eq!(c.harmonics, 3);
        assert!(serde_json::from_str::<OptimizerConfig>(r#"{"objective": "other"}"#).is_err());
        assert!(serde_json::from_str::<OptimizerConfig>(r#"{"iters": 3}"#).is_err());
        let bad = OptimizerConfig {
            max_evals: 0,
            ..OptimizerConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn infeasible_start_is_an_error() {
        let fam = TrigSearchFamily::new(1, vec![0.0, 0.0, 0.0]).unwrap();
        let err = minimize_functional(&fam, ObjectiveKind::MeanMin, &OptimizerConfig::default()).unwrap_err();
        assert!(matches!(err, OptimizeError::CalibrationFailed(_)));
    }
}

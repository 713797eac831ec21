//! Arc-distance functionals between points, curves and the sphere.
//!
//! | name | meaning |
//! |------|---------|
//! | `D̄(q)` | mean distance from a fixed point `q` to the whole sphere |
//! | `M` | `pi/2` times the arc-length of a curve |
//! | `S̃(P)` | parameter-mean distance from a sphere point `P` to a curve |
//! | `M̃` | `∬_S S̃(P) dS`, unnormalized |
//! | mean-min | average over the sphere of the distance to the nearest curve point |
//!
//! The series argument for `D̄ = pi/2` expands `arcsin(D sin θ + E cos θ)`
//! with `D = A cos φ + B sin φ` and claims each term
//! `∫ D^k E^(2n+1-k) dφ` vanishes. For even `k` the `φ`-integral of `D^k` is
//! strictly positive, so the termwise statement does not hold as written;
//! only the aggregate integral is checked here, by
//! [`arcsin_identity_residual`].

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{CurveError, SphericalCurve};
use crate::geometry::{
    geodesic_distance, geodesic_distance_from_chord, uniform_sphere_sample, SpherePoint, UnitVector,
};
use crate::quadrature::{
    integrate_1d, sphere_integrate, sphere_integrate_with_error, trapezoid_nested, FunctionalResult,
    QuadratureError, QuadratureRule, RuleKind,
};

pub const DEFAULT_SCAN: usize = 4096;

/// Finest trapezoid level used for the inner curve integrals of
/// [`sphere_to_curve_mean`].
const INNER_TABLE_MAX: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("curve is not closed")]
    NotClosed,
    #[error("{0}")]
    InvalidArgument(String),
}

/// How the mean over a curve is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `1/(t_f - t_i) ∫ ... dt`.
    #[default]
    Parameter,
    /// `∫ ... |r'| dt / ∫ |r'| dt`.
    ArcLength,
}

/// `D̄(q) = (1/4pi) ∬_S dist(q, P) dS`. Equals `pi/2` for every `q`.
pub fn mean_point_to_sphere(q: &UnitVector, rule: &QuadratureRule) -> Result<FunctionalResult, FunctionalError> {
    let r = sphere_integrate(|p| geodesic_distance(q, p), rule)?;
    Ok(r.scaled(1.0 / (4.0 * PI)))
}

/// `∫_0^{2pi} ∫_0^pi sin θ arcsin(D sin θ + E cos θ) dθ dφ` for `q = (A, B, E)`,
/// with `D = A cos φ + B sin φ`. Vanishes for every unit `q`.
pub fn arcsin_identity_residual(q: &UnitVector, rule: &QuadratureRule) -> Result<FunctionalResult, FunctionalError> {
    let (a, b, e) = (q.x(), q.y(), q.z());
    let r = sphere_integrate(
        |p| {
            let sin_theta = p.x().hypot(p.y());
            let cos_theta = p.z();
            let d = if sin_theta > 0.0 {
                (a * p.x() + b * p.y()) / sin_theta
            } else {
                0.0
            };
            (d * sin_theta + e * cos_theta).clamp(-1.0, 1.0).asin()
        },
        rule,
    )?;
    Ok(r)
}

/// `M = (pi/2) * arc_length(c)`.
#[allow(non_snake_case)]
pub fn curve_to_sphere_mean_M(c: &SphericalCurve, rule: &QuadratureRule) -> Result<FunctionalResult, FunctionalError> {
    if !c.is_closed(1e-8) {
        return Err(FunctionalError::NotClosed);
    }
    Ok(c.arc_length(rule)?.scaled(FRAC_PI_2))
}

/// `S̃(P)`: the parameter-mean geodesic distance from `p` to the curve.
pub fn point_to_curve_mean(
    c: &SphericalCurve,
    p: &SpherePoint,
    rule: &QuadratureRule,
) -> Result<FunctionalResult, FunctionalError> {
    point_to_curve_mean_weighted(c, p, rule, Weighting::Parameter)
}

pub fn point_to_curve_mean_weighted(
    c: &SphericalCurve,
    p: &SpherePoint,
    rule: &QuadratureRule,
    weighting: Weighting,
) -> Result<FunctionalResult, FunctionalError> {
    let q = p.to_unit_vector();
    let d = c.domain();
    match weighting {
        Weighting::Parameter => {
            let r = integrate_1d(|t| geodesic_distance(&q, &c.position(t)), d.start(), d.end(), rule)?;
            Ok(r.scaled(1.0 / d.width()))
        }
        Weighting::ArcLength => {
            let num = integrate_1d(
                |t| geodesic_distance(&q, &c.position(t)) * c.speed(t),
                d.start(),
                d.end(),
                rule,
            )?;
            let den = c.arc_length(rule)?;
            if !(den.value > 0.0) {
                return Err(FunctionalError::InvalidArgument("curve has zero length".into()));
            }
            let value = num.value / den.value;
            Ok(FunctionalResult {
                value,
                error_estimate: (num.error_estimate + value.abs() * den.error_estimate) / den.value,
                nodes_used: num.nodes_used + den.nodes_used,
                converged: num.converged && den.converged,
            })
        }
    }
}

/// `M̃ = ∬_S S̃(P) dS` together with its normalized form `M̃ / 4pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereToCurveMean {
    pub integral: FunctionalResult,
    pub normalized: FunctionalResult,
}

/// Surface integral of `S̃` over the sphere. The inner curve integrals use
/// `curve_rule`; for the trapezoid rule curve positions are tabulated once
/// and shared by every sphere node.
pub fn sphere_to_curve_mean(
    c: &SphericalCurve,
    sphere_rule: &QuadratureRule,
    curve_rule: &QuadratureRule,
) -> Result<SphereToCurveMean, FunctionalError> {
    let width = c.domain().width();
    let integral = if curve_rule.kind() == RuleKind::PeriodicTrapezoid {
        let table = CurveTable::new(c, curve_rule.n());
        sphere_integrate_with_error(|p| table.mean_distance(p, curve_rule.tol()), sphere_rule)?
    } else {
        // non-finite inner values surface as NaN and are reported by the outer rule
        sphere_integrate_with_error(
            |p| {
                let d = c.domain();
                match integrate_1d(|t| geodesic_distance(p, &c.position(t)), d.start(), d.end(), curve_rule) {
                    Ok(r) => (r.value / width, r.error_estimate / width),
                    Err(_) => (f64::NAN, f64::NAN),
                }
            },
            sphere_rule,
        )?
    };
    Ok(SphereToCurveMean {
        integral,
        normalized: integral.scaled(1.0 / (4.0 * PI)),
    })
}

/// Curve positions on the finest trapezoid level that the inner integrals
/// of [`sphere_to_curve_mean`] may refine to.
struct CurveTable {
    points: Vec<UnitVector>,
    n0: usize,
}

impl CurveTable {
    fn new(c: &SphericalCurve, n0: usize) -> Self {
        let mut size = n0;
        while size * 2 <= INNER_TABLE_MAX {
            size *= 2;
        }
        let size = size.max(2 * n0);
        let d = c.domain();
        let points = (0..=size)
            .map(|i| c.position(d.start() + d.width() * i as f64 / size as f64))
            .collect();
        Self { points, n0 }
    }

    fn mean_distance(&self, p: &UnitVector, tol: f64) -> (f64, f64) {
        let size = self.points.len() - 1;
        let r = trapezoid_nested(
            |i, n| geodesic_distance(p, &self.points[i * (size / n)]),
            1.0,
            self.n0,
            tol,
            size,
        );
        match r {
            Ok(r) => (r.value, r.error_estimate),
            Err(_) => (f64::NAN, f64::NAN),
        }
    }
}

/// Nearest curve point to a sphere point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinDistance {
    pub distance: f64,
    pub t: f64,
}

/// Precomputed scan of a curve for repeated nearest-point queries.
pub struct NearestPointScanner<'a> {
    curve: &'a SphericalCurve,
    params: Vec<f64>,
    points: Vec<UnitVector>,
    closed: bool,
}

impl<'a> NearestPointScanner<'a> {
    pub fn new(curve: &'a SphericalCurve, n_scan: usize) -> Result<Self, FunctionalError> {
        if n_scan < 64 {
            return Err(FunctionalError::InvalidArgument(format!("n_scan = {n_scan} must be at least 64")));
        }
        let d = curve.domain();
        let closed = curve.is_closed(1e-12);
        let count = if closed { n_scan } else { n_scan + 1 };
        let params: Vec<f64> = (0..count)
            .map(|i| d.start() + d.width() * i as f64 / n_scan as f64)
            .collect();
        let points = params.iter().map(|&t| curve.position(t)).collect();
        Ok(Self {
            curve,
            params,
            points,
            closed,
        })
    }

    /// Dense scan followed by golden-section refinement in the bracket
    /// around the best sample. Ties go to the smallest parameter.
    pub fn nearest(&self, p: &UnitVector) -> MinDistance {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (i, q) in self.points.iter().enumerate() {
            let d2 = q.chord_squared(p);
            if d2 < best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        let dom = self.curve.domain();
        let h = dom.width() / if self.closed { self.points.len() } else { self.points.len() - 1 } as f64;
        let center = self.params[best];
        let (mut lo, mut hi) = (center - h, center + h);
        if !self.closed {
            lo = lo.max(dom.start());
            hi = hi.min(dom.end());
        }
        let dist2 = |t: f64| self.curve.position(t).chord_squared(p);
        let (refined, refined_d2) = golden_section(dist2, lo, hi, 1e-10);
        let t = dom.wrap(if refined_d2 <= best_d2 { refined } else { center });
        MinDistance {
            distance: geodesic_distance_from_chord(p, &self.curve.position(t)),
            t,
        }
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Minimum geodesic distance from `p` to the curve and the parameter where
/// it is attained.
pub fn point_to_curve_min(c: &SphericalCurve, p: &SpherePoint, n_scan: usize) -> Result<MinDistance, FunctionalError> {
    Ok(NearestPointScanner::new(c, n_scan)?.nearest(&p.to_unit_vector()))
}

/// Arithmetic mean of the nearest-point distance over `n_points` uniform
/// sphere samples, with its standard error.
pub fn mean_min_arc_distance(c: &SphericalCurve, n_points: usize, seed: u64) -> Result<FunctionalResult, FunctionalError> {
    if n_points < 100 {
        return Err(FunctionalError::InvalidArgument(format!("n_points = {n_points} must be at least 100")));
    }
    let scanner = NearestPointScanner::new(c, DEFAULT_SCAN)?;
    let pts = uniform_sphere_sample(seed, n_points)
        .map_err(|e| FunctionalError::InvalidArgument(e.to_string()))?;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, p) in pts.iter().enumerate() {
        let v = scanner.nearest(&p.to_unit_vector()).distance;
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let n = n_points as f64;
    Ok(FunctionalResult {
        value: mean,
        error_estimate: (m2 / (n - 1.0) / n).sqrt(),
        nodes_used: n_points,
        converged: true,
    })
}

/// Imbalances of the stationarity conditions of `arccos(P · r)` with respect
/// to `theta` and `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ELResidual {
    /// `sin θ0 cos θ cos(φ0 - φ) - cos θ0 sin θ`
    pub res_theta: f64,
    /// `sin θ0 sin θ sin(φ0 - φ)`
    pub res_phi: f64,
}

pub fn el_residuals(theta: f64, phi: f64, p: &SpherePoint) -> ELResidual {
    let (s0, c0) = p.theta().sin_cos();
    let (s, c) = theta.sin_cos();
    let (sd, cd) = (p.phi() - phi).sin_cos();
    ELResidual {
        res_theta: s0 * c * cd - c0 * s,
        res_phi: s0 * s * sd,
    }
}

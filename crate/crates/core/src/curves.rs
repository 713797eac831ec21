//! Closed curve families on the unit sphere.
//!
//! Families are given by colatitude/longitude functions `theta(t)`,
//! `phi(t)` except the great circle, which is given directly in Cartesian
//! form as `(sin 2pi t, 0, cos 2pi t)`.
//!
//! The tennis-ball seam uses the parameter domain `[0, 4pi]`: its longitude
//! advances by `t/2`, so a full turn needs `4pi` of parameter, over which the
//! colatitude completes two oscillations.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Rotation, SpherePoint, UnitVector};
use crate::quadrature::{integrate_1d, FunctionalResult, QuadratureError, QuadratureRule};

/// Published seam amplitude, used as the default when none is given.
pub const TENNIS_BALL_A: f64 = 0.7037;
/// Published wavy-circle amplitude, used as the default when none is given.
pub const WAVY_CIRCLE_B: f64 = 0.1856;

pub const DEFAULT_SIMPLE_SAMPLES: usize = 4096;
pub const DEFAULT_SIMPLE_EPS: f64 = 1e-4;

const FD_STEP_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("domain [{0}, {1}] must satisfy t_f > t_i")]
    EmptyDomain(f64, f64),
    #[error("parameter {name} = {value} outside {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("non-finite curve parameter")]
    NonFinite,
    #[error("n_samples = {0} must be at least 64")]
    TooFewSamples(usize),
    #[error("invalid curve spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct CurveDomain {
    t_i: f64,
    t_f: f64,
}

impl CurveDomain {
    pub fn new(t_i: f64, t_f: f64) -> Result<Self, CurveError> {
        if !t_i.is_finite() || !t_f.is_finite() {
            return Err(CurveError::NonFinite);
        }
        if t_f <= t_i {
            return Err(CurveError::EmptyDomain(t_i, t_f));
        }
        Ok(Self { t_i, t_f })
    }

    pub fn start(&self) -> f64 {
        self.t_i
    }

    pub fn end(&self) -> f64 {
        self.t_f
    }

    pub fn width(&self) -> f64 {
        self.t_f - self.t_i
    }

    /// Maps `t` periodically into the domain; values inside are unchanged.
    pub fn wrap(&self, t: f64) -> f64 {
        if t >= self.t_i && t <= self.t_f {
            t
        } else {
            self.t_i + (t - self.t_i).rem_euclid(self.width())
        }
    }
}

impl TryFrom<[f64; 2]> for CurveDomain {
    type Error = CurveError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        CurveDomain::new(v[0], v[1])
    }
}

impl From<CurveDomain> for [f64; 2] {
    fn from(d: CurveDomain) -> Self {
        [d.t_i, d.t_f]
    }
}

/// Truncated Fourier description of a curve:
///
/// `theta(t) = theta0 + sum_j theta_cos[j] cos((j+1)t) + theta_sin[j] sin((j+1)t)`
/// `phi(t)   = phi0 + phi_rate t + sum_j phi_sin[j] sin((j+1)t) + phi_cos[j] cos((j+1)t)`
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSeries {
    #[serde(default)]
    pub theta0: f64,
    #[serde(default)]
    pub theta_cos: Vec<f64>,
    #[serde(default)]
    pub theta_sin: Vec<f64>,
    #[serde(default)]
    pub phi0: f64,
    #[serde(default)]
    pub phi_rate: f64,
    #[serde(default)]
    pub phi_sin: Vec<f64>,
    #[serde(default)]
    pub phi_cos: Vec<f64>,
}

impl TrigSeries {
    /// Latitude circle at colatitude `theta` swept at angular rate `rate`.
    pub fn latitude_circle(theta: f64, rate: f64) -> Self {
        Self {
            theta0: theta,
            phi_rate: rate,
            ..Self::default()
        }
    }

    /// A curve that never leaves the point `p`.
    pub fn constant(p: SpherePoint) -> Self {
        Self {
            theta0: p.theta(),
            phi0: p.phi(),
            ..Self::default()
        }
    }

    fn angles(&self, t: f64) -> (f64, f64) {
        let mut theta = self.theta0;
        let mut phi = self.phi0 + self.phi_rate * t;
        let harmonics = self
            .theta_cos
            .len()
            .max(self.theta_sin.len())
            .max(self.phi_sin.len())
            .max(self.phi_cos.len());
        for j in 0..harmonics {
            let (s, c) = ((j + 1) as f64 * t).sin_cos();
            theta += coeff(&self.theta_cos, j) * c + coeff(&self.theta_sin, j) * s;
            phi += coeff(&self.phi_sin, j) * s + coeff(&self.phi_cos, j) * c;
        }
        (theta, phi)
    }

    fn all_finite(&self) -> bool {
        [self.theta0, self.phi0, self.phi_rate].iter().all(|v| v.is_finite())
            && [&self.theta_cos, &self.theta_sin, &self.phi_sin, &self.phi_cos]
                .iter()
                .all(|v| v.iter().all(|c| c.is_finite()))
    }
}

fn coeff(v: &[f64], j: usize) -> f64 {
    v.get(j).copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveFamily {
    /// `(sin 2pi t, 0, cos 2pi t)`.
    GreatCircle,
    /// `theta = pi/2 - (pi/2 - A) cos t`, `phi = t/2 + A sin 2t`.
    TennisBallSeam { a: f64 },
    /// `theta = 3pi/4 + B sin 10t`, `phi = t`.
    WavyCircle { b: f64 },
    TrigSeries(TrigSeries),
}

impl CurveFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            CurveFamily::GreatCircle => "great_circle",
            CurveFamily::TennisBallSeam { .. } => "tennis_ball",
            CurveFamily::WavyCircle { .. } => "wavy_circle",
            CurveFamily::TrigSeries(_) => "trig_series",
        }
    }

    /// Natural parameter domain of the family.
    pub fn natural_domain(&self) -> CurveDomain {
        let (a, b) = match self {
            CurveFamily::GreatCircle => (0.0, 2.0),
            CurveFamily::TennisBallSeam { .. } => (0.0, 2.0 * TAU),
            CurveFamily::WavyCircle { .. } => (0.0, TAU),
            CurveFamily::TrigSeries(s) if s.phi_rate != 0.0 => (0.0, TAU / s.phi_rate.abs()),
            CurveFamily::TrigSeries(_) => (0.0, TAU),
        };
        CurveDomain { t_i: a, t_f: b }
    }

    fn validate(&self) -> Result<(), CurveError> {
        match self {
            CurveFamily::GreatCircle => Ok(()),
            CurveFamily::TennisBallSeam { a } => check_open(*a, "A", 0.0, FRAC_PI_2, "(0, pi/2)"),
            CurveFamily::WavyCircle { b } => check_open(*b, "B", 0.0, FRAC_PI_4, "(0, pi/4)"),
            CurveFamily::TrigSeries(s) if s.all_finite() => Ok(()),
            CurveFamily::TrigSeries(_) => Err(CurveError::NonFinite),
        }
    }

    fn raw_position(&self, t: f64) -> UnitVector {
        match self {
            CurveFamily::GreatCircle => {
                let (s, c) = (TAU * t).sin_cos();
                UnitVector::from_components_unchecked(s, 0.0, c)
            }
            CurveFamily::TennisBallSeam { a } => {
                let theta = FRAC_PI_2 - (FRAC_PI_2 - a) * t.cos();
                let phi = 0.5 * t + a * (2.0 * t).sin();
                from_angles(theta, phi)
            }
            CurveFamily::WavyCircle { b } => {
                let theta = 3.0 * FRAC_PI_4 + b * (10.0 * t).sin();
                from_angles(theta, t)
            }
            CurveFamily::TrigSeries(s) => {
                let (theta, phi) = s.angles(t);
                from_angles(theta, phi)
            }
        }
    }
}

fn check_open(v: f64, name: &'static str, lo: f64, hi: f64, range: &'static str) -> Result<(), CurveError> {
    if !v.is_finite() {
        return Err(CurveError::NonFinite);
    }
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(CurveError::ParameterOutOfRange { name, value: v, range })
    }
}

/// Colatitudes outside `[0, pi]` are allowed here; the Cartesian formula is
/// the same one used by the parametric equations.
fn from_angles(theta: f64, phi: f64) -> UnitVector {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    UnitVector::from_components_unchecked(st * cp, st * sp, ct)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCurve {
    family: CurveFamily,
    domain: CurveDomain,
    rotation: Option<Rotation>,
}

impl SphericalCurve {
    pub fn new(family: CurveFamily, domain: CurveDomain) -> Result<Self, CurveError> {
        family.validate()?;
        Ok(Self {
            family,
            domain,
            rotation: None,
        })
    }

    pub fn with_natural_domain(family: CurveFamily) -> Result<Self, CurveError> {
        let domain = family.natural_domain();
        Self::new(family, domain)
    }

    /// The doubled great circle on `[0, 2]` (arc-length `4pi`).
    pub fn great_circle() -> Self {
        Self::with_natural_domain(CurveFamily::GreatCircle).expect("valid")
    }

    pub fn tennis_ball(a: f64) -> Result<Self, CurveError> {
        Self::with_natural_domain(CurveFamily::TennisBallSeam { a })
    }

    pub fn wavy_circle(b: f64) -> Result<Self, CurveError> {
        Self::with_natural_domain(CurveFamily::WavyCircle { b })
    }

    pub fn trig_series(series: TrigSeries, domain: CurveDomain) -> Result<Self, CurveError> {
        Self::new(CurveFamily::TrigSeries(series), domain)
    }

    pub fn with_domain(mut self, domain: CurveDomain) -> Self {
        self.domain = domain;
        self
    }

    /// The same curve rigidly rotated by `r` (composed with any existing rotation).
    pub fn rotated(mut self, r: Rotation) -> Self {
        self.rotation = Some(match self.rotation {
            None => r,
            Some(prev) => compose(&r, &prev),
        });
        self
    }

    pub fn family(&self) -> &CurveFamily {
        &self.family
    }

    pub fn domain(&self) -> CurveDomain {
        self.domain
    }

    pub fn rotation(&self) -> Option<&Rotation> {
        self.rotation.as_ref()
    }

    pub(crate) fn raw_position(&self, t: f64) -> UnitVector {
        let p = self.family.raw_position(t);
        match &self.rotation {
            None => p,
            Some(r) => {
                let [x, y, z] = r.apply_array(p.to_array());
                UnitVector::from_components_unchecked(x, y, z)
            }
        }
    }

    /// Position at `t`; parameters outside the domain are wrapped periodically.
    pub fn position(&self, t: f64) -> UnitVector {
        self.raw_position(self.domain.wrap(t))
    }

    /// `dr/dt` by central difference with step `(t_f - t_i) * 1e-6`.
    pub fn velocity(&self, t: f64) -> [f64; 3] {
        let h = self.domain.width() * FD_STEP_FRACTION;
        let p = self.raw_position(t + h).to_array();
        let m = self.raw_position(t - h).to_array();
        [
            (p[0] - m[0]) / (2.0 * h),
            (p[1] - m[1]) / (2.0 * h),
            (p[2] - m[2]) / (2.0 * h),
        ]
    }

    pub fn speed(&self, t: f64) -> f64 {
        let [x, y, z] = self.velocity(t);
        (x * x + y * y + z * z).sqrt()
    }

    pub fn arc_length(&self, rule: &QuadratureRule) -> Result<FunctionalResult, QuadratureError> {
        integrate_1d(|t| self.speed(t), self.domain.t_i, self.domain.t_f, rule)
    }

    pub fn is_closed(&self, eps: f64) -> bool {
        let a = self.raw_position(self.domain.t_i);
        let b = self.raw_position(self.domain.t_f);
        a.chord_squared(&b).sqrt() < eps
    }

    /// Sampled self-intersection test.
    ///
    /// Pairs of samples more than three sample spacings apart (circularly)
    /// that come within twice the largest sample spacing of each other are
    /// refined by Gauss–Newton on the chordal distance; the curve is
    /// non-simple iff a refined pair is closer than `eps` while still
    /// separated by more than three spacings.
    pub fn is_simple(&self, n_samples: usize, eps: f64) -> Result<SimplicityReport, CurveError> {
        if n_samples < 64 {
            return Err(CurveError::TooFewSamples(n_samples));
        }
        let n = n_samples;
        let width = self.domain.width();
        let h = width / n as f64;
        let min_sep = 3.0 * h;
        let t_at = |i: usize| self.domain.t_i + h * i as f64;
        let pts: Vec<[f64; 3]> = (0..n).map(|i| self.raw_position(t_at(i)).to_array()).collect();

        let mut spacing = 0.0f64;
        for i in 0..n {
            spacing = spacing.max(dist(&pts[i], &pts[(i + 1) % n]));
        }
        let radius = eps.max(2.0 * spacing).max(1e-12);

        let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let cell = |p: &[f64; 3]| {
            [
                (p[0] / radius).floor() as i64,
                (p[1] / radius).floor() as i64,
                (p[2] / radius).floor() as i64,
            ]
        };
        for (i, p) in pts.iter().enumerate() {
            grid.entry(cell(p)).or_default().push(i);
        }

        let circ = |i: usize, j: usize| {
            let d = i.abs_diff(j);
            d.min(n - d)
        };
        let pair_dist = |i: usize, j: usize| dist(&pts[i % n], &pts[j % n]);

        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            let c = cell(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(bucket) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                            continue;
                        };
                        for &j in bucket {
                            if j <= i || circ(i, j) <= 3 {
                                continue;
                            }
                            let d = pair_dist(i, j);
                            if d >= radius {
                                continue;
                            }
                            // keep only discrete local minima of the distance
                            let is_local_min = [(1, 0), (n - 1, 0), (0, 1), (0, n - 1)]
                                .iter()
                                .all(|&(di, dj)| pair_dist(i + di, j + dj) >= d);
                            if is_local_min {
                                candidates.push((d, i, j));
                            }
                        }
                    }
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        for &(_, i, j) in &candidates {
            let (t1, t2, d) = self.refine_pair(t_at(i), t_at(j), h);
            let sep = {
                let raw = (t1 - t2).abs().rem_euclid(width);
                raw.min(width - raw)
            };
            if d < eps && sep > min_sep {
                let (a, b) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                return Ok(SimplicityReport {
                    simple: false,
                    witness: Some((self.domain.wrap(a), self.domain.wrap(b))),
                });
            }
        }
        Ok(SimplicityReport {
            simple: true,
            witness: None,
        })
    }

    /// Locally minimizes `|r(t1) - r(t2)|` within one sample spacing of the
    /// starting pair.
    fn refine_pair(&self, t1: f64, t2: f64, h: f64) -> (f64, f64, f64) {
        let (lo1, hi1, lo2, hi2) = (t1 - h, t1 + h, t2 - h, t2 + h);
        let residual = |a: f64, b: f64| {
            let p = self.raw_position(a).to_array();
            let q = self.raw_position(b).to_array();
            [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
        };
        let norm = |r: &[f64; 3]| (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let (mut a, mut b) = (t1, t2);
        let mut r = residual(a, b);
        let mut d = norm(&r);
        for _ in 0..30 {
            if d < 1e-14 {
                break;
            }
            let u = self.velocity(a);
            let v = self.velocity(b);
            // normal equations for J = [u, -v]
            let uu = dot3(&u, &u);
            let vv = dot3(&v, &v);
            let uv = dot3(&u, &v);
            let ur = dot3(&u, &r);
            let vr = dot3(&v, &r);
            let det = uu * vv - uv * uv;
            let (da, db) = if det.abs() > 1e-12 * uu.max(1e-300) * vv.max(1e-300) {
                (-(vv * ur - uv * vr) / det, -(uv * ur - uu * vr) / det)
            } else if uu > 0.0 {
                (-ur / uu, 0.0)
            } else {
                break;
            };
            let mut step = 1.0;
            let mut improved = false;
            while step > 1e-6 {
                let na = (a + step * da).clamp(lo1, hi1);
                let nb = (b + step * db).clamp(lo2, hi2);
                let nr = residual(na, nb);
                let nd = norm(&nr);
                if nd < d {
                    a = na;
                    b = nb;
                    r = nr;
                    d = nd;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (a, b, d)
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn compose(outer: &Rotation, inner: &Rotation) -> Rotation {
    let a = outer.matrix();
    let b = inner.matrix();
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    Rotation::from_matrix(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplicityReport {
    pub simple: bool,
    /// Parameters of a near-coincident pair when the curve is not simple.
    pub witness: Option<(f64, f64)>,
}

/// JSON form of a curve:
/// `{"family": "tennis_ball", "params": {"A": 0.7037}, "domain": [0, 12.566]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub family: FamilyTag,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[[f64; 3]; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    #[serde(alias = "tennis_ball_seam")]
    TennisBall,
    GreatCircle,
    WavyCircle,
    TrigSeries,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeamParams {
    #[serde(rename = "A", default = "default_a")]
    a: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WavyParams {
    #[serde(rename = "B", default = "default_b")]
    b: f64,
}

fn default_a() -> f64 {
    TENNIS_BALL_A
}

fn default_b() -> f64 {
    WAVY_CIRCLE_B
}

impl CurveSpec {
    pub fn parse(text: &str) -> Result<Self, CurveError> {
        serde_json::from_str(text).map_err(|e| CurveError::Spec(e.to_string()))
    }

    pub fn build(&self) -> Result<SphericalCurve, CurveError> {
        fn params<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T, CurveError> {
            let v = if v.is_null() { serde_json::json!({}) } else { v.clone() };
            serde_json::from_value(v).map_err(|e| CurveError::Spec(e.to_string()))
        }
        let family = match self.family {
            FamilyTag::GreatCircle => {
                params::<NoParams>(&self.params)?;
                CurveFamily::GreatCircle
            }
            FamilyTag::TennisBall => CurveFamily::TennisBallSeam {
                a: params::<SeamParams>(&self.params)?.a,
            },
            FamilyTag::WavyCircle => CurveFamily::WavyCircle {
                b: params::<WavyParams>(&self.params)?.b,
            },
            FamilyTag::TrigSeries => CurveFamily::TrigSeries(params(&self.params)?),
        };
        let domain = match self.domain {
            Some([a, b]) => CurveDomain::new(a, b)?,
            None => family.natural_domain(),
        };
        let mut curve = SphericalCurve::new(family, domain)?;
        if let Some(m) = self.rotation {
            let r = Rotation::from_matrix(m);
            if !(r.orthonormality_defect() < 1e-9) {
                return Err(CurveError::Spec("rotation is not a proper orthonormal matrix".into()));
            }
            curve = curve.rotated(r);
        }
        Ok(curve)
    }
}

impl From<&SphericalCurve> for CurveSpec {
    fn from(c: &SphericalCurve) -> Self {
        let (family, params) = match &c.family {
            CurveFamily::GreatCircle => (FamilyTag::GreatCircle, serde_json::Value::Null),
            CurveFamily::TennisBallSeam { a } => (FamilyTag::TennisBall, serde_json::json!({ "A": a })),
            CurveFamily::WavyCircle { b } => (FamilyTag::WavyCircle, serde_json::json!({ "B": b })),
            CurveFamily::TrigSeries(s) => (
                FamilyTag::TrigSeries,
                serde_json::to_value(s).expect("plain data serializes"),
            ),
        };
        CurveSpec {
            family,
            params,
            domain: Some(c.domain.into()),
            rotation: c.rotation.map(|r| r.matrix()),
        }
    }
}

impl TryFrom<CurveSpec> for SphericalCurve {
    type Error = CurveError;

    fn try_from(spec: CurveSpec) -> Result<Self, Self::Error> {
        spec.build()
    }
}

/// Cartesian position of the seam evaluated straight from its parametric
/// equations (no spherical-coordinate detour); used as a cross-check.
pub fn tennis_ball_xyz(a: f64, t: f64) -> [f64; 3] {
    let polar = FRAC_PI_2 - (FRAC_PI_2 - a) * t.cos();
    let lon = t / 2.0 + a * (2.0 * t).sin();
    [polar.sin() * lon.cos(), polar.sin() * lon.sin(), polar.cos()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn trap() -> QuadratureRule {
        QuadratureRule::trapezoid(512, 1e-11).unwrap()
    }

    fn norm(v: [f64; 3]) -> f64 {
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    }

    #[test]
    fn great_circle_positions() {
        let c = SphericalCurve::great_circle();
        assert_eq!(c.position(0.0).to_array(), [0.0, 0.0, 1.0]);
        let q = c.position(0.25);
        assert!((q.x() - 1.0).abs() < 1e-15 && q.z().abs() < 1e-15);
    }

    #[test]
    fn seam_start_point() {
        let c = SphericalCurve::tennis_ball(TENNIS_BALL_A).unwrap();
        let p = c.position(0.0).to_array();
        let expected = tennis_ball_xyz(TENNIS_BALL_A, 0.0);
        for k in 0..3 {
            assert!((p[k] - expected[k]).abs() < 1e-15);
        }
        assert!((p[0] - TENNIS_BALL_A.sin()).abs() < 1e-15 && p[1] == 0.0 && (p[2] - TENNIS_BALL_A.cos()).abs() < 1e-15);
        for i in 0..100 {
            let t = 0.1257 * i as f64;
            let p = c.position(t).to_array();
            let e = tennis_ball_xyz(TENNIS_BALL_A, t);
            assert!(dist(&p, &e) < 1e-14, "t = {t}");
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parameters_validated() {
        assert!(SphericalCurve::tennis_ball(0.0).is_err());
        assert!(SphericalCurve::tennis_ball(FRAC_PI_2).is_err());
        assert!(SphericalCurve::wavy_circle(FRAC_PI_4).is_err());
        assert!(SphericalCurve::wavy_circle(f64::NAN).is_err());
        assert!(CurveDomain::new(1.0, 1.0).is_err());
    }

    #[test]
    fn wrapping_is_periodic() {
        for c in [
            SphericalCurve::great_circle(),
            SphericalCurve::tennis_ball(0.7).unwrap(),
            SphericalCurve::wavy_circle(0.2).unwrap(),
        ] {
            let w = c.domain().width();
            for t in [0.3, 1.7, 2.9] {
                let d = c.position(t).chord_squared(&c.position(t + w)).sqrt();
                assert!(d < 1e-12);
                let d = c.position(t).chord_squared(&c.position(t - 3.0 * w)).sqrt();
                assert!(d < 1e-12);
            }
        }
    }

    #[test]
    fn great_circle_speed() {
        let c = SphericalCurve::great_circle();
        for t in [0.0, 0.1, 0.77, 1.5, 2.0] {
            assert!((c.speed(t) - TAU).abs() < 1e-6);
        }
    }

    #[test]
    fn latitude_circle_speed() {
        let theta = 1.1;
        let c = SphericalCurve::trig_series(
            TrigSeries::latitude_circle(theta, 3.0),
            CurveDomain::new(0.0, TAU / 3.0).unwrap(),
        )
        .unwrap();
        assert!((c.speed(0.4) - 3.0 * theta.sin()).abs() < 1e-6);
    }

    #[test]
    fn seam_velocity_matches_fourth_order_stencil() {
        let c = SphericalCurve::tennis_ball(TENNIS_BALL_A).unwrap();
        let h = 1e-3;
        let f = |t: f64| tennis_ball_xyz(TENNIS_BALL_A, t);
        let (p1, m1, p2, m2) = (f(h), f(-h), f(2.0 * h), f(-2.0 * h));
        let stencil: Vec<f64> = (0..3)
            .map(|k| (-p2[k] + 8.0 * p1[k] - 8.0 * m1[k] + m2[k]) / (12.0 * h))
            .collect();
        let v = c.velocity(0.0);
        for k in 0..3 {
            assert!((v[k] - stencil[k]).abs() < 1e-5);
        }
    }

    #[test]
    fn great_circle_lengths() {
        let c = SphericalCurve::great_circle();
        let l = c.arc_length(&trap()).unwrap();
        assert!((l.value - 4.0 * PI).abs() < 1e-9);
        let single = c.clone().with_domain(CurveDomain::new(0.0, 1.0).unwrap());
        assert!((single.arc_length(&trap()).unwrap().value - TAU).abs() < 1e-9);
    }

    #[test]
    fn seam_length_is_four_pi() {
        let c = SphericalCurve::tennis_ball(TENNIS_BALL_A).unwrap();
        let l = c.arc_length(&trap()).unwrap();
        assert!((l.value - 4.0 * PI).abs() < 2e-3, "{}", l.value);
    }

    #[test]
    fn closure() {
        assert!(SphericalCurve::great_circle().is_closed(1e-8));
        assert!(SphericalCurve::tennis_ball(0.7037).unwrap().is_closed(1e-8));
        assert!(SphericalCurve::wavy_circle(0.2).unwrap().is_closed(1e-8));
        let half = SphericalCurve::great_circle().with_domain(CurveDomain::new(0.0, 0.5).unwrap());
        assert!(!half.is_closed(1e-8));
    }

    #[test]
    fn simplicity() {
        let doubled = SphericalCurve::great_circle();
        let r = doubled.is_simple(DEFAULT_SIMPLE_SAMPLES, DEFAULT_SIMPLE_EPS).unwrap();
        assert!(!r.simple);
        let (a, b) = r.witness.unwrap();
        assert!(doubled.position(a).chord_squared(&doubled.position(b)).sqrt() < DEFAULT_SIMPLE_EPS);

        let seam = SphericalCurve::tennis_ball(0.7037).unwrap();
        assert!(seam.is_simple(DEFAULT_SIMPLE_SAMPLES, DEFAULT_SIMPLE_EPS).unwrap().simple);

        let single = doubled.with_domain(CurveDomain::new(0.0, 1.0).unwrap());
        assert!(single.is_simple(DEFAULT_SIMPLE_SAMPLES, DEFAULT_SIMPLE_EPS).unwrap().simple);

        assert!(matches!(seam.is_simple(10, 1e-4), Err(CurveError::TooFewSamples(10))));
    }

    #[test]
    fn transversal_crossing_found() {
        // figure-eight: theta = pi/2 + 0.5 sin t, phi = 0.5 sin 2t... crosses at t = 0 and pi
        let series = TrigSeries {
            theta0: FRAC_PI_2,
            theta_sin: vec![0.5],
            phi_sin: vec![0.0, 0.5],
            ..TrigSeries::default()
        };
        let c = SphericalCurve::trig_series(series, CurveDomain::new(0.0, TAU).unwrap()).unwrap();
        let r = c.is_simple(256, 1e-4).unwrap();
        assert!(!r.simple);
    }

    #[test]
    fn rotation_preserves_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = SphericalCurve::tennis_ball(0.6).unwrap();
        let l0 = c.arc_length(&trap()).unwrap().value;
        let l1 = c.rotated(Rotation::random(&mut rng)).arc_length(&trap()).unwrap().value;
        assert!((l0 - l1).abs() < 1e-9);
    }

    #[test]
    fn spec_round_trip() {
        let spec = CurveSpec::parse(r#"{"family": "tennis_ball", "params": {"A": 0.7}, "domain": [0, 12.566370614359172]}"#)
            .unwrap();
        let c = spec.build().unwrap();
        assert_eq!(c.family(), &CurveFamily::TennisBallSeam { a: 0.7 });
        let again = CurveSpec::from(&c).build().unwrap();
        assert_eq!(c, again);

        let gc = CurveSpec::parse(r#"{"family": "great_circle", "params": {}}"#).unwrap().build().unwrap();
        assert_eq!(gc.domain().end(), 2.0);
        let wavy = CurveSpec::parse(r#"{"family": "wavy_circle"}"#).unwrap().build().unwrap();
        assert_eq!(wavy.family(), &CurveFamily::WavyCircle { b: WAVY_CIRCLE_B });

        assert!(CurveSpec::parse(r#"{"family": "spiral"}"#).is_err());
        assert!(CurveSpec::parse(r#"{"family": "tennis_ball", "params": {"C": 1}}"#)
            .unwrap()
            .build()
            .is_err());
        assert!(CurveSpec::parse(r#"{"family": "tennis_ball", "domain": [1, 0]}"#)
            .unwrap()
            .build()
            .is_err());
    }
}

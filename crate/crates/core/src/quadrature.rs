//! One-dimensional and spherical integration with doubling error estimates.
//!
//! Every deterministic rule is evaluated at `n` and `2n` nodes; the reported
//! value is the finer one and the error estimate is the absolute difference,
//! floored at a round-off bound so that two estimates agreeing to the last
//! bit never claim zero error. Rules refine by doubling until the requested
//! tolerance is met or the node cap is hit, in which case the result carries
//! `converged = false`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{uniform_sphere_sample, UnitVector};

/// Maximum node count for trapezoid and Monte Carlo rules, and for the
/// product of the two factors of a spherical product rule.
pub const NODE_CAP: usize = 1 << 20;

/// Gauss–Legendre nodes are computed by Newton iteration at `O(n^2)` cost,
/// so refinement of that rule stops here.
pub const GAUSS_LEGENDRE_CAP: usize = 1 << 12;

const ROUNDOFF_FACTOR: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    #[serde(rename = "trapezoid", alias = "periodic_trapezoid")]
    PeriodicTrapezoid,
    GaussLegendre,
    MonteCarlo,
}

impl RuleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RuleKind::PeriodicTrapezoid => "trapezoid",
            RuleKind::GaussLegendre => "gauss_legendre",
            RuleKind::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::str::FromStr for RuleKind {
    type Err = QuadratureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trapezoid" | "periodic_trapezoid" => Ok(RuleKind::PeriodicTrapezoid),
            "gauss_legendre" => Ok(RuleKind::GaussLegendre),
            "monte_carlo" => Ok(RuleKind::MonteCarlo),
            other => Err(QuadratureError::InvalidRule(format!("unknown rule '{other}'"))),
        }
    }
}

/// Integration scheme descriptor. For spherical integrals `n` is the number
/// of Gauss–Legendre nodes in `cos(theta)`; the longitude uses `2n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleSpec", into = "RuleSpec")]
pub struct QuadratureRule {
    kind: RuleKind,
    n: usize,
    tol: f64,
    seed: u64,
}

/// Wire form of a rule: `{"rule": "trapezoid", "n": 512, "tol": 1e-8, "seed": 42}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub rule: RuleKind,
    pub n: usize,
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

impl TryFrom<RuleSpec> for QuadratureRule {
    type Error = QuadratureError;

    fn try_from(spec: RuleSpec) -> Result<Self, Self::Error> {
        QuadratureRule::new(spec.rule, spec.n, spec.tol).map(|r| r.with_seed(spec.seed))
    }
}

impl From<QuadratureRule> for RuleSpec {
    fn from(r: QuadratureRule) -> Self {
        RuleSpec {
            rule: r.kind,
            n: r.n,
            tol: r.tol,
            seed: r.seed,
        }
    }
}

impl QuadratureRule {
    pub fn new(kind: RuleKind, n: usize, tol: f64) -> Result<Self, QuadratureError> {
        if n < 2 {
            return Err(QuadratureError::InvalidRule(format!("node count {n} < 2")));
        }
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(QuadratureError::InvalidRule(format!("tolerance {tol} must be positive")));
        }
        Ok(Self { kind, n, tol, seed: 0 })
    }

    /// Periodic trapezoid, 512 nodes, tolerance 1e-10.
    pub fn curve_default() -> Self {
        Self {
            kind: RuleKind::PeriodicTrapezoid,
            n: 512,
            tol: 1e-10,
            seed: 0,
        }
    }

    /// Gauss–Legendre 128 in `cos(theta)` by trapezoid 256 in `phi`.
    pub fn sphere_default() -> Self {
        Self {
            kind: RuleKind::GaussLegendre,
            n: 128,
            tol: 1e-8,
            seed: 0,
        }
    }

    pub fn trapezoid(n: usize, tol: f64) -> Result<Self, QuadratureError> {
        Self::new(RuleKind::PeriodicTrapezoid, n, tol)
    }

    pub fn gauss_legendre(n: usize, tol: f64) -> Result<Self, QuadratureError> {
        Self::new(RuleKind::GaussLegendre, n, tol)
    }

    pub fn monte_carlo(n: usize, seed: u64) -> Result<Self, QuadratureError> {
        Self::new(RuleKind::MonteCarlo, n, 1.0).map(|r| r.with_seed(seed))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self, QuadratureError> {
        Self::new(self.kind, self.n, tol)?;
        self.tol = tol;
        Ok(self)
    }

    pub fn with_n(mut self, n: usize) -> Result<Self, QuadratureError> {
        Self::new(self.kind, n, self.tol)?;
        self.n = n;
        Ok(self)
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Value of an evaluated functional with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalResult {
    pub value: f64,
    pub error_estimate: f64,
    pub nodes_used: usize,
    /// False when the node cap was reached before the tolerance.
    pub converged: bool,
}

impl FunctionalResult {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            nodes_used: 0,
            converged: true,
        }
    }

    /// Multiplies value and error by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error_estimate: self.error_estimate * factor.abs(),
            ..self
        }
    }

    /// Turns a flagged (non-converged) result into an error.
    pub fn require_converged(self) -> Result<Self, QuadratureError> {
        if self.converged {
            Ok(self)
        } else {
            Err(QuadratureError::ToleranceNotReached { best: self })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand returned a non-finite value at {at}")]
    NonFiniteIntegrand { at: f64 },
    #[error("tolerance not reached; best value {} +/- {}", best.value, best.error_estimate)]
    ToleranceNotReached { best: FunctionalResult },
}

/// Integrates `f` over `[a, b]`.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, rule: &QuadratureRule) -> Result<FunctionalResult, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    let width = b - a;
    match rule.kind {
        RuleKind::PeriodicTrapezoid => {
            let node = |i: usize, n: usize| a + width * (i as f64) / (n as f64);
            trapezoid_nested(|i, n| f(node(i, n)), width, rule.n, rule.tol, NODE_CAP)
                .map_err(|e| e.with_location(node))
        }
        RuleKind::GaussLegendre => {
            let eval = |n: usize| -> Result<(f64, f64), QuadratureError> {
                let (x, w) = gauss_legendre_nodes(n);
                let half = 0.5 * width;
                let mid = a + half;
                let mut sum = 0.0;
                let mut abs = 0.0;
                for (xi, wi) in x.iter().zip(&w) {
                    let t = mid + half * xi;
                    let v = f(t);
                    if !v.is_finite() {
                        return Err(QuadratureError::NonFiniteIntegrand { at: t });
                    }
                    sum += wi * v;
                    abs += (wi * v).abs();
                }
                Ok((half * sum, half * abs))
            };
            refine_by_doubling(rule.n, rule.tol, GAUSS_LEGENDRE_CAP, |n| n, eval)
        }
        RuleKind::MonteCarlo => {
            let mut rng = ChaCha8Rng::seed_from_u64(rule.seed);
            let samples = (0..rule.n).map(|_| a + width * rng.random::<f64>());
            monte_carlo_mean(samples.map(|t| (t, f(t))), rule.n, rule.tol)
                .map(|r| r.scaled(width))
        }
    }
}

/// `∬_S g dS` over the unit sphere.
///
/// Deterministic rules use Gauss–Legendre in `cos(theta)` times the
/// trapezoid rule in `phi` (`n` by `2n` nodes, refined by doubling both).
/// Monte Carlo uses `4pi` times the sample mean, with `4pi` times the
/// standard error as estimate.
pub fn sphere_integrate<G>(g: G, rule: &QuadratureRule) -> Result<FunctionalResult, QuadratureError>
where
    G: Fn(&UnitVector) -> f64,
{
    sphere_integrate_with_error(|p| (g(p), 0.0), rule)
}

/// Like [`sphere_integrate`] for integrands that carry their own absolute
/// error; those errors are integrated with the rule's weights and added to
/// the rule's own estimate.
pub fn sphere_integrate_with_error<G>(g: G, rule: &QuadratureRule) -> Result<FunctionalResult, QuadratureError>
where
    G: Fn(&UnitVector) -> (f64, f64),
{
    match rule.kind {
        RuleKind::MonteCarlo => {
            let pts = uniform_sphere_sample(rule.seed, rule.n)
                .map_err(|e| QuadratureError::InvalidRule(e.to_string()))?;
            let mut inner_err = 0.0;
            let values = pts.iter().enumerate().map(|(i, p)| {
                let (v, e) = g(&p.to_unit_vector());
                inner_err += e;
                (i as f64, v)
            });
            let mut r = monte_carlo_mean(values, rule.n, rule.tol / (4.0 * PI))?;
            r.error_estimate += inner_err / rule.n as f64;
            Ok(r.scaled(4.0 * PI))
        }
        RuleKind::PeriodicTrapezoid | RuleKind::GaussLegendre => {
            let mut inner = 0.0;
            let mut level = |n: usize| -> Result<(f64, f64), QuadratureError> {
                let (sum, abs, err) = product_rule(&g, n)?;
                inner = err;
                Ok((sum, abs))
            };
            let cap = (GAUSS_LEGENDRE_CAP / 2).min(((NODE_CAP / 2) as f64).sqrt() as usize);
            let mut r = refine_by_doubling(rule.n, rule.tol, cap, |n| 2 * n * n, &mut level)?;
            r.error_estimate += inner;
            if r.error_estimate > rule.tol {
                r.converged = false;
            }
            Ok(r)
        }
    }
}

fn product_rule<G>(g: &G, n_theta: usize) -> Result<(f64, f64, f64), QuadratureError>
where
    G: Fn(&UnitVector) -> (f64, f64),
{
    let n_phi = 2 * n_theta;
    let (z, wz) = gauss_legendre_nodes(n_theta);
    let dphi = TAU / n_phi as f64;
    let trig: Vec<(f64, f64)> = (0..n_phi).map(|j| (dphi * j as f64).sin_cos()).collect();
    let mut total = 0.0;
    let mut total_abs = 0.0;
    let mut total_err = 0.0;
    for (zi, wi) in z.iter().zip(&wz) {
        let r = (1.0 - zi * zi).max(0.0).sqrt();
        let mut row = 0.0;
        let mut row_abs = 0.0;
        let mut row_err = 0.0;
        for &(s, c) in &trig {
            let p = UnitVector::from_components_unchecked(r * c, r * s, *zi);
            let (v, e) = g(&p);
            if !v.is_finite() || !e.is_finite() {
                return Err(QuadratureError::NonFiniteIntegrand { at: *zi });
            }
            row += v;
            row_abs += v.abs();
            row_err += e;
        }
        total += wi * row;
        total_abs += wi * row_abs;
        total_err += wi * row_err;
    }
    Ok((total * dphi, total_abs * dphi, total_err * dphi))
}

/// Runs `eval` at `n, 2n, 4n, ...`, comparing consecutive levels. `eval`
/// returns the estimate and the integral of `|f|` (for the round-off floor).
fn refine_by_doubling<E>(
    n0: usize,
    tol: f64,
    cap: usize,
    cost: impl Fn(usize) -> usize,
    mut eval: E,
) -> Result<FunctionalResult, QuadratureError>
where
    E: FnMut(usize) -> Result<(f64, f64), QuadratureError>,
{
    let mut n = n0;
    let mut used = cost(n);
    let (mut coarse, _) = eval(n)?;
    loop {
        let fine_n = 2 * n;
        let (fine, abs) = eval(fine_n)?;
        used += cost(fine_n);
        let err = (fine - coarse).abs().max(ROUNDOFF_FACTOR * abs);
        if err <= tol || 2 * fine_n > cap {
            return Ok(FunctionalResult {
                value: fine,
                error_estimate: err,
                nodes_used: used,
                converged: err <= tol,
            });
        }
        coarse = fine;
        n = fine_n;
    }
}

/// Nested trapezoid rule over a width-`width` interval. `node(i, n)` returns
/// the integrand at the `i`-th of `n` equal subintervals' endpoints
/// (`i = 0..=n`). Each doubling reuses the previous level's nodes.
pub(crate) fn trapezoid_nested<F>(
    mut node: F,
    width: f64,
    n0: usize,
    tol: f64,
    cap: usize,
) -> Result<FunctionalResult, NodeError>
where
    F: FnMut(usize, usize) -> f64,
{
    let mut eval = |i: usize, n: usize| -> Result<f64, NodeError> {
        let v = node(i, n);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NodeError { i, n })
        }
    };
    let mut n = n0.max(1);
    let mut sum = 0.5 * (eval(0, n)? + eval(n, n)?);
    let mut abs = sum.abs();
    for i in 1..n {
        let v = eval(i, n)?;
        sum += v;
        abs += v.abs();
    }
    let mut used = n + 1;
    let mut coarse = width * sum / n as f64;
    loop {
        let fine_n = 2 * n;
        for i in (1..fine_n).step_by(2) {
            let v = eval(i, fine_n)?;
            sum += v;
            abs += v.abs();
        }
        used += n;
        let fine = width * sum / fine_n as f64;
        let err = (fine - coarse)
            .abs()
            .max(ROUNDOFF_FACTOR * width * abs / fine_n as f64);
        if err <= tol || 2 * fine_n > cap {
            return Ok(FunctionalResult {
                value: fine,
                error_estimate: err,
                nodes_used: used,
                converged: err <= tol,
            });
        }
        coarse = fine;
        n = fine_n;
    }
}

/// Index of the node at which a nested trapezoid integrand was non-finite.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeError {
    pub i: usize,
    pub n: usize,
}

impl NodeError {
    pub(crate) fn with_location(self, t: impl Fn(usize, usize) -> f64) -> QuadratureError {
        QuadratureError::NonFiniteIntegrand { at: t(self.i, self.n) }
    }
}

fn monte_carlo_mean<I>(samples: I, n: usize, tol: f64) -> Result<FunctionalResult, QuadratureError>
where
    I: Iterator<Item = (f64, f64)>,
{
    // Welford accumulation keeps the variance stable for large n
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut count = 0usize;
    for (at, v) in samples {
        if !v.is_finite() {
            return Err(QuadratureError::NonFiniteIntegrand { at });
        }
        count += 1;
        let delta = v - mean;
        mean += delta / count as f64;
        m2 += delta * (v - mean);
    }
    let variance = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
    let se = (variance / count as f64).sqrt();
    debug_assert_eq!(count, n);
    Ok(FunctionalResult {
        value: mean,
        error_estimate: se,
        nodes_used: count,
        converged: se <= tol,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

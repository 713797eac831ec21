//! Arc-distance functionals for closed curves on the unit sphere.
//!
//! The crate evaluates the mean distance from a point to the sphere, the
//! mean distance from the sphere to a curve, and the mean nearest-point
//! distance, for closed spherical curves; calibrates curve families to a
//! prescribed arc-length; and searches curve families for minimizers.
//!
//! All angles are in radians.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod functionals;
pub mod geometry;
pub mod optimizer;
pub mod quadrature;
pub mod verify;

pub use curves::{CurveDomain, CurveFamily, CurveSpec, SimplicityReport, SphericalCurve, TrigSeries};
pub use functionals::{
    arcsin_identity_residual, curve_to_sphere_mean_M, el_residuals, mean_min_arc_distance, mean_point_to_sphere,
    point_to_curve_mean, point_to_curve_min, sphere_to_curve_mean, ELResidual, FunctionalError, MinDistance,
    SphereToCurveMean, Weighting,
};
pub use geometry::{geodesic_distance, spherical_to_cartesian, uniform_sphere_sample, Rotation, SpherePoint, UnitVector};
pub use optimizer::{
    calibrate_arc_length, minimize_functional, CalibrationReport, ObjectiveKind, OptimizationReport, OptimizerConfig,
};
pub use quadrature::{integrate_1d, sphere_integrate, FunctionalResult, QuadratureError, QuadratureRule, RuleKind};

/// Arc-length every curve is calibrated to.
pub const TARGET_LENGTH: f64 = 4.0 * std::f64::consts::PI;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

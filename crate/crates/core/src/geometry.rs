//! Points on the unit sphere, conversions, geodesic distance and sampling.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest accepted deviation of `|v|` from 1 when building a [`UnitVector`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("colatitude {0} outside [0, pi]")]
    ColatitudeOutOfRange(f64),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("vector norm {0} deviates from 1 by more than {UNIT_NORM_TOLERANCE}")]
    NotUnit(f64),
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("sample count must be at least 1")]
    EmptySample,
}

/// A point on the unit sphere in colatitude/longitude form (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct SpherePoint {
    theta: f64,
    phi: f64,
}

impl SpherePoint {
    /// `theta` must lie in `[0, pi]`; `phi` is reduced to `[0, 2pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self, GeometryError> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(GeometryError::ColatitudeOutOfRange(theta));
        }
        Ok(Self {
            theta,
            phi: normalize_longitude(phi),
        })
    }

    pub fn north_pole() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn to_unit_vector(&self) -> UnitVector {
        spherical_to_cartesian(*self)
    }
}

impl TryFrom<[f64; 2]> for SpherePoint {
    type Error = GeometryError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        SpherePoint::new(v[0], v[1])
    }
}

impl From<SpherePoint> for [f64; 2] {
    fn from(p: SpherePoint) -> Self {
        [p.theta, p.phi]
    }
}

fn normalize_longitude(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2pi for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Cartesian point on the unit sphere. The norm is 1 to within 1e-12.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVector {
    /// Accepts a vector whose norm is within [`UNIT_NORM_TOLERANCE`] of 1 and
    /// renormalizes it.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(GeometryError::NotUnit(norm));
        }
        Ok(Self::scaled(x, y, z, norm))
    }

    /// Projects any non-zero finite vector onto the sphere.
    pub fn normalize(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if norm == 0.0 {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Self::scaled(x, y, z, norm))
    }

    fn scaled(x: f64, y: f64, z: f64, norm: f64) -> Self {
        if norm == 1.0 {
            Self { x, y, z }
        } else {
            Self {
                x: x / norm,
                y: y / norm,
                z: z / norm,
            }
        }
    }

    pub(crate) fn from_components_unchecked(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn north_pole() -> Self {
        Self { x: 0.0, y: 0.0, z: 1.0 }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Squared Euclidean (chordal) distance.
    pub fn chord_squared(&self, other: &UnitVector) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn antipode(&self) -> UnitVector {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn to_spherical(&self) -> SpherePoint {
        let theta = self.z.clamp(-1.0, 1.0).acos();
        let phi = normalize_longitude(self.y.atan2(self.x));
        SpherePoint { theta, phi }
    }
}

impl TryFrom<[f64; 3]> for UnitVector {
    type Error = GeometryError;

    fn try_from(v: [f64; 3]) -> Result<Self, Self::Error> {
        UnitVector::new(v[0], v[1], v[2])
    }
}

impl From<UnitVector> for [f64; 3] {
    fn from(v: UnitVector) -> Self {
        v.to_array()
    }
}

impl fmt::Display for UnitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

pub fn spherical_to_cartesian(p: SpherePoint) -> UnitVector {
    let (st, ct) = p.theta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    UnitVector {
        x: st * cp,
        y: st * sp,
        z: ct,
    }
}

/// Great-circle distance in `[0, pi]`. The dot product is clamped to `[-1, 1]`.
pub fn geodesic_distance(u: &UnitVector, v: &UnitVector) -> f64 {
    u.dot(v).clamp(-1.0, 1.0).acos()
}

/// Geodesic distance computed from the chord, accurate for nearly
/// coincident points where `acos` loses half the digits.
pub fn geodesic_distance_from_chord(u: &UnitVector, v: &UnitVector) -> f64 {
    let half_chord = 0.5 * u.chord_squared(v).sqrt();
    2.0 * half_chord.min(1.0).asin()
}

/// Area-uniform samples: `cos(theta)` uniform on `[-1, 1]`, `phi` uniform on
/// `[0, 2pi)`. Deterministic for a given seed.
pub fn uniform_sphere_sample(seed: u64, n: usize) -> Result<Vec<SpherePoint>, GeometryError> {
    if n == 0 {
        return Err(GeometryError::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let phi = TAU * rng.random::<f64>();
            SpherePoint {
                theta: z.acos(),
                phi: normalize_longitude(phi),
            }
        })
        .collect())
}

/// `n` near-uniform points on a spherical Fibonacci lattice.
pub fn fibonacci_design(n: usize) -> Vec<UnitVector> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden_angle * i as f64).sin_cos();
            UnitVector::from_components_unchecked(r * c, r * s, z)
        })
        .collect()
}

/// A proper rotation of 3-space stored as a row-major matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rotation([[f64; 3]; 3]);

impl Rotation {
    pub fn identity() -> Self {
        Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn from_matrix(m: [[f64; 3]; 3]) -> Self {
        Rotation(m)
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.0
    }

    /// Rotation by `angle` about `axis` (Rodrigues).
    pub fn from_axis_angle(axis: &UnitVector, angle: f64) -> Self {
        let [x, y, z] = axis.to_array();
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Rotation([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    /// Haar-uniform random rotation from a uniformly drawn unit quaternion.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
        let (s2, c2) = (TAU * u2).sin_cos();
        let (s3, c3) = (TAU * u3).sin_cos();
        let (w, x, y, z) = (a * s2, a * c2, b * s3, b * c3);
        Rotation([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }

    pub fn apply_array(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn apply(&self, v: &UnitVector) -> UnitVector {
        let [x, y, z] = self.apply_array(v.to_array());
        UnitVector::normalize(x, y, z).unwrap_or(*v)
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Rotation([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    /// Maximum deviation of `R^T R` from the identity plus `|det R - 1|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = &self.0;
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        worst.max((det - 1.0).abs())
    }
}

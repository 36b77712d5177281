//! Conformal metrics `phi(r, z) (dr^2 + dz^2)` on the `(r, z)` half-plane.
//!
//! The default field is the self-shrinker metric
//! `phi(r, z) = r^2 exp(-(r^2 + z^2) / 2) / 4`, whose geodesics are the
//! cross-sections of rotationally symmetric self-shrinkers. Its g-length
//! equals the Gaussian-weighted length `1/2 * int r exp(-(r^2 + z^2)/4) ds`.

use std::f64::consts::{E, PI};
use std::fmt;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::trajectory::Trajectory;
use crate::{Error, Result};

/// A position in the `(r, z)` half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub r: f64,
    pub z: f64,
}

impl Point {
    pub const fn new(r: f64, z: f64) -> Self {
        Self { r, z }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.r, self.z)
    }

    pub fn from_vector(v: Vector2<f64>) -> Self {
        Self { r: v.x, z: v.y }
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.r + other.r), 0.5 * (self.z + other.z))
    }

    /// `other - self` as a Euclidean vector.
    pub fn displacement_to(self, other: Point) -> Vector2<f64> {
        Vector2::new(other.r - self.r, other.z - self.z)
    }

    pub fn distance(self, other: Point) -> f64 {
        self.displacement_to(other).norm()
    }

    pub fn mirrored(self) -> Point {
        Point::new(self.r, -self.z)
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Add<Vector2<f64>> for Point {
    type Output = Point;

    fn add(self, v: Vector2<f64>) -> Point {
        Point::new(self.r + v.x, self.z + v.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.r, self.z)
    }
}

/// A smooth conformal factor with analytic first and second derivatives.
///
/// Everything downstream (discrete Lagrangian, solvers, length estimates) is
/// generic over this trait, so test oracles such as [`FlatMetric`] can be
/// swapped in for the self-shrinker metric.
pub trait ConformalMetric {
    fn factor(&self, p: Point) -> f64;

    /// `(d phi / dr, d phi / dz)`.
    fn gradient(&self, p: Point) -> Vector2<f64>;

    /// Symmetric matrix of second partial derivatives of `phi`.
    fn hessian(&self, p: Point) -> Matrix2<f64>;

    /// Squared g-norm of the tangent vector `v` at `p`.
    fn norm_sq(&self, p: Point, v: Vector2<f64>) -> f64 {
        self.factor(p) * v.norm_squared()
    }

    /// Length of a polyline, weighting every segment by `sqrt(phi)` at its
    /// Euclidean midpoint. Closed trajectories include the wrap-around segment.
    fn weighted_length(&self, traj: &Trajectory) -> Result<f64> {
        if traj.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "weighted length needs at least 2 points, got {}",
                traj.len()
            )));
        }
        Ok(traj
            .segments()
            .map(|(a, b)| self.factor(a.midpoint(b)).sqrt() * a.distance(b))
            .sum())
    }
}

impl<M: ConformalMetric + ?Sized> ConformalMetric for &M {
    fn factor(&self, p: Point) -> f64 {
        (**self).factor(p)
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        (**self).gradient(p)
    }

    fn hessian(&self, p: Point) -> Matrix2<f64> {
        (**self).hessian(p)
    }
}

/// `phi(r, z) = r^2 exp(-(r^2 + z^2) / 2) / 4`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AngenentMetric;

impl AngenentMetric {
    fn gaussian(p: Point) -> f64 {
        (-(p.r * p.r + p.z * p.z) / 2.0).exp()
    }
}

impl ConformalMetric for AngenentMetric {
    fn factor(&self, p: Point) -> f64 {
        0.25 * p.r * p.r * Self::gaussian(p)
    }

    fn gradient(&self, p: Point) -> Vector2<f64> {
        let (r, z) = (p.r, p.z);
        let e = 0.25 * Self::gaussian(p);
        Vector2::new((2.0 * r - r * r * r) * e, -r * r * z * e)
    }

    fn hessian(&self, p: Point) -> Matrix2<f64> {
        let (r, z) = (p.r, p.z);
        let (r2, z2) = (r * r, z * z);
        let e = 0.25 * Self::gaussian(p);
        let rr = (2.0 - 5.0 * r2 + r2 * r2) * e;
        let rz = -z * (2.0 * r - r2 * r) * e;
        let zz = -r2 * (1.0 - z2) * e;
        Matrix2::new(rr, rz, rz, zz)
    }
}

/// `phi = 1`; geodesics are straight lines traversed at constant speed.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FlatMetric;

impl ConformalMetric for FlatMetric {
    fn factor(&self, _p: Point) -> f64 {
        1.0
    }

    fn gradient(&self, _p: Point) -> Vector2<f64> {
        Vector2::zeros()
    }

    fn hessian(&self, _p: Point) -> Matrix2<f64> {
        Matrix2::zeros()
    }
}

pub fn conformal_factor(p: Point) -> f64 {
    AngenentMetric.factor(p)
}

pub fn conformal_factor_gradient(p: Point) -> Vector2<f64> {
    AngenentMetric.gradient(p)
}

pub fn g_norm_sq(p: Point, v: Vector2<f64>) -> f64 {
    AngenentMetric.norm_sq(p, v)
}

/// Weighted length under the self-shrinker metric; see
/// [`ConformalMetric::weighted_length`].
pub fn weighted_length(traj: &Trajectory) -> Result<f64> {
    AngenentMetric.weighted_length(traj)
}

/// Self-shrinkers with closed-form entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceShape {
    Plane,
    Sphere,
    Cylinder,
}

pub fn reference_entropy(shape: ReferenceShape) -> f64 {
    match shape {
        ReferenceShape::Plane => 1.0,
        ReferenceShape::Sphere => 4.0 / E,
        ReferenceShape::Cylinder => (2.0 * PI / E).sqrt(),
    }
}

//! Midpoint discrete Lagrangian for the pure kinetic Lagrangian
//! `L(q, v) = |v|_g^2 / 2`, its derivatives, the discrete action, and the
//! discrete Euler-Lagrange residuals.

use nalgebra::{Matrix2, Vector2};

use crate::metric::{AngenentMetric, ConformalMetric, Point};
use crate::trajectory::Trajectory;
use crate::{Error, Result};

/// The three distinct 2x2 blocks of the Hessian of `L_d(q0, q1)`.
///
/// `d00 = d^2/dq0^2`, `d11 = d^2/dq1^2`, `d01[(i, j)] = d^2 / dq0_i dq1_j`.
/// The remaining block is `d01.transpose()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianBlocks {
    pub d00: Matrix2<f64>,
    pub d01: Matrix2<f64>,
    pub d11: Matrix2<f64>,
}

/// `L_d(q0, q1) = tau * L((q0 + q1) / 2, (q1 - q0) / tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteLagrangian<M = AngenentMetric> {
    metric: M,
    tau: f64,
}

impl Default for DiscreteLagrangian<AngenentMetric> {
    fn default() -> Self {
        Self {
            metric: AngenentMetric,
            tau: 1.0,
        }
    }
}

impl<M: ConformalMetric> DiscreteLagrangian<M> {
    pub fn new(metric: M, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "time step must be positive, got {tau}"
            )));
        }
        Ok(Self { metric, tau })
    }

    pub fn metric(&self) -> &M {
        &self.metric
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn ld(&self, q0: Point, q1: Point) -> f64 {
        let phi = self.metric.factor(q0.midpoint(q1));
        phi * q0.displacement_to(q1).norm_squared() / (2.0 * self.tau)
    }

    fn gradient_parts(&self, q0: Point, q1: Point) -> (Vector2<f64>, Vector2<f64>) {
        let m = q0.midpoint(q1);
        let delta = q0.displacement_to(q1);
        let common = self.metric.gradient(m) * (delta.norm_squared() / (4.0 * self.tau));
        let stretch = delta * (self.metric.factor(m) / self.tau);
        (common, stretch)
    }

    /// Gradient of `L_d` with respect to its first argument.
    pub fn d0_ld(&self, q0: Point, q1: Point) -> Vector2<f64> {
        let (common, stretch) = self.gradient_parts(q0, q1);
        common - stretch
    }

    /// Gradient of `L_d` with respect to its second argument.
    pub fn d1_ld(&self, q0: Point, q1: Point) -> Vector2<f64> {
        let (common, stretch) = self.gradient_parts(q0, q1);
        common + stretch
    }

    pub fn second_derivative_blocks(&self, q0: Point, q1: Point) -> HessianBlocks {
        let m = q0.midpoint(q1);
        let delta = q0.displacement_to(q1);
        let tau = self.tau;
        let phi = self.metric.factor(m);
        let grad = self.metric.gradient(m);
        let curvature = self.metric.hessian(m) * (delta.norm_squared() / (8.0 * tau));
        let outer = grad * delta.transpose();
        let sym = (outer + outer.transpose()) / (2.0 * tau);
        let skew = (outer - outer.transpose()) / (2.0 * tau);
        let id = Matrix2::identity() * (phi / tau);
        HessianBlocks {
            d00: curvature - sym + id,
            d01: curvature + skew - id,
            d11: curvature + sym + id,
        }
    }

    /// Sum of `L_d` over every segment, wrap-around included when closed.
    pub fn discrete_action(&self, traj: &Trajectory) -> f64 {
        traj.segments().map(|(a, b)| self.ld(a, b)).sum()
    }

    /// Discrete Euler-Lagrange residuals
    /// `R_k = D1 L_d(q_{k-1}, q_k) + D0 L_d(q_k, q_{k+1})`.
    ///
    /// Open trajectories yield one residual per interior point (endpoints are
    /// fixed data). Closed trajectories yield one per point with indices taken
    /// modulo `N`. In both cases `R_k` is the gradient of the discrete action
    /// with respect to the free point `q_k`.
    pub fn del_residual(&self, traj: &Trajectory) -> Vec<Vector2<f64>> {
        let pts = &traj.points;
        let n = pts.len();
        if traj.closed {
            if n == 0 {
                return Vec::new();
            }
            (0..n)
                .map(|k| {
                    let prev = pts[(k + n - 1) % n];
                    let next = pts[(k + 1) % n];
                    self.d1_ld(prev, pts[k]) + self.d0_ld(pts[k], next)
                })
                .collect()
        } else {
            pts.windows(3)
                .map(|w| self.d1_ld(w[0], w[1]) + self.d0_ld(w[1], w[2]))
                .collect()
        }
    }

    /// `sqrt(2 tau L_d)`, the midpoint estimate of the g-distance between
    /// two nearby points.
    pub fn segment_length(&self, q0: Point, q1: Point) -> f64 {
        (2.0 * self.tau * self.ld(q0, q1)).sqrt()
    }
}

pub fn residual_inf_norm(residuals: &[Vector2<f64>]) -> f64 {
    residuals.iter().map(|v| v.amax()).fold(0.0, f64::max)
}

pub fn residual_l2_norm(residuals: &[Vector2<f64>]) -> f64 {
    residuals
        .iter()
        .map(|v| v.norm_squared())
        .sum::<f64>()
        .sqrt()
}

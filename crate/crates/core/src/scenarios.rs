//! End-to-end pipelines for the Angenent torus, the sphere and the cylinder.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::mechanics::DiscreteLagrangian;
use crate::metric::{ConformalMetric, Point};
use crate::solver::{shoot, solve_closed, solve_open, SolveConfig, SolveReport};
use crate::trajectory::Trajectory;
use crate::{Error, Result};

/// Starting radius of the shooting guess for the torus cross-section.
pub const ANGENENT_START_R: f64 = 3.3;
/// `N` times the initial vertical offset of the shooting guess.
pub const ANGENENT_START_SPAN: f64 = 8.5;
pub const SPHERE_RADIUS: f64 = 2.0;
pub const DEFAULT_Z_CUT: f64 = 8.0;
const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub trajectory: Trajectory,
    pub entropy: f64,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    /// `r` where the curve crosses `z = 0`, ascending.
    pub z0_intercepts: Vec<f64>,
    pub max_z_point: Point,
    pub min_r: f64,
    pub max_r: f64,
}

fn check_points(n_points: usize) -> Result<()> {
    if n_points < MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_POINTS} points, got {n_points}"
        )));
    }
    Ok(())
}

/// Shoots `n_points` steps from `(3.3, -8.5/N)`, `(3.3, 8.5/N)` and closes the
/// loop by dropping the final point, which lands near the start.
pub fn angenent_initial_guess<M: ConformalMetric>(
    n_points: usize,
    dl: &DiscreteLagrangian<M>,
    cfg: &SolveConfig,
) -> Result<Trajectory> {
    check_points(n_points)?;
    let offset = ANGENENT_START_SPAN / n_points as f64;
    let q0 = Point::new(ANGENENT_START_R, -offset);
    let q1 = Point::new(ANGENENT_START_R, offset);
    let mut open = shoot(q0, q1, n_points, dl, cfg)?;
    open.points.pop();
    Ok(Trajectory::closed(open.points))
}

pub fn solve_angenent<M: ConformalMetric>(
    n_points: usize,
    dl: &DiscreteLagrangian<M>,
    cfg: &SolveConfig,
) -> Result<ScenarioResult> {
    let guess = angenent_initial_guess(n_points, dl, cfg)?;
    let (trajectory, report) = solve_closed(&guess, dl, cfg)?;
    let entropy = entropy_estimate(&trajectory, dl);
    Ok(ScenarioResult {
        trajectory,
        entropy,
        report,
    })
}

/// `sum_k sqrt(2 tau L_d(q_{k-1}, q_k))`, the midpoint estimate of the
/// g-length, which for a self-shrinker cross-section is its entropy.
pub fn entropy_estimate<M: ConformalMetric>(traj: &Trajectory, dl: &DiscreteLagrangian<M>) -> f64 {
    traj.segments().map(|(a, b)| dl.segment_length(a, b)).sum()
}

/// Intercepts by linear interpolation on sign-changing segments; the top of
/// the curve by a parabola through the highest vertex and its neighbours.
pub fn geometry_summary(traj: &Trajectory) -> GeometrySummary {
    let pts = &traj.points;
    let n = pts.len();
    if n == 0 {
        return GeometrySummary {
            z0_intercepts: Vec::new(),
            max_z_point: Point::default(),
            min_r: f64::NAN,
            max_r: f64::NAN,
        };
    }

    let mut z0_intercepts: Vec<f64> = traj
        .segments()
        .filter(|(a, b)| (a.z < 0.0) != (b.z < 0.0))
        .map(|(a, b)| a.r + (b.r - a.r) * (-a.z) / (b.z - a.z))
        .collect();
    z0_intercepts.sort_by(f64::total_cmp);

    let top = (0..n)
        .max_by(|&i, &j| pts[i].z.total_cmp(&pts[j].z))
        .unwrap_or(0);
    let neighbours = if traj.closed && n >= 3 {
        Some(((top + n - 1) % n, (top + 1) % n))
    } else if top > 0 && top + 1 < n {
        Some((top - 1, top + 1))
    } else {
        None
    };
    let max_z_point = match neighbours {
        Some((prev, next)) => parabola_vertex(pts[prev], pts[top], pts[next]),
        None => pts[top],
    };

    let min_r = pts.iter().map(|p| p.r).fold(f64::INFINITY, f64::min);
    let max_r = pts.iter().map(|p| p.r).fold(f64::NEG_INFINITY, f64::max);
    GeometrySummary {
        z0_intercepts,
        max_z_point,
        min_r,
        max_r,
    }
}

/// Extremum of the parabola `z(t)` through `(-1, a.z), (0, b.z), (1, c.z)`,
/// with `r` interpolated by the parabola through the matching `r` values.
fn parabola_vertex(a: Point, b: Point, c: Point) -> Point {
    let curvature = a.z - 2.0 * b.z + c.z;
    if curvature == 0.0 {
        return b;
    }
    let t = ((a.z - c.z) / (2.0 * curvature)).clamp(-1.0, 1.0);
    let quad =
        |fa: f64, fb: f64, fc: f64| fb + 0.5 * (fc - fa) * t + 0.5 * (fa - 2.0 * fb + fc) * t * t;
    Point::new(quad(a.r, b.r, c.r), quad(a.z, b.z, c.z))
}

/// Geodesic between the poles `(0, -2)` and `(0, 2)`, started from the exact
/// semicircle cut into arcs of equal g-length (`sin theta` equally spaced).
pub fn solve_sphere<M: ConformalMetric>(
    n_points: usize,
    dl: &DiscreteLagrangian<M>,
    cfg: &SolveConfig,
) -> Result<ScenarioResult> {
    check_points(n_points)?;
    let interior: Vec<Point> = (1..n_points)
        .map(|k| {
            let theta = (-1.0 + 2.0 * k as f64 / n_points as f64).asin();
            Point::new(SPHERE_RADIUS * theta.cos(), SPHERE_RADIUS * theta.sin())
        })
        .collect();
    let (trajectory, report) = solve_open(
        Point::new(0.0, -SPHERE_RADIUS),
        Point::new(0.0, SPHERE_RADIUS),
        &interior,
        dl,
        cfg,
    )?;
    let entropy = entropy_estimate(&trajectory, dl);
    Ok(ScenarioResult {
        trajectory,
        entropy,
        report,
    })
}

/// Inverse of `erf` on `(-1, 1)` by safeguarded Newton iteration.
fn erf_inv(y: f64) -> f64 {
    let (mut lo, mut hi) = (-6.0, 6.0);
    let mut x = 0.0;
    for _ in 0..100 {
        let fx = libm::erf(x) - y;
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let next = x - fx / (2.0 / PI.sqrt() * (-x * x).exp());
        let next = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Geodesic along `r = sqrt 2` between `z = -z_cut` and `z = z_cut`, started
/// from the straight segment cut into pieces of equal g-length.
pub fn solve_cylinder<M: ConformalMetric>(
    n_points: usize,
    z_cut: f64,
    dl: &DiscreteLagrangian<M>,
    cfg: &SolveConfig,
) -> Result<ScenarioResult> {
    check_points(n_points)?;
    if !(z_cut > 0.0 && z_cut.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "z_cut must be positive, got {z_cut}"
        )));
    }
    let (trajectory, report) = solve_open(
        Point::new(SQRT_2, -z_cut),
        Point::new(SQRT_2, z_cut),
        &cylinder_initial_guess(n_points, z_cut),
        dl,
        cfg,
    )?;
    let entropy = entropy_estimate(&trajectory, dl);
    Ok(ScenarioResult {
        trajectory,
        entropy,
        report,
    })
}

/// Interior points `z_k = 2 erfinv(-e + 2 e k / N)`, `e = erf(z_cut / 2)`.
pub fn cylinder_initial_guess(n_points: usize, z_cut: f64) -> Vec<Point> {
    let e = libm::erf(z_cut / 2.0);
    (1..n_points)
        .map(|k| {
            let z = 2.0 * erf_inv(-e + 2.0 * e * k as f64 / n_points as f64);
            Point::new(SQRT_2, z.clamp(-z_cut, z_cut))
        })
        .collect()
}

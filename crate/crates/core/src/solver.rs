//! Nonlinear solvers for the discrete Euler-Lagrange equations.
//!
//! * [`shoot_step`] / [`shoot`]: advance a trajectory one point at a time by
//!   solving the 2x2 equation for the next point.
//! * [`solve_closed`]: all points of a closed curve at once (block-cyclic).
//! * [`solve_open`]: interior points between two fixed endpoints
//!   (block-tridiagonal).
//!
//! The Newton matrix of the full systems is the Hessian of the discrete action
//! and therefore symmetric. The Levenberg-Marquardt step
//! `(J^T J + mu^2 I) d = -J^T F` then equals `d = -Re[(J + i mu I)^{-1} F]`,
//! so the damped step costs one complex block-tridiagonal solve and never
//! forms `J^T J`.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::BlockSystem;
use crate::mechanics::{residual_inf_norm, DiscreteLagrangian};
use crate::metric::{ConformalMetric, Point};
use crate::trajectory::Trajectory;
use crate::{Error, Result};

const MAX_HALVINGS: usize = 30;
const MIN_DAMPING: f64 = 1e-24;
const MAX_DAMPING: f64 = 1e20;
const RANK_DEFICIENCY_RATIO: f64 = 1e-8;
const DENSE_MAX_POINTS: usize = 512;
const JACOBI_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolver {
    /// Block (cyclic) tridiagonal factorization, O(N) per iteration.
    #[default]
    Structured,
    /// Dense LU on the assembled matrix; limited to 512 points.
    Dense,
}

/// How the reparametrization freedom of closed curves is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// Leave the near-null direction to the damping.
    #[default]
    Free,
    /// Fix `z` of point 0 at 0 and drop its equation.
    PinFirstZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub max_iterations: usize,
    /// Infinity norm of the residual that counts as converged.
    pub residual_tolerance: f64,
    /// Infinity norm of an update below which iteration stops.
    pub step_tolerance: f64,
    pub lm_initial_damping: f64,
    pub lm_damping_growth: f64,
    pub lm_damping_shrink: f64,
    pub gauge: Gauge,
    pub linear_solver: LinearSolver,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            residual_tolerance: 1e-12,
            step_tolerance: 1e-14,
            lm_initial_damping: 1e-6,
            lm_damping_growth: 10.0,
            lm_damping_shrink: 0.1,
            gauge: Gauge::Free,
            linear_solver: LinearSolver::Structured,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("residual_tolerance", self.residual_tolerance),
            ("step_tolerance", self.step_tolerance),
            ("lm_initial_damping", self.lm_initial_damping),
            ("lm_damping_shrink", self.lm_damping_shrink),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.lm_damping_growth > 1.0) || !(self.lm_damping_shrink < 1.0) {
            return Err(Error::InvalidInput(
                "damping growth must exceed 1 and shrink be below 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    /// Number of damped linear solves performed.
    pub iterations: usize,
    /// Infinity norm of the final residual.
    pub final_residual_norm: f64,
    /// Jacobi-weighted residual norm of the initial and every accepted
    /// iterate. The weights are fixed at the start of the solve.
    pub residual_history: Vec<f64>,
    /// Smallest over largest singular value of the final Newton matrix.
    pub singular_value_ratio: f64,
    pub jacobian_rank_deficient: bool,
}

/// State carried by a failed trajectory solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSolve {
    pub trajectory: Trajectory,
    pub report: SolveReport,
}

/// Solves `D1 L_d(q_prev, q_cur) + D0 L_d(q_cur, q_next) = 0` for `q_next`.
pub fn shoot_step<M: ConformalMetric>(
    q_prev: Point,
    q_cur: Point,
    dl: &DiscreteLagrangian<M>,
    cfg: &SolveConfig,
) -> Result<Point> {
    cfg.validate()?;
    if !(q_cur.r > 0.0) {
        return Err(Error::LeftHalfPlane { partial: None });
    }
    let momentum = dl.d1_ld(q_prev, q_cur);
    let residual = |x: Point| momentum + dl.d0_ld(q_cur, x);

    let velocity = q_prev.displacement_to(q_cur);
    let mut x = q_cur + velocity;
    let mut halvings = 0;
    while !(x.r > 0.0) {
        halvings += 1;
        if halvings > MAX_HALVINGS {
            return Err(Error::LeftHalfPlane { partial: None });
        }
        x = q_cur + velocity * 0.5f64.powi(halvings as i32);
    }

    let mut f = residual(x);
    for _ in 0..cfg.max_iterations {
        if f.amax() <= cfg.residual_tolerance {
            return Ok(x);
        }
        let jac = dl.second_derivative_blocks(q_cur, x).d01;
        let delta = newton_step_2x2(&jac, &f).ok_or(Error::SingularJacobian)?;
        let mut step = delta;
        let mut trial = x + step;
        let mut halvings = 0;
        while !(trial.r > 0.0) {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::LeftHalfPlane { partial: None });
            }
            step *= 0.5;
            trial = x + step;
        }
        x = trial;
        f = residual(x);
        if step.amax() <= cfg.step_tolerance * (1.0 + x.r.abs().max(x.z.abs())) {
            break;
        }
    }
    if f.amax() <= cfg.residual_tolerance {
        Ok(x)
    } else {
        Err(Error::NonConvergence {
            iterations: cfg.max_iterations,
            residual_norm: f.amax(),
            partial: None,
        })
    }
}

/// Newton step for a 2x2 system, retried once with Levenberg-Marquardt
/// damping when the Jacobian is singular.
fn newton_step_2x2(jac: &Matrix2<f64>, f: &Vector2<f64>) -> Option<Vector2<f64>> {
    if let Some(inv) = jac
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
    {
        return Some(-(inv * f));
    }
    let normal = jac.transpose() * jac;
    let damping = 1e-6 * normal.norm().max(f64::MIN_POSITIVE);
    let damped = normal + Matrix2::identity() * damping;
    damped
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .map(|inv| -(inv * (jac.transpose() * f)))
}

/// Iterates [`shoot_step`] to produce the open trajectory `q_0, ..., q_steps`.
pub fn shoot<M: ConformalMetric>(
    q0: Point,
    q1: Point,
    steps: usize,
    dl: &DiscreteLagrangian<M>,
    cfg: &SolveConfig,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidInput(
            "shooting needs at least one step".into(),
        ));
    }
    if !(q0.r > 0.0 && q1.r > 0.0) {
        return Err(Error::InvalidInput("initial points must have r > 0".into()));
    }
    let mut points = Vec::with_capacity(steps + 1);
    points.push(q0);
    points.push(q1);
    for k in 1..steps {
        let next = shoot_step(points[k - 1], points[k], dl, cfg).map_err(|e| Error::Shooting {
            index: k + 1,
            source: Box::new(e),
        })?;
        points.push(next);
    }
    Ok(Trajectory::open(points))
}

/// Solves the closed discrete Euler-Lagrange system for every point of
/// `initial`.
pub fn solve_closed<M: ConformalMetric>(
    initial: &Trajectory,
    dl: &DiscreteLagrangian<M>,
    cfg: &SolveConfig,
) -> Result<(Trajectory, SolveReport)> {
    if !initial.closed {
        return Err(Error::InvalidInput(
            "solve_closed needs a closed trajectory".into(),
        ));
    }
    initial.validate()?;
    let mut start = initial.clone();
    if cfg.gauge == Gauge::PinFirstZ {
        start.points[0].z = 0.0;
    }
    LmSolver { dl, cfg }.run(start)
}

/// Solves for the interior points of the discrete geodesic joining fixed
/// endpoints `q_start` and `q_end`.
pub fn solve_open<M: ConformalMetric>(
    q_start: Point,
    q_end: Point,
    initial_interior: &[Point],
    dl: &DiscreteLagrangian<M>,
    cfg: &SolveConfig,
) -> Result<(Trajectory, SolveReport)> {
    let mut points = Vec::with_capacity(initial_interior.len() + 2);
    points.push(q_start);
    points.extend_from_slice(initial_interior);
    points.push(q_end);
    let traj = Trajectory::open(points);
    traj.validate()?;
    LmSolver { dl, cfg }.run(traj)
}

struct LmSolver<'a, M> {
    dl: &'a DiscreteLagrangian<M>,
    cfg: &'a SolveConfig,
}

impl<M: ConformalMetric> LmSolver<'_, M> {
    /// Index range of the unknown points.
    fn free_range(traj: &Trajectory) -> std::ops::Range<usize> {
        if traj.closed {
            0..traj.len()
        } else {
            1..traj.len() - 1
        }
    }

    fn pinned(&self, traj: &Trajectory) -> bool {
        traj.closed && self.cfg.gauge == Gauge::PinFirstZ
    }

    fn residual(&self, traj: &Trajectory) -> Vec<Vector2<f64>> {
        let mut f = self.dl.del_residual(traj);
        if self.pinned(traj) {
            f[0].y = 0.0;
        }
        f
    }

    /// Hessian of the discrete action with respect to the free points.
    fn jacobian(&self, traj: &Trajectory) -> BlockSystem<f64> {
        let pts = &traj.points;
        let n = pts.len();
        let blocks: Vec<_> = traj
            .segments()
            .map(|(a, b)| self.dl.second_derivative_blocks(a, b))
            .collect();
        if traj.closed {
            let diag = (0..n)
                .map(|k| blocks[(k + n - 1) % n].d11 + blocks[k].d00)
                .collect();
            let upper: Vec<_> = (0..n - 1).map(|k| blocks[k].d01).collect();
            let lower = upper.iter().map(|m| m.transpose()).collect();
            let wrap = blocks[n - 1].d01;
            BlockSystem {
                diag,
                lower,
                upper,
                corners: Some((wrap.transpose(), wrap)),
            }
        } else {
            let m = n - 2;
            let diag = (1..=m).map(|k| blocks[k - 1].d11 + blocks[k].d00).collect();
            let upper: Vec<_> = (1..m).map(|k| blocks[k].d01).collect();
            let lower = upper.iter().map(|b| b.transpose()).collect();
            BlockSystem {
                diag,
                lower,
                upper,
                corners: None,
            }
        }
    }

    fn pin_gauge(system: &mut BlockSystem<f64>) {
        let d = &mut system.diag[0];
        d[(0, 1)] = 0.0;
        d[(1, 0)] = 0.0;
        d[(1, 1)] = 1.0;
        if let Some(u) = system.upper.first_mut() {
            u[(1, 0)] = 0.0;
            u[(1, 1)] = 0.0;
        }
        if let Some(l) = system.lower.first_mut() {
            l[(0, 1)] = 0.0;
            l[(1, 1)] = 0.0;
        }
        if let Some((top_right, bottom_left)) = system.corners.as_mut() {
            top_right[(1, 0)] = 0.0;
            top_right[(1, 1)] = 0.0;
            bottom_left[(0, 1)] = 0.0;
            bottom_left[(1, 1)] = 0.0;
        }
    }

    fn complex_solve(
        &self,
        system: &BlockSystem<Complex64>,
        rhs: &[Vector2<Complex64>],
    ) -> Result<Vec<Vector2<Complex64>>> {
        match self.cfg.linear_solver {
            LinearSolver::Structured => system.solve(rhs),
            LinearSolver::Dense => system.solve_dense(rhs),
        }
    }

    /// `-Re[(J + i mu I)^{-1} F]`.
    fn damped_step(
        &self,
        jac: &BlockSystem<f64>,
        f: &[Vector2<f64>],
        mu: f64,
    ) -> Result<Vec<Vector2<f64>>> {
        let rhs: Vec<_> = f
            .iter()
            .map(|v| v.map(|c| Complex64::new(c, 0.0)))
            .collect();
        let y = self.complex_solve(&jac.complex_shift(mu), &rhs)?;
        Ok(y.iter().map(|v| v.map(|c| -c.re)).collect())
    }

    fn apply(
        traj: &Trajectory,
        range: &std::ops::Range<usize>,
        step: &[Vector2<f64>],
    ) -> Trajectory {
        let mut out = traj.clone();
        for (p, d) in out.points[range.clone()].iter_mut().zip(step) {
            *p = *p + *d;
        }
        out
    }

    fn run(&self, mut traj: Trajectory) -> Result<(Trajectory, SolveReport)> {
        self.cfg.validate()?;
        let cfg = self.cfg;
        if cfg.linear_solver == LinearSolver::Dense && traj.len() > DENSE_MAX_POINTS + 2 {
            return Err(Error::InvalidInput(format!(
                "dense linear solver is limited to {DENSE_MAX_POINTS} points"
            )));
        }
        let range = Self::free_range(&traj);
        let mut report = SolveReport::default();
        if range.is_empty() {
            report.converged = true;
            return Ok((traj, report));
        }

        // Jacobi scaling is frozen at the initial Jacobian so the weighted
        // merit is one fixed norm for the whole solve.
        let mut jac = self.jacobian(&traj);
        let pinned = self.pinned(&traj);
        if pinned {
            Self::pin_gauge(&mut jac);
        }
        let scaling = jacobi_scaling(&jac);
        let weighted = |f: &[Vector2<f64>]| {
            f.iter()
                .zip(&scaling)
                .map(|(v, s)| v.component_mul(s).norm_squared())
                .sum::<f64>()
                .sqrt()
        };

        let mut f = self.residual(&traj);
        let mut merit = weighted(&f);
        report.residual_history.push(merit);
        let mut damping = cfg.lm_initial_damping;
        let mut left_half_plane = false;

        'outer: while residual_inf_norm(&f) > cfg.residual_tolerance {
            if report.iterations >= cfg.max_iterations {
                break;
            }
            if report.iterations > 0 {
                jac = self.jacobian(&traj);
                if pinned {
                    Self::pin_gauge(&mut jac);
                }
            }
            let scaled_jac = scale_system(&jac, &scaling);
            let scaled_f: Vec<_> = f
                .iter()
                .zip(&scaling)
                .map(|(v, s)| v.component_mul(s))
                .collect();
            loop {
                report.iterations += 1;
                let mu = damping.sqrt();
                let mut step = match self.damped_step(&scaled_jac, &scaled_f, mu) {
                    Ok(step) => step
                        .iter()
                        .zip(&scaling)
                        .map(|(d, s)| d.component_mul(s))
                        .collect::<Vec<_>>(),
                    Err(Error::SingularJacobian) => {
                        damping *= cfg.lm_damping_growth;
                        if damping > MAX_DAMPING || report.iterations >= cfg.max_iterations {
                            break 'outer;
                        }
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let mut trial = Self::apply(&traj, &range, &step);
                let mut halvings = 0;
                while trial.points[range.clone()].iter().any(|p| !(p.r > 0.0)) {
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        left_half_plane = true;
                        break 'outer;
                    }
                    step.iter_mut().for_each(|d| *d *= 0.5);
                    trial = Self::apply(&traj, &range, &step);
                }
                let trial_f = self.residual(&trial);
                let trial_merit = weighted(&trial_f);
                if trial_merit < merit {
                    traj = trial;
                    f = trial_f;
                    merit = trial_merit;
                    report.residual_history.push(merit);
                    damping = (damping * cfg.lm_damping_shrink).max(MIN_DAMPING);
                    let step_size = step.iter().map(|d| d.amax()).fold(0.0, f64::max);
                    if step_size <= cfg.step_tolerance {
                        break 'outer;
                    }
                    break;
                }
                damping *= cfg.lm_damping_growth;
                if damping > MAX_DAMPING || report.iterations >= cfg.max_iterations {
                    break 'outer;
                }
            }
        }

        report.final_residual_norm = residual_inf_norm(&f);
        report.converged = !left_half_plane && report.final_residual_norm <= cfg.residual_tolerance;
        if let Some(ratio) = self.singular_value_ratio(&self.jacobian(&traj)) {
            report.singular_value_ratio = ratio;
            report.jacobian_rank_deficient = ratio < RANK_DEFICIENCY_RATIO;
        } else {
            report.jacobian_rank_deficient = true;
        }
        if report.converged {
            return Ok((traj, report));
        }
        let partial = Some(Box::new(PartialSolve {
            trajectory: traj,
            report: report.clone(),
        }));
        Err(if left_half_plane {
            Error::LeftHalfPlane { partial }
        } else {
            Error::NonConvergence {
                iterations: report.iterations,
                residual_norm: report.final_residual_norm,
                partial,
            }
        })
    }

    /// Estimates `sigma_min / sigma_max` of the symmetric Newton matrix by
    /// power iteration and shifted inverse iteration.
    fn singular_value_ratio(&self, jac: &BlockSystem<f64>) -> Option<f64> {
        let n = jac.dim();
        let start: Vec<Vector2<f64>> = (0..n)
            .map(|k| Vector2::new(1.0 + (k % 7) as f64 * 0.1, 1.0 - (k % 5) as f64 * 0.1))
            .collect();
        let norm = |v: &[Vector2<f64>]| v.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();

        let mut v = start.clone();
        let mut sigma_max = 0.0;
        for _ in 0..60 {
            let w = jac.mul_vec(&v);
            sigma_max = norm(&w) / norm(&v);
            if !(sigma_max > 0.0 && sigma_max.is_finite()) {
                return Some(0.0);
            }
            v = w;
            let s = norm(&v);
            v.iter_mut().for_each(|x| *x /= s);
        }

        let shift = 1e-10 * sigma_max;
        let shifted = jac.complex_shift(shift);
        let mut v: Vec<Vector2<Complex64>> = start
            .iter()
            .map(|x| x.map(|c| Complex64::new(c, 0.0)))
            .collect();
        let cnorm = |v: &[Vector2<Complex64>]| {
            v.iter()
                .map(|x| x.iter().map(|c| c.norm_sqr()).sum::<f64>())
                .sum::<f64>()
                .sqrt()
        };
        let mut gain = 0.0;
        for _ in 0..40 {
            let w = self.complex_solve(&shifted, &v).ok()?;
            gain = cnorm(&w) / cnorm(&v);
            let s = cnorm(&w);
            v = w.into_iter().map(|x| x / Complex64::new(s, 0.0)).collect();
        }
        let sigma_min = (1.0 / (gain * gain) - shift * shift).max(0.0).sqrt();
        Some(sigma_min / sigma_max)
    }
}

/// Per-unknown factors `1 / sqrt|A_ii|` that give the scaled matrix `S A S`
/// a unit diagonal.
fn jacobi_scaling(jac: &BlockSystem<f64>) -> Vec<Vector2<f64>> {
    let floor = jac.max_abs_diagonal() * JACOBI_FLOOR;
    let floor = if floor > 0.0 { floor } else { 1.0 };
    jac.diag
        .iter()
        .map(|d| {
            Vector2::new(
                1.0 / d[(0, 0)].abs().max(floor).sqrt(),
                1.0 / d[(1, 1)].abs().max(floor).sqrt(),
            )
        })
        .collect()
}

fn scale_system(jac: &BlockSystem<f64>, s: &[Vector2<f64>]) -> BlockSystem<f64> {
    let n = s.len();
    let both = |m: &Matrix2<f64>, a: &Vector2<f64>, b: &Vector2<f64>| {
        Matrix2::from_diagonal(a) * m * Matrix2::from_diagonal(b)
    };
    BlockSystem {
        diag: (0..n).map(|k| both(&jac.diag[k], &s[k], &s[k])).collect(),
        lower: (0..n - 1)
            .map(|k| both(&jac.lower[k], &s[k + 1], &s[k]))
            .collect(),
        upper: (0..n - 1)
            .map(|k| both(&jac.upper[k], &s[k], &s[k + 1]))
            .collect(),
        corners: jac
            .corners
            .as_ref()
            .map(|(tr, bl)| (both(tr, &s[0], &s[n - 1]), both(bl, &s[n - 1], &s[0]))),
    }
}

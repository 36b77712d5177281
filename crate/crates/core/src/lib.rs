//! Discrete geodesics of the self-shrinker conformal metric
//! `phi(r, z) = r^2 exp(-(r^2 + z^2) / 2) / 4` on the `(r, z)` half-plane,
//! computed with a midpoint variational integrator, and entropy estimates for
//! the rotationally symmetric self-shrinkers they generate (Angenent torus,
//! sphere, cylinder).

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod io;
pub mod linalg;
pub mod mechanics;
pub mod metric;
pub mod scenarios;
pub mod solver;
pub mod trajectory;

pub use convergence::{convergence_study, fit_power_law, ConvergenceReport, PowerLawFit};
pub use mechanics::{DiscreteLagrangian, HessianBlocks};
pub use metric::{
    conformal_factor, conformal_factor_gradient, g_norm_sq, reference_entropy, weighted_length,
    AngenentMetric, ConformalMetric, FlatMetric, Point, ReferenceShape,
};
pub use scenarios::{
    angenent_initial_guess, cylinder_initial_guess, entropy_estimate, geometry_summary,
    solve_angenent, solve_cylinder, solve_sphere, GeometrySummary, ScenarioResult,
};
pub use solver::{
    shoot, shoot_step, solve_closed, solve_open, Gauge, LinearSolver, PartialSolve, SolveConfig,
    SolveReport,
};
pub use trajectory::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no convergence after {iterations} iterations (residual {residual_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        residual_norm: f64,
        partial: Option<Box<PartialSolve>>,
    },

    #[error("iterate left the half-plane r > 0")]
    LeftHalfPlane { partial: Option<Box<PartialSolve>> },

    #[error("singular Jacobian")]
    SingularJacobian,

    #[error("shooting failed at step {index}: {source}")]
    Shooting {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Best iterate reached by a failed trajectory solve, if one was kept.
    pub fn partial(&self) -> Option<&PartialSolve> {
        match self {
            Error::NonConvergence { partial, .. } | Error::LeftHalfPlane { partial } => {
                partial.as_deref()
            }
            _ => None,
        }
    }
}

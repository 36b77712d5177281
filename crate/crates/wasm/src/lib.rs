//! Browser bindings: metric heatmap, geodesic shooting and the torus solve.
//!
//! Every export has a plain Rust twin (`*_impl`) that the native tests call,
//! since `JsError` cannot be built outside a wasm runtime.

use angenent_core::{
    conformal_factor, shoot, solve_angenent, DiscreteLagrangian, Point, SolveConfig,
};
use wasm_bindgen::prelude::*;

/// Row-major `log10 phi` samples over `(0, r_max] x [-z_max, z_max]`, top row
/// at `z = z_max`. Cells with `phi` below `1e-300` hold `-300`.
#[wasm_bindgen]
pub fn metric_heatmap(width: usize, height: usize, r_max: f64, z_max: f64) -> Vec<f32> {
    let mut out = Vec::with_capacity(width * height);
    for j in 0..height {
        let z = z_max - 2.0 * z_max * (j as f64 + 0.5) / height as f64;
        for i in 0..width {
            let r = r_max * (i as f64 + 0.5) / width as f64;
            out.push(conformal_factor(Point::new(r, z)).max(1e-300).log10() as f32);
        }
    }
    out
}

pub fn shoot_geodesic_impl(
    r0: f64,
    z0: f64,
    r1: f64,
    z1: f64,
    steps: usize,
) -> Result<Vec<f64>, String> {
    let dl = DiscreteLagrangian::default();
    let traj = shoot(
        Point::new(r0, z0),
        Point::new(r1, z1),
        steps,
        &dl,
        &SolveConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(traj.points.iter().flat_map(|p| [p.r, p.z]).collect())
}

/// Shoots a discrete geodesic from `q0 = (r0, z0)`, `q1 = (r1, z1)`.
/// Returns the flat list `[r_0, z_0, r_1, z_1, ...]`.
#[wasm_bindgen]
pub fn shoot_geodesic(
    r0: f64,
    z0: f64,
    r1: f64,
    z1: f64,
    steps: usize,
) -> Result<Vec<f64>, JsError> {
    shoot_geodesic_impl(r0, z0, r1, z1, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct TorusSolution {
    points: Vec<f64>,
    entropy: f64,
    iterations: usize,
    residual: f64,
}

#[wasm_bindgen]
impl TorusSolution {
    /// Flat `[r_0, z_0, r_1, z_1, ...]`, not repeating the first vertex.
    #[wasm_bindgen(getter)]
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    #[wasm_bindgen(getter)]
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

pub fn solve_torus_impl(n_points: usize) -> Result<TorusSolution, String> {
    let dl = DiscreteLagrangian::default();
    let res = solve_angenent(n_points, &dl, &SolveConfig::default()).map_err(|e| e.to_string())?;
    Ok(TorusSolution {
        points: res
            .trajectory
            .points
            .iter()
            .flat_map(|p| [p.r, p.z])
            .collect(),
        entropy: res.entropy,
        iterations: res.report.iterations,
        residual: res.report.final_residual_norm,
    })
}

#[wasm_bindgen]
pub fn solve_torus(n_points: usize) -> Result<TorusSolution, JsError> {
    solve_torus_impl(n_points).map_err(|e| JsError::new(&e))
}

use std::time::Instant;

use angenent_core::{
    convergence_study, geometry_summary, reference_entropy, solve_angenent, solve_cylinder,
    solve_sphere, DiscreteLagrangian, ReferenceShape, SolveConfig,
};

fn main() {
    let dl = DiscreteLagrangian::default();
    let cfg = SolveConfig::default();
    for n in [128, 256, 512, 1024, 2048] {
        let t = Instant::now();
        match solve_angenent(n, &dl, &cfg) {
            Ok(res) => {
                let g = geometry_summary(&res.trajectory);
                println!(
                    "torus N={n}: entropy={:.10} iters={} resid={:.2e} ratio={:.2e} intercepts={:?} top={} ({:?})",
                    res.entropy,
                    res.report.iterations,
                    res.report.final_residual_norm,
                    res.report.singular_value_ratio,
                    g.z0_intercepts,
                    g.max_z_point,
                    t.elapsed()
                );
            }
            Err(e) => println!("torus N={n}: {e}"),
        }
    }
    let report = convergence_study(&[128, 256, 512, 1024, 2048], &dl, &cfg).unwrap();
    println!("{report:#?}");
    for n in [256, 512] {
        match solve_sphere(n, &dl, &cfg) {
            Ok(res) => println!(
                "sphere N={n}: {:.8} err={:.3e} iters={} resid={:.2e}",
                res.entropy,
                res.entropy - reference_entropy(ReferenceShape::Sphere),
                res.report.iterations,
                res.report.final_residual_norm
            ),
            Err(e) => println!("sphere N={n}: {e}"),
        }
    }
    match solve_cylinder(1024, 8.0, &dl, &cfg) {
        Ok(res) => println!(
            "cylinder: {:.8} err={:.3e} iters={} resid={:.2e}",
            res.entropy,
            res.entropy - reference_entropy(ReferenceShape::Cylinder),
            res.report.iterations,
            res.report.final_residual_norm
        ),
        Err(e) => println!("cylinder: {e}"),
    }
}

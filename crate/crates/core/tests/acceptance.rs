//! Acceptance report: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use angenent_core::convergence::analyze_sequence;
use angenent_core::mechanics::residual_inf_norm;
use angenent_core::{
    convergence_study, geometry_summary, reference_entropy, shoot, solve_angenent, solve_closed,
    solve_cylinder, solve_open, solve_sphere, weighted_length, AngenentMetric, DiscreteLagrangian,
    FlatMetric, Point, ReferenceShape, SolveConfig, Trajectory,
};
use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(value: f64, lo: f64, hi: f64) -> bool {
    value >= lo && value <= hi
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let res = solve_angenent(
        2048,
        &DiscreteLagrangian::default(),
        &SolveConfig::default(),
    );
    let elapsed = start.elapsed();
    match res {
        Ok(res) => check(
            within(res.entropy, 1.8512136, 1.8512236) && elapsed <= Duration::from_secs(60),
            format!(
                "N=2048 entropy {:.10}, solve time {:.3} s",
                res.entropy,
                elapsed.as_secs_f64()
            ),
        ),
        Err(e) => check(false, format!("solve failed: {e}")),
    }
}

fn criterion_2() -> Outcome {
    let levels = [128, 256, 512, 1024, 2048];
    let report = match convergence_study(
        &levels,
        &DiscreteLagrangian::default(),
        &SolveConfig::default(),
    ) {
        Ok(r) => r,
        Err(e) => return check(false, format!("sweep failed: {e}")),
    };
    let (Some(limit), Some(slope)) = (report.extrapolated_entropy, report.fitted_order) else {
        return check(
            false,
            "sequence flagged non-monotone, no extrapolation".into(),
        );
    };
    let last = *report.per_level_error_estimates.last().unwrap();
    check(
        within(limit, 1.8512117, 1.8512217)
            && within(slope, -2.10, -1.90)
            && within(last, 1e-6, 4e-6),
        format!("extrapolated {limit:.10}, slope {slope:.4}, N=2048 error {last:.3e}"),
    )
}

fn criterion_3() -> Outcome {
    let res = match solve_angenent(
        2048,
        &DiscreteLagrangian::default(),
        &SolveConfig::default(),
    ) {
        Ok(r) => r,
        Err(e) => return check(false, format!("solve failed: {e}")),
    };
    let s = geometry_summary(&res.trajectory);
    let ok = s.z0_intercepts.len() == 2
        && (s.z0_intercepts[0] - 0.4371).abs() <= 0.005
        && (s.z0_intercepts[1] - 3.3147).abs() <= 0.005
        && (s.max_z_point.r - 2.05).abs() <= 0.02
        && (s.max_z_point.z - 0.92172).abs() <= 0.005;
    check(
        ok,
        format!(
            "intercepts {:?}, max-z point ({:.5}, {:.5})",
            s.z0_intercepts, s.max_z_point.r, s.max_z_point.z
        ),
    )
}

fn criterion_4() -> Outcome {
    match solve_sphere(256, &DiscreteLagrangian::default(), &SolveConfig::default()) {
        Ok(res) => {
            let exact = reference_entropy(ReferenceShape::Sphere);
            check(
                (res.entropy - exact).abs() <= 2e-5 && (res.entropy - 1.471528).abs() <= 1e-5,
                format!(
                    "N=256 entropy {:.8}, |err vs 4/e| {:.3e}, |diff vs 1.471528| {:.3e}",
                    res.entropy,
                    (res.entropy - exact).abs(),
                    (res.entropy - 1.471528).abs()
                ),
            )
        }
        Err(e) => check(false, format!("solve failed: {e}")),
    }
}

fn criterion_5() -> Outcome {
    match solve_cylinder(
        1024,
        8.0,
        &DiscreteLagrangian::default(),
        &SolveConfig::default(),
    ) {
        Ok(res) => {
            let err = res.entropy - reference_entropy(ReferenceShape::Cylinder);
            check(
                err.abs() <= 5e-4,
                format!("N=1024 z_cut=8 entropy {:.8}, error {err:.3e}", res.entropy),
            )
        }
        Err(e) => check(false, format!("solve failed: {e}")),
    }
}

fn criterion_6() -> Outcome {
    let dl = DiscreteLagrangian::default();
    let cfg = SolveConfig::default();
    let run = || -> angenent_core::Result<(f64, f64, f64)> {
        Ok((
            solve_sphere(256, &dl, &cfg)?.entropy,
            solve_cylinder(1024, 8.0, &dl, &cfg)?.entropy,
            solve_angenent(2048, &dl, &cfg)?.entropy,
        ))
    };
    match run() {
        Ok((s, c, t)) => check(
            1.0 < s && s < c && c < t && t < 2.0,
            format!("1 < {s:.6} < {c:.6} < {t:.7} < 2"),
        ),
        Err(e) => check(false, format!("solve failed: {e}")),
    }
}

fn fd_grad(f: impl Fn(Point) -> f64, p: Point, h: f64) -> Vector2<f64> {
    Vector2::new(
        (f(Point::new(p.r + h, p.z)) - f(Point::new(p.r - h, p.z))) / (2.0 * h),
        (f(Point::new(p.r, p.z + h)) - f(Point::new(p.r, p.z - h))) / (2.0 * h),
    )
}

fn property_suite() -> Vec<(&'static str, bool)> {
    let dl = DiscreteLagrangian::default();
    let cfg = SolveConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pair = || {
        let mut p = || Point::new(rng.gen_range(0.5..4.0), rng.gen_range(-3.0..3.0));
        (p(), p())
    };
    let pairs: Vec<(Point, Point)> = (0..1000).map(|_| pair()).collect();
    let mut out = Vec::new();

    let first = pairs.iter().all(|&(a, b)| {
        let (g0, g1) = (dl.d0_ld(a, b), dl.d1_ld(a, b));
        let scale = g0.norm().max(g1.norm());
        (g0 - fd_grad(|x| dl.ld(x, b), a, 1e-6)).amax() <= 1e-6 * scale
            && (g1 - fd_grad(|x| dl.ld(a, x), b, 1e-6)).amax() <= 1e-6 * scale
    });
    out.push(("first derivatives vs finite differences", first));

    let second = pairs.iter().all(|&(a, b)| {
        let h = 1e-5;
        let blk = dl.second_derivative_blocks(a, b);
        let scale = blk.d00.amax().max(blk.d01.amax()).max(blk.d11.amax());
        (0..2).all(|j| {
            let e = if j == 0 {
                Vector2::new(h, 0.0)
            } else {
                Vector2::new(0.0, h)
            };
            let c00 = (dl.d0_ld(a + e, b) - dl.d0_ld(a + (-e), b)) / (2.0 * h);
            let c01 = (dl.d0_ld(a, b + e) - dl.d0_ld(a, b + (-e))) / (2.0 * h);
            let c11 = (dl.d1_ld(a, b + e) - dl.d1_ld(a, b + (-e))) / (2.0 * h);
            (blk.d00.column(j) - c00).amax() <= 1e-5 * scale
                && (blk.d01.column(j) - c01).amax() <= 1e-5 * scale
                && (blk.d11.column(j) - c11).amax() <= 1e-5 * scale
        })
    });
    out.push(("second derivatives vs finite differences", second));

    let symmetric = pairs
        .iter()
        .all(|&(a, b)| dl.ld(a, b) == dl.ld(b, a) && dl.d0_ld(a, b) == dl.d1_ld(b, a));
    out.push(("L_d symmetry and D0/D1 swap identity", symmetric));

    let loop_pts: Vec<Point> = (0..24)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 24.0;
            Point::new(
                2.0 + 1.2 * t.cos() + rng.gen_range(-0.05..0.05),
                0.9 * t.sin() + rng.gen_range(-0.05..0.05),
            )
        })
        .collect();
    let traj = Trajectory::closed(loop_pts.clone());
    let res = dl.del_residual(&traj);
    let scale = residual_inf_norm(&res);
    let gradient = (0..loop_pts.len()).all(|k| {
        let fd = fd_grad(
            |x| {
                let mut moved = loop_pts.clone();
                moved[k] = x;
                dl.discrete_action(&Trajectory::closed(moved))
            },
            loop_pts[k],
            1e-6,
        );
        (res[k] - fd).amax() <= 1e-6 * scale
    });
    out.push(("residual equals action gradient", gradient));

    let two = DiscreteLagrangian::new(AngenentMetric, 2.0)
        .unwrap()
        .del_residual(&traj);
    let homogeneous = res.iter().zip(&two).all(|(a, b)| {
        (0..2).all(|i| (0.5 * a[i] - b[i]).abs() <= 1e-13 * a[i].abs().max(f64::MIN_POSITIVE))
    });
    out.push(("tau-homogeneity of residuals", homogeneous));

    let invariant = match solve_angenent(256, &dl, &cfg) {
        Ok(res) => {
            let shifted = res.trajectory.cyclic_shift(101);
            let fixed = match solve_closed(&shifted, &dl, &cfg) {
                Ok((t, rep)) => {
                    rep.iterations <= 1
                        && t.points
                            .iter()
                            .zip(&shifted.points)
                            .all(|(p, q)| (p.r - q.r).abs() <= 1e-12 && (p.z - q.z).abs() <= 1e-12)
                }
                Err(_) => false,
            };
            fixed
                && residual_inf_norm(&dl.del_residual(&res.trajectory.mirrored()))
                    <= cfg.residual_tolerance
        }
        Err(_) => false,
    };
    out.push((
        "cyclic-shift and mirror invariance of closed solutions",
        invariant,
    ));

    let flat = DiscreteLagrangian::new(FlatMetric, 1.0).unwrap();
    let flat_ok = (|| -> angenent_core::Result<bool> {
        let shot = shoot(Point::new(1.0, 0.0), Point::new(1.1, 0.3), 10, &flat, &cfg)?;
        let shot_ok = shot.points.iter().enumerate().all(|(k, p)| {
            (p.r - (1.0 + 0.1 * k as f64)).abs() <= 1e-12 && (p.z - 0.3 * k as f64).abs() <= 1e-12
        });
        let guess: Vec<Point> = (1..16)
            .map(|k| Point::new(1.0 + 0.2 * (k as f64).cos(), 0.1 * k as f64))
            .collect();
        let (open, _) = solve_open(
            Point::new(1.0, 0.0),
            Point::new(3.0, 1.6),
            &guess,
            &flat,
            &cfg,
        )?;
        let open_ok = open.points.iter().enumerate().all(|(k, p)| {
            let t = k as f64 / 16.0;
            (p.r - (1.0 + 2.0 * t)).abs() <= 1e-10 && (p.z - 1.6 * t).abs() <= 1e-10
        });
        let constant = Trajectory::closed(vec![Point::new(1.5, -0.5); 8]);
        let (closed, _) = solve_closed(&constant, &flat, &cfg)?;
        Ok(shot_ok && open_ok && closed == constant)
    })()
    .unwrap_or(false);
    out.push(("flat-metric oracle on all three setups", flat_ok));

    let counts = [128, 256, 512, 1024, 2048];
    let synthetic: Vec<f64> = counts
        .iter()
        .map(|&n| 1.25 + 40.0 / (n as f64).powi(2))
        .collect();
    let fitter = analyze_sequence(&counts, &synthetic).is_ok_and(|r| {
        r.extrapolated_entropy
            .is_some_and(|l| (l - 1.25).abs() <= 1e-10)
            && r.model_exponent.is_some_and(|p| (p - 2.0).abs() <= 1e-10)
    });
    out.push(("fitter self-test on synthetic N^-2 data", fitter));
    out
}

fn criterion_7() -> Outcome {
    let results = property_suite();
    let failed: Vec<&str> = results
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| *n)
        .collect();
    check(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} properties hold", results.len())
        } else {
            format!("failed: {}", failed.join("; "))
        },
    )
}

fn polyline_ratios(levels: &[usize], make: impl Fn(usize) -> Trajectory, exact: f64) -> Vec<f64> {
    let errs: Vec<f64> = levels
        .iter()
        .map(|&n| weighted_length(&make(n)).unwrap() - exact)
        .collect();
    errs.windows(2).map(|w| w[0] / w[1]).collect()
}

fn criterion_8() -> Outcome {
    let semicircle = |n: usize| {
        Trajectory::open(
            (0..n)
                .map(|k| {
                    let t = -PI / 2.0 + PI * k as f64 / (n - 1) as f64;
                    Point::new((2.0 * t.cos()).max(0.0), 2.0 * t.sin())
                })
                .collect(),
        )
    };
    let line = |n: usize| {
        Trajectory::open(
            (0..n)
                .map(|k| Point::new(2f64.sqrt(), -8.0 + 16.0 * k as f64 / (n - 1) as f64))
                .collect(),
        )
    };
    let sphere = polyline_ratios(
        &[128, 256, 512, 1024],
        semicircle,
        reference_entropy(ReferenceShape::Sphere),
    );
    let cylinder = polyline_ratios(
        &[256, 512, 1024, 2048],
        line,
        reference_entropy(ReferenceShape::Cylinder),
    );
    let ok = |r: &[f64]| r.iter().all(|x| (x - 4.0).abs() <= 0.3);
    let fmt = |r: &[f64]| {
        r.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    check(
        ok(&sphere) && ok(&cylinder),
        format!(
            "semicircle ratios [{}], line ratios [{}]",
            fmt(&sphere),
            fmt(&cylinder)
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("torus entropy at N=2048 and runtime", criterion_1),
        ("convergence sweep extrapolation", criterion_2),
        ("torus geometry at N=2048", criterion_3),
        ("sphere entropy at N=256", criterion_4),
        ("cylinder entropy at N=1024", criterion_5),
        ("entropy ordering", criterion_6),
        ("property suite", criterion_7),
        ("quadrature order", criterion_8),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        if !outcome.pass {
            failures += 1;
        }
        println!(
            "criterion {}: {} - {name}: {}",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}

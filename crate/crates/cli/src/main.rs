//! `angenent`: discrete geodesics and entropy of rotationally symmetric
//! self-shrinkers.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use angenent_core::convergence::{analyze_sequence, convergence_study, ConvergenceReport};
use angenent_core::io::{
    convergence_svg, trajectory_svg, write_convergence_csv, write_json, write_trajectory_csv,
    write_trajectory_json, FitSummary, RunManifest, Summary,
};
use angenent_core::{
    entropy_estimate, geometry_summary, solve_angenent, solve_cylinder, solve_sphere,
    AngenentMetric, DiscreteLagrangian, Error, Gauge, LinearSolver, ScenarioResult, SolveConfig,
    Trajectory,
};

#[derive(Debug, Parser)]
#[command(
    name = "angenent",
    version,
    about = "Closed geodesics and entropy of self-shrinkers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the Angenent torus cross-section
    Torus {
        #[arg(long, default_value_t = 2048)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the sphere between the poles (0, -2) and (0, 2)
    Sphere {
        /// Number of segments
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the cylinder r = sqrt 2 between z = -z_cut and z = z_cut
    Cylinder {
        /// Number of segments
        #[arg(long, default_value_t = 1024)]
        points: usize,
        #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
        z_cut: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Torus entropy over several point counts, with extrapolation
    Converge {
        #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024,2048")]
        points_list: Vec<usize>,
        /// Feed the fitter a synthetic sequence instead of solving
        #[arg(long, value_enum, hide = true)]
        oracle: Option<Oracle>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Residual tolerance (infinity norm)
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Time step of the discrete Lagrangian
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Output directory
    #[arg(long, default_value = "angenent-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write an SVG plot
    #[arg(long)]
    svg: bool,
    #[arg(long, value_enum, default_value_t = GaugeArg::Free)]
    gauge: GaugeArg,
    #[arg(long, value_enum, default_value_t = SolverArg::Structured)]
    linear_solver: SolverArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GaugeArg {
    Free,
    Pin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Structured,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Oracle {
    /// `1.8512167 + 512 / N^2`
    Quadratic,
}

/// Why a run stopped.
enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Numerical(e)
    }
}

impl From<angenent_core::io::FormatError> for Failure {
    fn from(e: angenent_core::io::FormatError) -> Self {
        Failure::Numerical(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow::anyhow!(msg.into()))
}

impl Common {
    fn config(&self) -> Result<SolveConfig, Failure> {
        let cfg = SolveConfig {
            max_iterations: self.max_iter,
            residual_tolerance: self.tol,
            gauge: match self.gauge {
                GaugeArg::Free => Gauge::Free,
                GaugeArg::Pin => Gauge::PinFirstZ,
            },
            linear_solver: match self.linear_solver {
                SolverArg::Structured => LinearSolver::Structured,
                SolverArg::Dense => LinearSolver::Dense,
            },
            ..SolveConfig::default()
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }

    fn lagrangian(&self) -> Result<DiscreteLagrangian, Failure> {
        DiscreteLagrangian::new(AngenentMetric, self.tau).map_err(|e| usage(e.to_string()))
    }

    fn parameters(&self) -> BTreeMap<String, Value> {
        BTreeMap::from([
            ("tol".to_string(), json!(self.tol)),
            ("max_iter".to_string(), json!(self.max_iter)),
            ("tau".to_string(), json!(self.tau)),
            ("out".to_string(), json!(self.out.display().to_string())),
            (
                "format".to_string(),
                json!(format!("{:?}", self.format).to_lowercase()),
            ),
            ("svg".to_string(), json!(self.svg)),
            (
                "gauge".to_string(),
                json!(format!("{:?}", self.gauge).to_lowercase()),
            ),
            (
                "linear_solver".to_string(),
                json!(format!("{:?}", self.linear_solver).to_lowercase()),
            ),
        ])
    }
}

/// Collects written files for the manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn write_string(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn manifest(
        mut self,
        command: &str,
        parameters: BTreeMap<String, Value>,
        cfg: &SolveConfig,
        results: BTreeMap<String, Value>,
    ) -> anyhow::Result<()> {
        self.files.push("manifest.json".into());
        let manifest = RunManifest {
            command: command.to_string(),
            parameters,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            solver_config: *cfg,
            results,
            outputs: self.files.clone(),
        };
        write_json(File::create(self.dir.join("manifest.json"))?, &manifest)?;
        Ok(())
    }
}

fn write_trajectory(out: &mut Outputs, traj: &Trajectory, common: &Common) -> anyhow::Result<()> {
    match common.format {
        Format::Csv => write_trajectory_csv(out.create("trajectory.csv")?, traj)?,
        Format::Json => write_trajectory_json(out.create("trajectory.json")?, traj)?,
    }
    if common.svg {
        out.write_string("trajectory.svg", &trajectory_svg(traj))?;
    }
    Ok(())
}

fn summarize(
    shape: &str,
    n_points: usize,
    traj: &Trajectory,
    report: &angenent_core::SolveReport,
    dl: &DiscreteLagrangian,
) -> Summary {
    let geometry = geometry_summary(traj);
    let crosses = !geometry.z0_intercepts.is_empty();
    Summary {
        shape: shape.to_string(),
        n_points,
        closed: traj.closed,
        tau: dl.tau(),
        entropy: entropy_estimate(traj, dl),
        converged: report.converged,
        iterations: report.iterations,
        residual_norm: report.final_residual_norm,
        intercepts: geometry.z0_intercepts,
        max_z_point: (traj.closed || crosses).then_some(geometry.max_z_point),
    }
}

fn summary_results(summary: &Summary) -> BTreeMap<String, Value> {
    BTreeMap::from([
        ("entropy".to_string(), json!(summary.entropy)),
        ("converged".to_string(), json!(summary.converged)),
        ("iterations".to_string(), json!(summary.iterations)),
        ("residual_norm".to_string(), json!(summary.residual_norm)),
        ("intercepts".to_string(), json!(summary.intercepts)),
    ])
}

fn run_shape(
    shape: &str,
    n_points: usize,
    mut parameters: BTreeMap<String, Value>,
    common: &Common,
    solve: impl FnOnce(&DiscreteLagrangian, &SolveConfig) -> angenent_core::Result<ScenarioResult>,
) -> Result<(), Failure> {
    let cfg = common.config()?;
    let dl = common.lagrangian()?;
    parameters.extend(common.parameters());
    parameters.insert("points".into(), json!(n_points));

    let outcome = solve(&dl, &cfg);
    let mut out = Outputs::new(&common.out)?;
    match outcome {
        Ok(res) => {
            write_trajectory(&mut out, &res.trajectory, common)?;
            let summary = summarize(shape, n_points, &res.trajectory, &res.report, &dl);
            write_json(out.create("summary.json")?, &summary)?;
            out.manifest(shape, parameters, &cfg, summary_results(&summary))?;
            println!(
                "{shape}: entropy {:.10} ({} iterations)",
                summary.entropy, summary.iterations
            );
            Ok(())
        }
        Err(err) => {
            let mut results = BTreeMap::from([("error".to_string(), json!(err.to_string()))]);
            if let Some(partial) = err.partial() {
                write_trajectory(&mut out, &partial.trajectory, common)?;
                let summary = summarize(shape, n_points, &partial.trajectory, &partial.report, &dl);
                write_json(out.create("summary.json")?, &summary)?;
                results.extend(summary_results(&summary));
            }
            results.insert("converged".into(), json!(false));
            out.manifest(shape, parameters, &cfg, results)?;
            Err(Failure::Numerical(err.into()))
        }
    }
}

fn oracle_sequence(oracle: Oracle, counts: &[usize]) -> Vec<f64> {
    match oracle {
        Oracle::Quadratic => counts
            .iter()
            .map(|&n| 1.8512167 + 512.0 / (n as f64).powi(2))
            .collect(),
    }
}

fn run_converge(counts: &[usize], oracle: Option<Oracle>, common: &Common) -> Result<(), Failure> {
    if counts.len() < 3 {
        return Err(usage(format!(
            "--points-list needs at least 3 counts, got {}",
            counts.len()
        )));
    }
    if counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--points-list must be strictly increasing"));
    }
    let cfg = common.config()?;
    let dl = common.lagrangian()?;
    let mut parameters = common.parameters();
    parameters.insert("points_list".into(), json!(counts));
    if let Some(o) = oracle {
        parameters.insert("oracle".into(), json!(format!("{o:?}").to_lowercase()));
    }

    let outcome: angenent_core::Result<ConvergenceReport> = match oracle {
        Some(o) => analyze_sequence(counts, &oracle_sequence(o, counts)),
        None => convergence_study(counts, &dl, &cfg),
    };
    let mut out = Outputs::new(&common.out)?;
    let report = match outcome {
        Ok(r) => r,
        Err(err) => {
            let results = BTreeMap::from([("error".to_string(), json!(err.to_string()))]);
            out.manifest("converge", parameters, &cfg, results)?;
            return Err(if matches!(err, Error::InvalidInput(_)) {
                Failure::Usage(err.into())
            } else {
                Failure::Numerical(err.into())
            });
        }
    };

    write_convergence_csv(out.create("convergence.csv")?, &report)?;
    let fit = FitSummary::from(&report);
    write_json(out.create("fit.json")?, &fit)?;
    if common.svg {
        out.write_string("convergence.svg", &convergence_svg(&report))?;
    }
    let results = BTreeMap::from([
        ("entropies".to_string(), json!(report.entropies)),
        ("iterations".to_string(), json!(report.iterations)),
        ("slope".to_string(), json!(report.fitted_order)),
        (
            "extrapolated_entropy".to_string(),
            json!(report.extrapolated_entropy),
        ),
        ("non_monotone".to_string(), json!(report.non_monotone)),
    ]);
    out.manifest("converge", parameters, &cfg, results)?;
    match (report.extrapolated_entropy, report.fitted_order) {
        (Some(limit), Some(slope)) => {
            println!("converge: extrapolated entropy {limit:.10}, slope {slope:.4}")
        }
        _ => println!("converge: sequence not monotone, no extrapolation"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Torus { points, common } => {
            run_shape("torus", points, BTreeMap::new(), &common, |dl, cfg| {
                solve_angenent(points, dl, cfg)
            })
        }
        Command::Sphere { points, common } => {
            run_shape("sphere", points, BTreeMap::new(), &common, |dl, cfg| {
                solve_sphere(points, dl, cfg)
            })
        }
        Command::Cylinder {
            points,
            z_cut,
            common,
        } => {
            if !(z_cut > 0.0 && z_cut.is_finite()) {
                return Err(usage(format!("--z-cut must be positive, got {z_cut}")));
            }
            let params = BTreeMap::from([("z_cut".to_string(), json!(z_cut))]);
            run_shape("cylinder", points, params, &common, |dl, cfg| {
                solve_cylinder(points, z_cut, dl, cfg)
            })
        }
        Command::Converge {
            points_list,
            oracle,
            common,
        } => run_converge(&points_list, oracle, &common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

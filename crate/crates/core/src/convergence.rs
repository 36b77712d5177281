//! Convergence study of the torus entropy in the number of points, with
//! power-law extrapolation `lambda_N = lambda_inf + C N^(-p)`.

use serde::{Deserialize, Serialize};

use crate::mechanics::DiscreteLagrangian;
use crate::metric::ConformalMetric;
use crate::scenarios::solve_angenent;
use crate::solver::SolveConfig;
use crate::{Error, Result};

/// Exact three-level fit of `value(N) = limit + coefficient * N^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub limit: f64,
    pub coefficient: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub point_counts: Vec<usize>,
    pub entropies: Vec<f64>,
    pub iterations: Vec<usize>,
    /// Least-squares slope of `ln(error estimate)` against `ln N`.
    pub fitted_order: Option<f64>,
    pub extrapolated_entropy: Option<f64>,
    /// Exponent of the three-level power-law fit.
    pub model_exponent: Option<f64>,
    /// `lambda_N - extrapolated_entropy` per level.
    pub per_level_error_estimates: Vec<f64>,
    /// Set when the sequence is not monotone and no extrapolation was made.
    pub non_monotone: bool,
}

/// Fits the model exactly through the last three `(N, value)` pairs.
///
/// Returns `None` when the successive differences do not shrink
/// geometrically (non-monotone or non-contracting data).
pub fn fit_power_law(counts: &[usize], values: &[f64]) -> Option<PowerLawFit> {
    if counts.len() != values.len() || counts.len() < 3 {
        return None;
    }
    let k = counts.len() - 3;
    let n: Vec<f64> = counts[k..].iter().map(|&c| c as f64).collect();
    let v = &values[k..];
    if !(n[0] < n[1] && n[1] < n[2]) {
        return None;
    }
    let d1 = v[0] - v[1];
    let d2 = v[1] - v[2];
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return None;
    }
    let target = (d1 / d2).ln();
    // ratio(p) = (n0^-p - n1^-p) / (n1^-p - n2^-p) increases monotonically in p.
    let log_ratio = |p: f64| {
        let a = n[0].powf(-p) - n[1].powf(-p);
        let b = n[1].powf(-p) - n[2].powf(-p);
        (a / b).ln()
    };
    let (mut lo, mut hi) = (1e-8, 60.0);
    if !(log_ratio(lo) < target && target < log_ratio(hi)) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log_ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let exponent = 0.5 * (lo + hi);
    let coefficient = d2 / (n[1].powf(-exponent) - n[2].powf(-exponent));
    let limit = v[2] - coefficient * n[2].powf(-exponent);
    Some(PowerLawFit {
        limit,
        coefficient,
        exponent,
    })
}

/// Least-squares slope of `ln y` against `ln x`; `None` if any `y <= 0`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Builds the report from an already computed entropy sequence.
pub fn analyze_sequence(point_counts: &[usize], entropies: &[f64]) -> Result<ConvergenceReport> {
    if point_counts.len() < 3 || point_counts.len() != entropies.len() {
        return Err(Error::InvalidInput(
            "convergence analysis needs at least 3 levels with one value each".into(),
        ));
    }
    if point_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "point counts must be strictly increasing".into(),
        ));
    }
    let decreasing = entropies.windows(2).all(|w| w[0] > w[1]);
    let increasing = entropies.windows(2).all(|w| w[0] < w[1]);
    let mut report = ConvergenceReport {
        point_counts: point_counts.to_vec(),
        entropies: entropies.to_vec(),
        iterations: Vec::new(),
        fitted_order: None,
        extrapolated_entropy: None,
        model_exponent: None,
        per_level_error_estimates: Vec::new(),
        non_monotone: !(decreasing || increasing),
    };
    if report.non_monotone {
        return Ok(report);
    }
    let Some(fit) = fit_power_law(point_counts, entropies) else {
        report.non_monotone = true;
        return Ok(report);
    };
    report.extrapolated_entropy = Some(fit.limit);
    report.model_exponent = Some(fit.exponent);
    report.per_level_error_estimates = entropies.iter().map(|v| v - fit.limit).collect();
    let xs: Vec<f64> = point_counts.iter().map(|&n| n as f64).collect();
    let abs_err: Vec<f64> = report
        .per_level_error_estimates
        .iter()
        .map(|e| e.abs())
        .collect();
    report.fitted_order = log_log_slope(&xs, &abs_err);
    Ok(report)
}

/// Solves the torus at every point count and extrapolates the entropy.
pub fn convergence_study<M: ConformalMetric>(
    point_counts: &[usize],
    dl: &DiscreteLagrangian<M>,
    cfg: &SolveConfig,
) -> Result<ConvergenceReport> {
    if point_counts.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "convergence study needs at least 3 point counts, got {}",
            point_counts.len()
        )));
    }
    let mut entropies = Vec::with_capacity(point_counts.len());
    let mut iterations = Vec::with_capacity(point_counts.len());
    for &n in point_counts {
        let result = solve_angenent(n, dl, cfg)?;
        entropies.push(result.entropy);
        iterations.push(result.report.iterations);
    }
    let mut report = analyze_sequence(point_counts, &entropies)?;
    report.iterations = iterations;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_quadratic_model() {
        let counts = [128, 256, 512, 1024, 2048];
        let values: Vec<f64> = counts
            .iter()
            .map(|&n| 1.0 + 100.0 / (n as f64).powi(2))
            .collect();
        let fit = fit_power_law(&counts, &values).unwrap();
        assert!((fit.limit - 1.0).abs() <= 1e-10);
        assert!((fit.exponent - 2.0).abs() <= 1e-10);
        let report = analyze_sequence(&counts, &values).unwrap();
        assert!((report.fitted_order.unwrap() + 2.0).abs() <= 1e-6);
    }

    #[test]
    fn recovers_non_geometric_counts() {
        let counts = [100, 300, 700];
        let values: Vec<f64> = counts
            .iter()
            .map(|&n| 2.5 - 3.0 * (n as f64).powf(-1.5))
            .collect();
        let fit = fit_power_law(&counts, &values).unwrap();
        assert!((fit.limit - 2.5).abs() <= 1e-10);
        assert!((fit.exponent - 1.5).abs() <= 1e-8);
        assert!((fit.coefficient + 3.0).abs() <= 1e-7);
    }

    #[test]
    fn non_monotone_sequence_is_flagged() {
        let report = analyze_sequence(&[16, 32, 64, 128], &[1.0, 0.9, 0.95, 0.94]).unwrap();
        assert!(report.non_monotone);
        assert!(report.extrapolated_entropy.is_none());
        assert!(report.per_level_error_estimates.is_empty());
    }

    #[test]
    fn diverging_sequence_is_flagged() {
        let report = analyze_sequence(&[16, 32, 64], &[1.0, 0.9, 0.7]).unwrap();
        assert!(report.non_monotone);
    }

    #[test]
    fn precondition_errors() {
        assert!(analyze_sequence(&[16, 32], &[1.0, 0.9]).is_err());
        assert!(analyze_sequence(&[32, 16, 64], &[1.0, 0.9, 0.8]).is_err());
    }
}

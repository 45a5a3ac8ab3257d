//! Monte Carlo cross-check of the analytic risk weights.
//!
//! Relative incomes are drawn from the case's distribution and the oracle
//! counts how many fall below `f / N` and how many below `f / N_base`. Both
//! counts come from the same draws, so their ratio has much less variance
//! than two independent estimates would. The analytic cdf is consulted only
//! to fill in the comparison fields of the report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::serviceability::{GridSpec, ServiceabilityCase, ServiceabilityError};

/// Smallest sample size accepted.
pub const MIN_SAMPLES: u64 = 10_000;

/// Reports with `|z|` above this count as exceptions.
pub const EXCEPTION_Z: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("at least {MIN_SAMPLES} samples are required, got {0}")]
    TooFewSamples(u64),
    #[error(
        "oracle underpowered: no sample fell below the base threshold {threshold} in {samples} draws; \
         increase the sample size"
    )]
    Underpowered { threshold: f64, samples: u64 },
    #[error(transparent)]
    Serviceability(#[from] ServiceabilityError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub case: ServiceabilityCase,
    pub samples: u64,
    /// Fraction of draws below `f / N`.
    pub empirical_pd_num: f64,
    /// Fraction of draws below `f / N_base`.
    pub empirical_pd_den: f64,
    pub empirical_weight: f64,
    pub standard_error: f64,
    pub analytic_weight: f64,
    pub z_score: f64,
}

impl OracleReport {
    pub fn is_exception(&self) -> bool {
        self.z_score.is_nan() || self.z_score.abs() > EXCEPTION_Z
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    below_num: u64,
    below_den: u64,
    below_both: u64,
}

fn count_crossings(case: &ServiceabilityCase, samples: u64, seed: u64, stream: u64) -> Counts {
    let num_threshold = case.default_threshold();
    let den_threshold = case.base_threshold();
    let mut counts = Counts::default();
    for x in case
        .distribution()
        .sampler(seed, stream)
        .take(samples as usize)
    {
        let a = (x < num_threshold) as u64;
        let b = (x < den_threshold) as u64;
        counts.below_num += a;
        counts.below_den += b;
        counts.below_both += a & b;
    }
    counts
}

/// Delta-method standard error of `p_num / p_den` where both proportions are
/// estimated on the same draws.
///
/// A proportion observed at exactly 0 or 1 has a plug-in variance of zero,
/// which would make any nonzero discrepancy look infinitely significant. The
/// per-draw variance is therefore floored at what a single event would give.
fn ratio_standard_error(counts: Counts, samples: u64) -> f64 {
    let n = samples as f64;
    let p_num = counts.below_num as f64 / n;
    let p_den = counts.below_den as f64 / n;
    let p_both = counts.below_both as f64 / n;
    let floor = (1.0 / n) * (1.0 - 1.0 / n);
    let var_num = (p_num * (1.0 - p_num)).max(floor);
    let var_den = (p_den * (1.0 - p_den)).max(floor);
    let cov = p_both - p_num * p_den;
    let ratio = p_num / p_den;
    let var = (var_num - 2.0 * ratio * cov + ratio * ratio * var_den) / (n * p_den * p_den);
    var.max(0.0).sqrt()
}

fn z_score(empirical: f64, analytic: f64, standard_error: f64) -> f64 {
    let diff = empirical - analytic;
    if diff == 0.0 {
        0.0
    } else if standard_error == 0.0 {
        diff.signum() * f64::INFINITY
    } else {
        diff / standard_error
    }
}

fn validate_stream(
    case: &ServiceabilityCase,
    samples: u64,
    seed: u64,
    stream: u64,
) -> Result<OracleReport, OracleError> {
    if samples < MIN_SAMPLES {
        return Err(OracleError::TooFewSamples(samples));
    }
    let counts = count_crossings(case, samples, seed, stream);
    if counts.below_den == 0 {
        return Err(OracleError::Underpowered {
            threshold: case.base_threshold(),
            samples,
        });
    }
    let n = samples as f64;
    let empirical_weight = counts.below_num as f64 / counts.below_den as f64;
    let standard_error = ratio_standard_error(counts, samples);
    let analytic_weight = case.risk_weight()?;
    Ok(OracleReport {
        case: case.clone(),
        samples,
        empirical_pd_num: counts.below_num as f64 / n,
        empirical_pd_den: counts.below_den as f64 / n,
        empirical_weight,
        standard_error,
        analytic_weight,
        z_score: z_score(empirical_weight, analytic_weight, standard_error),
    })
}

/// Estimates the risk weight of `case` from `samples` draws seeded by `seed`.
pub fn validate_case(
    case: &ServiceabilityCase,
    samples: u64,
    seed: u64,
) -> Result<OracleReport, OracleError> {
    validate_stream(case, samples, seed, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    /// The analytic weight is exactly zero, so there is nothing to compare.
    UnderflowCell,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::UnderflowCell => f.write_str("underflow cell"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Report(OracleReport),
    Skipped(SkipReason),
    Failed(OracleError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellValidation {
    pub nsr: f64,
    pub sd: f64,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSummary {
    pub cells: usize,
    pub reported: usize,
    pub skipped: usize,
    pub failed: usize,
    /// Reported cells with `|z| > 3`.
    pub exceptions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridValidation {
    pub samples: u64,
    pub seed: u64,
    pub cells: Vec<CellValidation>,
}

impl GridValidation {
    pub fn reports(&self) -> impl Iterator<Item = &OracleReport> {
        self.cells.iter().filter_map(|c| match &c.outcome {
            CellOutcome::Report(r) => Some(r),
            _ => None,
        })
    }

    pub fn summary(&self) -> GridSummary {
        let mut s = GridSummary {
            cells: self.cells.len(),
            ..GridSummary::default()
        };
        for cell in &self.cells {
            match &cell.outcome {
                CellOutcome::Report(r) => {
                    s.reported += 1;
                    s.exceptions += r.is_exception() as usize;
                }
                CellOutcome::Skipped(_) => s.skipped += 1,
                CellOutcome::Failed(_) => s.failed += 1,
            }
        }
        s
    }
}

/// Validates every cell of a grid. Cell `k` in row-major order draws from
/// ChaCha stream `k` under `seed`, so results do not depend on scheduling.
/// Per-cell failures are recorded and the remaining cells still run.
pub fn validate_grid(
    grid: &GridSpec,
    samples: u64,
    seed: u64,
) -> Result<GridValidation, OracleError> {
    if samples < MIN_SAMPLES {
        return Err(OracleError::TooFewSamples(samples));
    }
    if grid.nsr_axis.is_empty() || grid.sd_axis.is_empty() {
        return Ok(GridValidation {
            samples,
            seed,
            cells: Vec::new(),
        });
    }
    grid.validate()?;
    let cells: Vec<(usize, f64, f64)> = grid
        .cells()
        .enumerate()
        .map(|(k, (_, _, nsr, sd))| (k, nsr, sd))
        .collect();
    let cells = cells
        .into_par_iter()
        .map(|(k, nsr, sd)| {
            let outcome = match grid.case(nsr, sd) {
                Err(e) => CellOutcome::Failed(e.into()),
                Ok(case) => match case.risk_weight() {
                    Err(e) => CellOutcome::Failed(e.into()),
                    Ok(0.0) => CellOutcome::Skipped(SkipReason::UnderflowCell),
                    Ok(_) => match validate_stream(&case, samples, seed, k as u64) {
                        Ok(r) => CellOutcome::Report(r),
                        Err(e) => CellOutcome::Failed(e),
                    },
                },
            };
            CellValidation { nsr, sd, outcome }
        })
        .collect();
    Ok(GridValidation {
        samples,
        seed,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionSpec;

    fn case(f: f64, n: f64, s: f64) -> ServiceabilityCase {
        ServiceabilityCase::new(f, n, DistributionSpec::normal(s).unwrap()).unwrap()
    }

    #[test]
    fn rejects_small_samples() {
        assert_eq!(
            validate_case(&case(0.9, 1.1, 0.3), 9_999, 1).unwrap_err(),
            OracleError::TooFewSamples(9_999)
        );
    }

    #[test]
    fn underpowered_base() {
        // base threshold 0.5 sits 7 sd below the mean: nonzero analytically,
        // but essentially never sampled.
        let c = case(0.5, 0.6, 0.5 / 7.0);
        assert!(matches!(
            validate_case(&c, 10_000, 3),
            Err(OracleError::Underpowered { .. })
        ));
    }

    #[test]
    fn threshold_at_mean() {
        let r = validate_case(&case(0.9, 0.9, 0.10), 1_000_000, 11).unwrap();
        assert!((r.empirical_pd_num - 0.5).abs() < 0.0015);
    }

    #[test]
    fn base_cell_has_zero_error() {
        let r = validate_case(&case(0.9, 1.0, 0.25), 10_000, 5).unwrap();
        assert_eq!(r.empirical_weight, 1.0);
        assert_eq!(r.standard_error, 0.0);
        assert_eq!(r.z_score, 0.0);
    }

    #[test]
    fn zero_count_uses_variance_floor() {
        let counts = Counts {
            below_num: 0,
            below_den: 1000,
            below_both: 0,
        };
        let se = ratio_standard_error(counts, 1_000_000);
        assert!(se > 0.0);
        // one-event floor: sqrt(1/n (1 - 1/n) / n) / p_den
        let expected = ((1.0_f64 / 1e6) * (1.0 - 1e-6) / 1e6).sqrt() / 1e-3;
        assert!((se - expected).abs() < 1e-15);
    }

    #[test]
    fn standard_error_matches_brute_force() {
        // Replicate the estimator over independent seeds and compare the
        // spread with the delta-method estimate.
        let c = case(0.9, 1.2, 0.25);
        let reps: Vec<OracleReport> = (0..200)
            .map(|s| validate_case(&c, 20_000, 1000 + s).unwrap())
            .collect();
        let mean = reps.iter().map(|r| r.empirical_weight).sum::<f64>() / reps.len() as f64;
        let var = reps
            .iter()
            .map(|r| (r.empirical_weight - mean).powi(2))
            .sum::<f64>()
            / (reps.len() - 1) as f64;
        let mean_se = reps.iter().map(|r| r.standard_error).sum::<f64>() / reps.len() as f64;
        let ratio = var.sqrt() / mean_se;
        assert!((0.8..1.2).contains(&ratio), "spread/se = {ratio}");
    }

    #[test]
    fn empty_grid() {
        let grid = GridSpec {
            nsr_axis: vec![],
            sd_axis: vec![],
            ..GridSpec::standard()
        };
        assert!(validate_grid(&grid, 10_000, 1).unwrap().cells.is_empty());
    }

    #[test]
    fn skips_underflow_cells() {
        let grid = GridSpec {
            nsr_axis: vec![1.1, 4.0],
            sd_axis: vec![0.05],
            ..GridSpec::standard()
        };
        let v = validate_grid(&grid, 10_000, 1).unwrap();
        assert!(matches!(v.cells[0].outcome, CellOutcome::Report(_)));
        assert_eq!(
            v.cells[1].outcome,
            CellOutcome::Skipped(SkipReason::UnderflowCell)
        );
        assert_eq!(
            v.summary(),
            GridSummary {
                cells: 2,
                reported: 1,
                skipped: 1,
                failed: 0,
                exceptions: v.reports().filter(|r| r.is_exception()).count()
            }
        );
    }

    #[test]
    fn grid_continues_past_failures() {
        let grid = GridSpec {
            stress_factor: 0.5,
            nsr_axis: vec![0.45, 0.5],
            sd_axis: vec![0.01, 0.3],
            ..GridSpec::standard()
        };
        let v = validate_grid(&grid, 10_000, 2).unwrap();
        let s = v.summary();
        assert_eq!((s.cells, s.failed, s.reported), (4, 2, 2));
    }
}

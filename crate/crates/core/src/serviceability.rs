//! Serviceability risk weights.
//!
//! With income distributed around its assessed value `I0` with relative
//! dispersion `s`, and a stressed income `I_N = f * I0` that covers the
//! stressed repayment `R_N` exactly `N` times (`N = I_N / R_N`), the borrower
//! defaults when income falls to `R_N = f * I0 / N`. In mean-relative form
//! that is a lower-tail probability at `f / N`:
//!
//! ```text
//! p_D(N) = P(X <= f / N)        F_N = p_D(N) / p_D(N_base)
//! ```
//!
//! Only `f`, `N` and the distribution enter `F_N`. Interest rates, repayment
//! amounts and the income level all cancel, and the API has no place to pass
//! them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, DistributionSpec, Family};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceabilityError {
    #[error("{name} must be {expected}, got {value}")]
    InvalidParameter {
        name: &'static str,
        expected: &'static str,
        value: f64,
    },
    #[error("stressed income {stressed} exceeds assessed income {assessed}")]
    StressAboveAssessed { stressed: f64, assessed: f64 },
    #[error("unresolvable base: tail probability at the base ratio {base} is zero")]
    UnresolvableBase { base: f64 },
    #[error("{axis} axis must be non-empty, strictly increasing and positive")]
    InvalidAxis { axis: &'static str },
    #[error("grid cell (nsr = {nsr}, sd = {sd}): {source}")]
    GridCell {
        nsr: f64,
        sd: f64,
        #[source]
        source: Box<ServiceabilityError>,
    },
    #[error(transparent)]
    Distribution(#[from] DistError),
}

fn check_positive(name: &'static str, value: f64) -> Result<f64, ServiceabilityError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ServiceabilityError::InvalidParameter {
            name,
            expected: "finite and > 0",
            value,
        })
    }
}

fn check_stress_factor(value: f64) -> Result<f64, ServiceabilityError> {
    if value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(ServiceabilityError::InvalidParameter {
            name: "stress_factor",
            expected: "in (0, 1]",
            value,
        })
    }
}

/// Income, stressed income and stressed repayment at application.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssessedLoan {
    assessed_income: f64,
    stressed_income: f64,
    stressed_repayment: f64,
}

impl AssessedLoan {
    pub fn new(
        assessed_income: f64,
        stressed_income: f64,
        stressed_repayment: f64,
    ) -> Result<Self, ServiceabilityError> {
        check_positive("assessed_income", assessed_income)?;
        check_positive("stressed_income", stressed_income)?;
        check_positive("stressed_repayment", stressed_repayment)?;
        if stressed_income > assessed_income {
            return Err(ServiceabilityError::StressAboveAssessed {
                stressed: stressed_income,
                assessed: assessed_income,
            });
        }
        Ok(Self {
            assessed_income,
            stressed_income,
            stressed_repayment,
        })
    }

    pub fn assessed_income(&self) -> f64 {
        self.assessed_income
    }

    pub fn stressed_income(&self) -> f64 {
        self.stressed_income
    }

    pub fn stressed_repayment(&self) -> f64 {
        self.stressed_repayment
    }

    /// Net servicing ratio `I_N / R_N`.
    pub fn nsr(&self) -> f64 {
        self.stressed_income / self.stressed_repayment
    }

    /// Income stress factor `I_N / I0`.
    pub fn stress_factor(&self) -> f64 {
        self.stressed_income / self.assessed_income
    }

    /// The serviceability case this loan represents under `distribution`.
    pub fn case(
        &self,
        distribution: DistributionSpec,
    ) -> Result<ServiceabilityCase, ServiceabilityError> {
        ServiceabilityCase::new(self.stress_factor(), self.nsr(), distribution)
    }
}

/// Actual income and required repayment at some point in the loan's life.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepaymentSnapshot {
    income: f64,
    repayment: f64,
}

impl RepaymentSnapshot {
    pub fn new(income: f64, repayment: f64) -> Result<Self, ServiceabilityError> {
        check_positive("income", income)?;
        check_positive("repayment", repayment)?;
        Ok(Self { income, repayment })
    }

    /// Repayment coverage ratio `I / R`.
    pub fn rcr(&self) -> f64 {
        self.income / self.repayment
    }

    /// A loan is in default when income no longer covers the repayment.
    pub fn in_default(&self) -> bool {
        self.rcr() < 1.0
    }
}

/// One serviceability query: stress factor `f`, NSR `N` and the income
/// distribution, plus the NSR that weights are expressed relative to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceabilityCase {
    stress_factor: f64,
    nsr: f64,
    distribution: DistributionSpec,
    base_nsr: f64,
    /// Free-text label for the period the income distribution describes.
    /// Carried for reporting only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default_horizon: Option<String>,
}

impl ServiceabilityCase {
    pub const DEFAULT_BASE_NSR: f64 = 1.0;

    pub fn new(
        stress_factor: f64,
        nsr: f64,
        distribution: DistributionSpec,
    ) -> Result<Self, ServiceabilityError> {
        Ok(Self {
            stress_factor: check_stress_factor(stress_factor)?,
            nsr: check_positive("nsr", nsr)?,
            distribution,
            base_nsr: Self::DEFAULT_BASE_NSR,
            default_horizon: None,
        })
    }

    pub fn with_base_nsr(mut self, base_nsr: f64) -> Result<Self, ServiceabilityError> {
        self.base_nsr = check_positive("base_nsr", base_nsr)?;
        Ok(self)
    }

    pub fn with_default_horizon(mut self, label: impl Into<String>) -> Self {
        self.default_horizon = Some(label.into());
        self
    }

    pub fn stress_factor(&self) -> f64 {
        self.stress_factor
    }

    pub fn nsr(&self) -> f64 {
        self.nsr
    }

    pub fn base_nsr(&self) -> f64 {
        self.base_nsr
    }

    pub fn distribution(&self) -> &DistributionSpec {
        &self.distribution
    }

    pub fn default_horizon(&self) -> Option<&str> {
        self.default_horizon.as_deref()
    }

    /// Relative income at which repayment coverage hits 1 for this NSR.
    pub fn default_threshold(&self) -> f64 {
        self.stress_factor / self.nsr
    }

    /// Relative income at which repayment coverage hits 1 at the base NSR.
    pub fn base_threshold(&self) -> f64 {
        self.stress_factor / self.base_nsr
    }

    /// Threshold-crossing probability `p_D` at this case's NSR.
    ///
    /// Only meaningful relative to another `p_D`; it ignores every loan
    /// characteristic other than serviceability.
    pub fn default_probability(&self) -> f64 {
        lower_tail(&self.distribution, self.default_threshold())
    }

    /// The risk weight `p_D(N) / p_D(base_nsr)`.
    pub fn risk_weight(&self) -> Result<f64, ServiceabilityError> {
        threshold_risk_weight(
            &self.distribution,
            self.default_threshold(),
            self.base_threshold(),
            Direction::BelowTriggers,
        )
    }
}

// A threshold so large that `f / N` overflowed is past every cutoff.
fn lower_tail(distribution: &DistributionSpec, x: f64) -> f64 {
    match x {
        x if x == f64::INFINITY => 1.0,
        x if x == f64::NEG_INFINITY => 0.0,
        x => distribution.cdf(x).expect("finite argument to cdf"),
    }
}

fn upper_tail(distribution: &DistributionSpec, x: f64) -> f64 {
    match x {
        x if x == f64::INFINITY => 0.0,
        x if x == f64::NEG_INFINITY => 1.0,
        x => distribution.sf(x).expect("finite argument to sf"),
    }
}

/// Which side of the trigger counts as a default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Default once the quantity falls to the trigger (income).
    BelowTriggers,
    /// Default once the quantity rises to the trigger (loan-to-value).
    AboveTriggers,
}

/// Risk weight for any migrating quantity that triggers default when it
/// crosses a level: the tail probability beyond `trigger_ratio` divided by the
/// tail probability beyond `base_trigger_ratio`, both in mean-relative units.
///
/// The serviceability weight is the `BelowTriggers` case with triggers `f / N`
/// and `f / N_base`.
pub fn threshold_risk_weight(
    distribution: &DistributionSpec,
    trigger_ratio: f64,
    base_trigger_ratio: f64,
    direction: Direction,
) -> Result<f64, ServiceabilityError> {
    for (name, value) in [
        ("trigger_ratio", trigger_ratio),
        ("base_trigger_ratio", base_trigger_ratio),
    ] {
        if value.is_nan() {
            return Err(ServiceabilityError::InvalidParameter {
                name,
                expected: "a number",
                value,
            });
        }
    }
    let tail = |x| match direction {
        Direction::BelowTriggers => lower_tail(distribution, x),
        Direction::AboveTriggers => upper_tail(distribution, x),
    };
    let base = tail(base_trigger_ratio);
    if base == 0.0 {
        return Err(ServiceabilityError::UnresolvableBase {
            base: base_trigger_ratio,
        });
    }
    if trigger_ratio == base_trigger_ratio {
        return Ok(1.0);
    }
    Ok(tail(trigger_ratio) / base)
}

/// Parameters of a risk-weight table over NSR and income dispersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub stress_factor: f64,
    pub base_nsr: f64,
    pub nsr_axis: Vec<f64>,
    pub sd_axis: Vec<f64>,
    pub family: Family,
    #[serde(default)]
    pub skew: f64,
}

impl GridSpec {
    /// NSR 0.2 to 2.0 in steps of 0.1.
    pub const TABLE_NSR_AXIS: [f64; 19] = [
        0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9,
        2.0,
    ];
    /// Income standard deviation 10% to 40% in steps of 5%.
    pub const TABLE_SD_AXIS: [f64; 7] = [0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40];
    pub const DEFAULT_STRESS_FACTOR: f64 = 0.9;

    /// The standard table: 90% income stress, normal income, base NSR 1.0.
    pub fn standard() -> Self {
        Self {
            stress_factor: Self::DEFAULT_STRESS_FACTOR,
            base_nsr: ServiceabilityCase::DEFAULT_BASE_NSR,
            nsr_axis: Self::TABLE_NSR_AXIS.to_vec(),
            sd_axis: Self::TABLE_SD_AXIS.to_vec(),
            family: Family::Normal,
            skew: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ServiceabilityError> {
        check_stress_factor(self.stress_factor)?;
        check_positive("base_nsr", self.base_nsr)?;
        check_axis("nsr", &self.nsr_axis)?;
        check_axis("sd", &self.sd_axis)?;
        DistributionSpec::new(self.family, 1.0, self.skew)?;
        Ok(())
    }

    /// The case at one grid cell.
    pub fn case(&self, nsr: f64, sd: f64) -> Result<ServiceabilityCase, ServiceabilityError> {
        let distribution = DistributionSpec::new(self.family, sd, self.skew)?;
        ServiceabilityCase::new(self.stress_factor, nsr, distribution)?.with_base_nsr(self.base_nsr)
    }

    /// Iterates `(row, column, nsr, sd)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.nsr_axis.iter().enumerate().flat_map(move |(i, &nsr)| {
            self.sd_axis
                .iter()
                .enumerate()
                .map(move |(j, &sd)| (i, j, nsr, sd))
        })
    }
}

fn check_axis(axis: &'static str, values: &[f64]) -> Result<(), ServiceabilityError> {
    let positive = values.iter().all(|v| v.is_finite() && *v > 0.0);
    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    if values.is_empty() || !positive || !increasing {
        return Err(ServiceabilityError::InvalidAxis { axis });
    }
    Ok(())
}

/// Risk weights tabulated over an NSR x dispersion grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskWeightGrid {
    pub stress_factor: f64,
    pub base_nsr: f64,
    pub nsr_axis: Vec<f64>,
    pub sd_axis: Vec<f64>,
    /// `values[i][j]` is the weight at `nsr_axis[i]`, `sd_axis[j]`.
    pub values: Vec<Vec<f64>>,
}

impl RiskWeightGrid {
    pub fn get(&self, nsr: f64, sd: f64) -> Option<f64> {
        let i = self.nsr_axis.iter().position(|&v| v == nsr)?;
        let j = self.sd_axis.iter().position(|&v| v == sd)?;
        Some(self.values[i][j])
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }
}

pub fn risk_weight_grid(spec: &GridSpec) -> Result<RiskWeightGrid, ServiceabilityError> {
    spec.validate()?;
    let mut values = vec![vec![0.0; spec.sd_axis.len()]; spec.nsr_axis.len()];
    for (i, j, nsr, sd) in spec.cells() {
        let annotate = |source| ServiceabilityError::GridCell {
            nsr,
            sd,
            source: Box::new(source),
        };
        values[i][j] = spec
            .case(nsr, sd)
            .and_then(|case| case.risk_weight())
            .map_err(annotate)?;
    }
    Ok(RiskWeightGrid {
        stress_factor: spec.stress_factor,
        base_nsr: spec.base_nsr,
        nsr_axis: spec.nsr_axis.clone(),
        sd_axis: spec.sd_axis.clone(),
        values,
    })
}

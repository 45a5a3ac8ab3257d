//! Serviceability risk weights for differential mortgage credit models.
//!
//! A borrower's income is treated as a distribution around its assessed
//! value rather than as a known number. The probability that it falls below
//! the stressed repayment gives a threshold-crossing probability for each
//! net servicing ratio (NSR), and the ratio of two such probabilities is a
//! multiplicative risk weight. Risk weights are composed with a user-chosen
//! base PD and LGD into expected loss, and every analytic weight can be
//! cross-checked by Monte Carlo.
//!
//! Modules:
//!
//! * [`dist`] - mean-relative income distributions (normal, skew-normal).
//! * [`serviceability`] - NSR, repayment coverage, default probability and
//!   risk weights, plus the generic threshold form.
//! * [`risk_model`] - base PD/LGD with ordered ledgers of named weights.
//! * [`oracle`] - Monte Carlo validation of the analytic weights.
//! * [`config`] and [`cli`] - run configuration and the command surface
//!   behind the `servrisk` binary.
//!
//! ```
//! use servrisk::dist::DistributionSpec;
//! use servrisk::serviceability::ServiceabilityCase;
//!
//! let income = DistributionSpec::normal(0.30).unwrap();
//! let case = ServiceabilityCase::new(0.9, 1.1, income).unwrap();
//! let weight = case.risk_weight().unwrap();
//! assert!((weight - 0.74).abs() < 0.005);
//! ```

pub mod cli;
pub mod config;
pub mod dist;
pub mod oracle;
pub mod render;
pub mod risk_model;
pub mod serviceability;

pub use dist::{DistributionSpec, Family};
pub use oracle::{validate_case, validate_grid, OracleReport};
pub use risk_model::LoanProfile;
pub use serviceability::{GridSpec, RiskWeightGrid, ServiceabilityCase};

// The guide's code blocks are compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/income-distribution.md")]
    pub struct IncomeDistribution;
    #[doc = include_str!("../../../book/src/risk-weights.md")]
    pub struct RiskWeights;
    #[doc = include_str!("../../../book/src/threshold-weights.md")]
    pub struct ThresholdWeights;
    #[doc = include_str!("../../../book/src/expected-loss.md")]
    pub struct ExpectedLoss;
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    pub struct MonteCarlo;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}

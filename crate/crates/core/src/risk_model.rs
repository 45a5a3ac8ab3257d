//! Differential PD/LGD model.
//!
//! The user supplies the base PD and LGD. Each loan characteristic then
//! contributes one named multiplicative weight, and the adjusted figures are
//! the base times the product of weights. Adjusted PD is clamped once, after
//! the whole product, to `[pd_floor, pd_cap]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::serviceability::{ServiceabilityCase, ServiceabilityError};

/// Ledger name used for the serviceability weight.
pub const NSR_WEIGHT: &str = "NSR";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{name} must be {expected}, got {value}")]
    InvalidParameter {
        name: &'static str,
        expected: &'static str,
        value: f64,
    },
    #[error("weight `{name}` must be finite and >= 0, got {factor}")]
    InvalidFactor { name: String, factor: f64 },
    #[error("weight `{0}` is already in the ledger")]
    DuplicateWeight(String),
    #[error("pd_floor {floor} must not exceed pd_cap {cap}")]
    InvertedBounds { floor: f64, cap: f64 },
    #[error(transparent)]
    Serviceability(#[from] ServiceabilityError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskWeight {
    pub name: String,
    pub factor: f64,
}

/// Named weights in the order they were applied. Names are unique.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RiskWeight>", into = "Vec<RiskWeight>")]
pub struct WeightLedger(Vec<RiskWeight>);

impl WeightLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, factor: f64) -> Result<(), ModelError> {
        let name = name.into();
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(ModelError::InvalidFactor { name, factor });
        }
        if self.contains(&name) {
            return Err(ModelError::DuplicateWeight(name));
        }
        self.0.push(RiskWeight { name, factor });
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.iter().any(|w| w.name == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|w| w.name == name).map(|w| w.factor)
    }

    pub fn iter(&self) -> impl Iterator<Item = &RiskWeight> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Product of all factors; 1 for an empty ledger.
    pub fn product(&self) -> f64 {
        self.0.iter().map(|w| w.factor).product()
    }
}

impl TryFrom<Vec<RiskWeight>> for WeightLedger {
    type Error = ModelError;

    fn try_from(weights: Vec<RiskWeight>) -> Result<Self, Self::Error> {
        let mut ledger = WeightLedger::new();
        for w in weights {
            ledger.push(w.name, w.factor)?;
        }
        Ok(ledger)
    }
}

impl From<WeightLedger> for Vec<RiskWeight> {
    fn from(ledger: WeightLedger) -> Self {
        ledger.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct LoanProfile {
    base_pd: f64,
    base_lgd: f64,
    pd_weights: WeightLedger,
    lgd_weights: WeightLedger,
    pd_floor: f64,
    pd_cap: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    base_pd: f64,
    base_lgd: f64,
    #[serde(default)]
    pd_weights: WeightLedger,
    #[serde(default)]
    lgd_weights: WeightLedger,
    #[serde(default)]
    pd_floor: f64,
    #[serde(default = "one")]
    pd_cap: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawProfile> for LoanProfile {
    type Error = ModelError;

    fn try_from(raw: RawProfile) -> Result<Self, Self::Error> {
        let mut profile = LoanProfile::new(raw.base_pd, raw.base_lgd)?
            .with_pd_bounds(raw.pd_floor, raw.pd_cap)?;
        profile.pd_weights = raw.pd_weights;
        profile.lgd_weights = raw.lgd_weights;
        Ok(profile)
    }
}

impl From<LoanProfile> for RawProfile {
    fn from(p: LoanProfile) -> Self {
        RawProfile {
            base_pd: p.base_pd,
            base_lgd: p.base_lgd,
            pd_weights: p.pd_weights,
            lgd_weights: p.lgd_weights,
            pd_floor: p.pd_floor,
            pd_cap: p.pd_cap,
        }
    }
}

fn check_unit_interval(
    name: &'static str,
    value: f64,
    open_below: bool,
) -> Result<f64, ModelError> {
    let lower_ok = if open_below {
        value > 0.0
    } else {
        value >= 0.0
    };
    if lower_ok && value <= 1.0 {
        Ok(value)
    } else {
        Err(ModelError::InvalidParameter {
            name,
            expected: if open_below { "in (0, 1]" } else { "in [0, 1]" },
            value,
        })
    }
}

impl LoanProfile {
    pub fn new(base_pd: f64, base_lgd: f64) -> Result<Self, ModelError> {
        Ok(Self {
            base_pd: check_unit_interval("base_pd", base_pd, true)?,
            base_lgd: check_unit_interval("base_lgd", base_lgd, true)?,
            pd_weights: WeightLedger::new(),
            lgd_weights: WeightLedger::new(),
            pd_floor: 0.0,
            pd_cap: 1.0,
        })
    }

    pub fn with_pd_bounds(mut self, floor: f64, cap: f64) -> Result<Self, ModelError> {
        check_unit_interval("pd_floor", floor, false)?;
        check_unit_interval("pd_cap", cap, false)?;
        if floor > cap {
            return Err(ModelError::InvertedBounds { floor, cap });
        }
        self.pd_floor = floor;
        self.pd_cap = cap;
        Ok(self)
    }

    pub fn with_pd_weight(
        mut self,
        name: impl Into<String>,
        factor: f64,
    ) -> Result<Self, ModelError> {
        self.pd_weights.push(name, factor)?;
        Ok(self)
    }

    pub fn with_lgd_weight(
        mut self,
        name: impl Into<String>,
        factor: f64,
    ) -> Result<Self, ModelError> {
        self.lgd_weights.push(name, factor)?;
        Ok(self)
    }

    pub fn base_pd(&self) -> f64 {
        self.base_pd
    }

    pub fn base_lgd(&self) -> f64 {
        self.base_lgd
    }

    pub fn pd_weights(&self) -> &WeightLedger {
        &self.pd_weights
    }

    pub fn lgd_weights(&self) -> &WeightLedger {
        &self.lgd_weights
    }

    pub fn pd_floor(&self) -> f64 {
        self.pd_floor
    }

    pub fn pd_cap(&self) -> f64 {
        self.pd_cap
    }

    pub fn adjusted_pd(&self) -> f64 {
        (self.base_pd * self.pd_weights.product()).clamp(self.pd_floor, self.pd_cap)
    }

    pub fn adjusted_lgd(&self) -> f64 {
        (self.base_lgd * self.lgd_weights.product()).clamp(0.0, 1.0)
    }

    pub fn expected_loss(&self) -> f64 {
        self.adjusted_pd() * self.adjusted_lgd()
    }

    /// A copy of this profile with the serviceability weight for `case`
    /// appended to the PD ledger under [`NSR_WEIGHT`].
    pub fn attach_serviceability(&self, case: &ServiceabilityCase) -> Result<Self, ModelError> {
        if self.pd_weights.contains(NSR_WEIGHT) {
            return Err(ModelError::DuplicateWeight(NSR_WEIGHT.to_string()));
        }
        let weight = case.risk_weight()?;
        self.clone().with_pd_weight(NSR_WEIGHT, weight)
    }
}

//! Run configuration.
//!
//! Values are resolved in three layers: built-in defaults, then a TOML file,
//! then command-line flags. Unknown keys are rejected. Shared settings sit at
//! the top level of the file; `[score]` and `[validate]` hold the settings
//! specific to those commands:
//!
//! ```toml
//! stress_factor = 0.9
//! base_nsr = 1.0
//! nsr_axis = [0.8, 1.0, 1.2]
//! sd_axis = [0.2, 0.3]
//! family = "normal"        # or "skew-normal", with `skew = -3.0`
//! format = "csv"           # csv | json | markdown
//!
//! [score]
//! base_pd = 0.01
//! base_lgd = 0.2
//! nsr = 1.1                # optional: attach the serviceability weight
//! sd = 0.3
//!
//! [[score.pd_weights]]
//! name = "LVR"
//! factor = 1.2
//!
//! [validate]
//! samples = 1000000
//! seed = 1
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistributionSpec, Family};
use crate::oracle::MIN_SAMPLES;
use crate::risk_model::{LoanProfile, RiskWeight};
use crate::serviceability::{GridSpec, ServiceabilityCase};

pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config file: {0}")]
    Parse(String),
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("`{0}` is required")]
    Missing(&'static str),
}

fn invalid(key: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Grid,
    Score,
    Validate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Markdown,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    stress_factor: Option<f64>,
    base_nsr: Option<f64>,
    nsr_axis: Option<Vec<f64>>,
    sd_axis: Option<Vec<f64>>,
    family: Option<Family>,
    skew: Option<f64>,
    format: Option<OutputFormat>,
    output: Option<PathBuf>,
    #[serde(default)]
    score: ScoreSection,
    #[serde(default)]
    validate: ValidateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreSection {
    base_pd: Option<f64>,
    base_lgd: Option<f64>,
    pd_floor: Option<f64>,
    pd_cap: Option<f64>,
    nsr: Option<f64>,
    sd: Option<f64>,
    default_horizon: Option<String>,
    #[serde(default)]
    pd_weights: Vec<RiskWeight>,
    #[serde(default)]
    lgd_weights: Vec<RiskWeight>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateSection {
    samples: Option<u64>,
    seed: Option<u64>,
}

/// Values given on the command line. `None` leaves the file or default
/// value in place; weights are appended after those from the file.
#[derive(Debug, Clone, PartialEq)]
pub struct Overrides {
    pub command: Command,
    pub stress_factor: Option<f64>,
    pub base_nsr: Option<f64>,
    pub nsr: Option<Vec<f64>>,
    pub sd: Option<Vec<f64>>,
    pub family: Option<Family>,
    pub skew: Option<f64>,
    pub format: Option<OutputFormat>,
    pub output: Option<PathBuf>,
    pub base_pd: Option<f64>,
    pub base_lgd: Option<f64>,
    pub pd_floor: Option<f64>,
    pub pd_cap: Option<f64>,
    pub pd_weights: Vec<RiskWeight>,
    pub lgd_weights: Vec<RiskWeight>,
    pub default_horizon: Option<String>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            stress_factor: None,
            base_nsr: None,
            nsr: None,
            sd: None,
            family: None,
            skew: None,
            format: None,
            output: None,
            base_pd: None,
            base_lgd: None,
            pd_floor: None,
            pd_cap: None,
            pd_weights: Vec::new(),
            lgd_weights: Vec::new(),
            default_horizon: None,
            samples: None,
            seed: None,
        }
    }
}

/// What `score` should evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRequest {
    pub profile: LoanProfile,
    pub serviceability: Option<ServiceabilityCase>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub grid: GridSpec,
    pub score: Option<ScoreRequest>,
    pub samples: u64,
    pub seed: u64,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults for `command`: 90% stress, normal income, the standard
    /// table axes.
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            grid: GridSpec::standard(),
            score: None,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            format: OutputFormat::default(),
            output: None,
        }
    }
}

fn single(key: &str, values: Option<Vec<f64>>) -> Result<Option<f64>, ConfigError> {
    match values.as_deref() {
        None => Ok(None),
        Some([v]) => Ok(Some(*v)),
        Some(_) => Err(invalid(key, "score takes a single value")),
    }
}

/// Resolves a configuration from optional TOML `contents` and flag
/// `overrides`.
pub fn parse_config(
    contents: Option<&str>,
    overrides: Overrides,
) -> Result<RunConfig, ConfigError> {
    let file: FileConfig = match contents {
        Some(text) => toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?,
        None => FileConfig::default(),
    };
    let command = overrides.command;
    let mut config = RunConfig::defaults(command);

    let grid = &mut config.grid;
    if let Some(v) = overrides.stress_factor.or(file.stress_factor) {
        grid.stress_factor = v;
    }
    if let Some(v) = overrides.base_nsr.or(file.base_nsr) {
        grid.base_nsr = v;
    }
    if let Some(v) = overrides.family.or(file.family) {
        grid.family = v;
    }
    if let Some(v) = overrides.skew.or(file.skew) {
        grid.skew = v;
    }
    if !(grid.stress_factor > 0.0 && grid.stress_factor <= 1.0) {
        return Err(invalid(
            "stress_factor",
            format!("must be in (0, 1], got {}", grid.stress_factor),
        ));
    }
    if !(grid.base_nsr.is_finite() && grid.base_nsr > 0.0) {
        return Err(invalid(
            "base_nsr",
            format!("must be finite and > 0, got {}", grid.base_nsr),
        ));
    }
    DistributionSpec::new(grid.family, 1.0, grid.skew).map_err(|e| invalid("skew", e))?;

    config.format = overrides.format.or(file.format).unwrap_or_default();
    config.output = overrides.output.clone().or(file.output);
    config.samples = overrides
        .samples
        .or(file.validate.samples)
        .unwrap_or(DEFAULT_SAMPLES);
    config.seed = overrides
        .seed
        .or(file.validate.seed)
        .unwrap_or(DEFAULT_SEED);

    match command {
        Command::Grid | Command::Validate => {
            if let Some(v) = overrides.nsr.or(file.nsr_axis) {
                config.grid.nsr_axis = v;
            }
            if let Some(v) = overrides.sd.or(file.sd_axis) {
                config.grid.sd_axis = v;
            }
            check_axis("nsr_axis", &config.grid.nsr_axis)?;
            check_axis("sd_axis", &config.grid.sd_axis)?;
            if command == Command::Validate && config.samples < MIN_SAMPLES {
                return Err(invalid(
                    "samples",
                    format!("must be at least {MIN_SAMPLES}, got {}", config.samples),
                ));
            }
        }
        Command::Score => {
            let section = file.score;
            let base_pd = overrides
                .base_pd
                .or(section.base_pd)
                .ok_or(ConfigError::Missing("base_pd"))?;
            let base_lgd = overrides
                .base_lgd
                .or(section.base_lgd)
                .ok_or(ConfigError::Missing("base_lgd"))?;
            let mut profile =
                LoanProfile::new(base_pd, base_lgd).map_err(|e| invalid("base_pd/base_lgd", e))?;
            let floor = overrides.pd_floor.or(section.pd_floor).unwrap_or(0.0);
            let cap = overrides.pd_cap.or(section.pd_cap).unwrap_or(1.0);
            profile = profile
                .with_pd_bounds(floor, cap)
                .map_err(|e| invalid("pd_floor/pd_cap", e))?;
            for w in section.pd_weights.into_iter().chain(overrides.pd_weights) {
                profile = profile
                    .with_pd_weight(w.name, w.factor)
                    .map_err(|e| invalid("pd_weights", e))?;
            }
            for w in section.lgd_weights.into_iter().chain(overrides.lgd_weights) {
                profile = profile
                    .with_lgd_weight(w.name, w.factor)
                    .map_err(|e| invalid("lgd_weights", e))?;
            }

            let nsr = single("nsr", overrides.nsr)?.or(section.nsr);
            let sd = single("sd", overrides.sd)?.or(section.sd);
            let serviceability = match (nsr, sd) {
                (None, None) => None,
                (Some(_), None) => return Err(ConfigError::Missing("sd")),
                (None, Some(_)) => return Err(ConfigError::Missing("nsr")),
                (Some(nsr), Some(sd)) => {
                    let g = &config.grid;
                    let dist = DistributionSpec::new(g.family, sd, g.skew)
                        .map_err(|e| invalid("sd", e))?;
                    let mut case = ServiceabilityCase::new(g.stress_factor, nsr, dist)
                        .and_then(|c| c.with_base_nsr(g.base_nsr))
                        .map_err(|e| invalid("nsr", e))?;
                    if let Some(label) = overrides.default_horizon.or(section.default_horizon) {
                        case = case.with_default_horizon(label);
                    }
                    Some(case)
                }
            };
            config.score = Some(ScoreRequest {
                profile,
                serviceability,
            });
        }
    }
    Ok(config)
}

fn check_axis(key: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(invalid(key, "must not be empty"));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(invalid(
            key,
            format!("values must be finite and > 0, got {v}"),
        ));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(key, "values must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_gives_defaults() {
        let c = parse_config(None, Overrides::new(Command::Grid)).unwrap();
        assert_eq!(c, RunConfig::defaults(Command::Grid));
        assert_eq!(c.grid.stress_factor, 0.9);
        assert_eq!(c.grid.nsr_axis.len(), 19);
        assert_eq!(c.grid.sd_axis.len(), 7);
        let c = parse_config(Some(""), Overrides::new(Command::Grid)).unwrap();
        assert_eq!(c, RunConfig::defaults(Command::Grid));
    }

    #[test]
    fn flags_override_file() {
        let mut o = Overrides::new(Command::Grid);
        let c = parse_config(Some("stress_factor = 0.8"), o.clone()).unwrap();
        assert_eq!(c.grid.stress_factor, 0.8);
        o.stress_factor = Some(0.95);
        let c = parse_config(Some("stress_factor = 0.8"), o).unwrap();
        assert_eq!(c.grid.stress_factor, 0.95);
    }

    #[test]
    fn unknown_key_is_named() {
        let err =
            parse_config(Some("stres_factor = 0.8"), Overrides::new(Command::Grid)).unwrap_err();
        assert!(err.to_string().contains("stres_factor"), "{err}");
        let err = parse_config(
            Some("[score]\nbase_pdd = 0.1"),
            Overrides::new(Command::Score),
        )
        .unwrap_err();
        assert!(err.to_string().contains("base_pdd"), "{err}");
    }

    #[test]
    fn duplicate_and_mistyped_keys() {
        let err = parse_config(
            Some("base_nsr = 1.0\nbase_nsr = 1.1"),
            Overrides::new(Command::Grid),
        )
        .unwrap_err();
        assert!(err.to_string().contains("base_nsr"), "{err}");
        let err = parse_config(
            Some("stress_factor = \"high\""),
            Overrides::new(Command::Grid),
        )
        .unwrap_err();
        assert!(err.to_string().contains("stress_factor"), "{err}");
    }

    #[test]
    fn invalid_values_name_their_key() {
        let err =
            parse_config(Some("stress_factor = 1.5"), Overrides::new(Command::Grid)).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "stress_factor"));
        let err =
            parse_config(Some("nsr_axis = [1.0, 0.9]"), Overrides::new(Command::Grid)).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "nsr_axis"));
        let err = parse_config(
            Some("[validate]\nsamples = 10"),
            Overrides::new(Command::Validate),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "samples"));
        let err = parse_config(Some("skew = 2.0"), Overrides::new(Command::Grid)).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "skew"));
    }

    #[test]
    fn score_section() {
        let text = r#"
            [score]
            base_pd = 0.01
            base_lgd = 0.2
            nsr = 1.1
            sd = 0.3
            default_horizon = "first 3 years"
            [[score.pd_weights]]
            name = "LVR"
            factor = 1.5
        "#;
        let c = parse_config(Some(text), Overrides::new(Command::Score)).unwrap();
        let req = c.score.unwrap();
        assert_eq!(req.profile.pd_weights().get("LVR"), Some(1.5));
        let case = req.serviceability.unwrap();
        assert_eq!((case.nsr(), case.distribution().relative_sd()), (1.1, 0.3));
        assert_eq!(case.default_horizon(), Some("first 3 years"));
    }

    #[test]
    fn score_requires_bases_and_pairs() {
        let err = parse_config(None, Overrides::new(Command::Score)).unwrap_err();
        assert_eq!(err, ConfigError::Missing("base_pd"));
        let mut o = Overrides::new(Command::Score);
        o.base_pd = Some(0.01);
        o.base_lgd = Some(0.2);
        o.nsr = Some(vec![1.1]);
        assert_eq!(
            parse_config(None, o.clone()).unwrap_err(),
            ConfigError::Missing("sd")
        );
        o.sd = Some(vec![0.2, 0.3]);
        assert!(
            matches!(parse_config(None, o).unwrap_err(), ConfigError::Invalid { ref key, .. } if key == "sd")
        );
    }
}

//! The `servrisk` command line.
//!
//! ```text
//! servrisk grid     [--stress-factor F] [--nsr LIST] [--sd LIST] ...
//! servrisk score    --base-pd P --base-lgd L [--nsr N --sd S] [--pd-weight NAME=X]...
//! servrisk validate [--samples N] [--seed S] ...
//! ```
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3
//! computation error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{parse_config, Command, ConfigError, OutputFormat, Overrides, RunConfig};
use crate::dist::Family;
use crate::oracle::validate_grid;
use crate::render;
use crate::risk_model::RiskWeight;
use crate::serviceability::risk_weight_grid;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("computation error: {0}")]
    Compute(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

/// Serviceability risk weights: tables, loan scoring and Monte Carlo checks.
#[derive(Debug, Parser)]
#[command(name = "servrisk", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Tabulate risk weights over NSR and income dispersion.
    Grid(CommonArgs),
    /// Apply risk weights to a base PD/LGD and report expected loss.
    Score(ScoreArgs),
    /// Compare analytic risk weights against Monte Carlo estimates.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Income stress factor f.
    #[arg(long)]
    pub stress_factor: Option<f64>,
    /// NSR the weights are relative to.
    #[arg(long)]
    pub base_nsr: Option<f64>,
    /// NSR value(s) N, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub nsr: Option<Vec<f64>>,
    /// Relative income standard deviation(s) s, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sd: Option<Vec<f64>>,
    /// Income distribution family: normal or skew-normal.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    /// Skew-normal shape parameter.
    #[arg(long, allow_negative_numbers = true)]
    pub skew: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write the document here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub base_pd: Option<f64>,
    #[arg(long)]
    pub base_lgd: Option<f64>,
    #[arg(long)]
    pub pd_floor: Option<f64>,
    #[arg(long)]
    pub pd_cap: Option<f64>,
    /// Extra PD weight as NAME=FACTOR; repeatable.
    #[arg(long = "pd-weight", value_parser = parse_weight)]
    pub pd_weights: Vec<RiskWeight>,
    /// Extra LGD weight as NAME=FACTOR; repeatable.
    #[arg(long = "lgd-weight", value_parser = parse_weight)]
    pub lgd_weights: Vec<RiskWeight>,
    /// Label for the period the income distribution covers.
    #[arg(long)]
    pub default_horizon: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    match s {
        "normal" => Ok(Family::Normal),
        "skew-normal" => Ok(Family::SkewNormal),
        other => Err(format!(
            "unknown family `{other}` (expected normal or skew-normal)"
        )),
    }
}

fn parse_weight(s: &str) -> Result<RiskWeight, String> {
    let (name, factor) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=FACTOR, got `{s}`"))?;
    let factor = factor
        .trim()
        .parse::<f64>()
        .map_err(|e| format!("bad factor in `{s}`: {e}"))?;
    Ok(RiskWeight {
        name: name.trim().to_string(),
        factor,
    })
}

impl Cli {
    /// Splits the parsed command line into the config file path and the
    /// flag overrides.
    pub fn into_overrides(self) -> (Option<PathBuf>, Overrides) {
        let (command, common) = match &self.command {
            CliCommand::Grid(c) => (Command::Grid, c),
            CliCommand::Score(a) => (Command::Score, &a.common),
            CliCommand::Validate(a) => (Command::Validate, &a.common),
        };
        let mut o = Overrides::new(command);
        o.stress_factor = common.stress_factor;
        o.base_nsr = common.base_nsr;
        o.nsr = common.nsr.clone();
        o.sd = common.sd.clone();
        o.family = common.family;
        o.skew = common.skew;
        o.format = common.format;
        o.output = common.output.clone();
        let path = common.config.clone();
        match self.command {
            CliCommand::Grid(_) => {}
            CliCommand::Score(a) => {
                o.base_pd = a.base_pd;
                o.base_lgd = a.base_lgd;
                o.pd_floor = a.pd_floor;
                o.pd_cap = a.pd_cap;
                o.pd_weights = a.pd_weights;
                o.lgd_weights = a.lgd_weights;
                o.default_horizon = a.default_horizon;
            }
            CliCommand::Validate(a) => {
                o.samples = a.samples;
                o.seed = a.seed;
            }
        }
        (path, o)
    }
}

/// Output of one run: the document plus diagnostic lines for stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub document: String,
    pub diagnostics: Vec<String>,
}

pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    let mut diagnostics = Vec::new();
    let document = match config.command {
        Command::Grid => {
            let grid =
                risk_weight_grid(&config.grid).map_err(|e| CliError::Compute(e.to_string()))?;
            match config.format {
                OutputFormat::Csv => render::grid_csv(&grid),
                OutputFormat::Json => render::grid_json(&grid),
                OutputFormat::Markdown => render::grid_markdown(&grid),
            }
        }
        Command::Score => {
            let request = config
                .score
                .as_ref()
                .ok_or(CliError::Config(ConfigError::Missing("base_pd")))?;
            let profile = match &request.serviceability {
                None => request.profile.clone(),
                Some(case) => request.profile.attach_serviceability(case).map_err(|e| {
                    CliError::Compute(format!(
                        "{e} (case: stress_factor = {}, nsr = {}, sd = {}, base_nsr = {})",
                        case.stress_factor(),
                        case.nsr(),
                        case.distribution().relative_sd(),
                        case.base_nsr()
                    ))
                })?,
            };
            match config.format {
                OutputFormat::Csv => render::score_csv(&profile),
                OutputFormat::Json => render::score_json(&profile),
                OutputFormat::Markdown => render::score_markdown(&profile),
            }
        }
        Command::Validate => {
            let validation = validate_grid(&config.grid, config.samples, config.seed)
                .map_err(|e| CliError::Compute(e.to_string()))?;
            diagnostics.push(render::validation_summary_line(&validation));
            match config.format {
                OutputFormat::Csv => render::validation_csv(&validation),
                OutputFormat::Json => render::validation_json(&validation, &config.grid),
                OutputFormat::Markdown => render::validation_markdown(&validation),
            }
        }
    };
    Ok(RunOutput {
        document,
        diagnostics,
    })
}

fn load_and_run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (path, overrides) = cli.into_overrides();
    let contents = match &path {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| {
            CliError::Config(ConfigError::Parse(format!(
                "cannot read {}: {e}",
                p.display()
            )))
        })?),
        None => None,
    };
    let config = parse_config(contents.as_deref(), overrides)?;
    let out = run(&config)?;
    match &config.output {
        Some(p) => std::fs::write(p, &out.document)?,
        None => stdout.write_all(out.document.as_bytes())?,
    }
    for line in &out.diagnostics {
        writeln!(stderr, "{line}")?;
    }
    Ok(())
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match load_and_run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "servrisk: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_flags() {
        assert_eq!(
            parse_weight("LVR=1.25").unwrap(),
            RiskWeight {
                name: "LVR".into(),
                factor: 1.25
            }
        );
        assert!(parse_weight("LVR").is_err());
        assert!(parse_weight("LVR=x").is_err());
    }

    #[test]
    fn flags_map_to_overrides() {
        let cli = Cli::try_parse_from([
            "servrisk",
            "validate",
            "--nsr",
            "1.0,1.1",
            "--family",
            "skew-normal",
            "--skew",
            "-3",
            "--samples",
            "20000",
        ])
        .unwrap();
        let (path, o) = cli.into_overrides();
        assert!(path.is_none());
        assert_eq!(o.command, Command::Validate);
        assert_eq!(o.nsr, Some(vec![1.0, 1.1]));
        assert_eq!(o.family, Some(Family::SkewNormal));
        assert_eq!(o.skew, Some(-3.0));
        assert_eq!(o.samples, Some(20_000));
    }
}

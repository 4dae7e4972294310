//! Config file format and flag merging.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use logper::estimator::{default_lambda_grid, PilotMode};
use logper::models::AutocovModel;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Covariance matrix of the log-average periodogram
    Cov,
    /// Monte Carlo comparison of empirical and formula covariance
    Mc,
    /// Non-central chi-squared moments over a parameter grid
    Moments,
    /// Spectral density estimation study
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Which decorrelated variant the estimation study runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Decorrelate {
    /// Pilot fit, then refit weighted by the implied covariance
    #[default]
    TwoStage,
    /// Weights from the true covariance
    Oracle,
    /// Skip the decorrelated variant
    Off,
}

/// A model given either by alias or in full.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Alias(String),
    Full(AutocovModel),
}

impl ModelSpec {
    pub fn resolve(&self) -> Result<(String, AutocovModel), CliError> {
        match self {
            ModelSpec::Alias(name) => AutocovModel::from_alias(name)
                .map(|m| (name.clone(), m))
                .ok_or_else(|| {
                    CliError::invalid(
                        "model",
                        format!("unknown model '{name}' (expected white, arma-paper or poly-paper)"),
                    )
                }),
            ModelSpec::Full(m) => {
                let name = match m {
                    AutocovModel::White { .. } => "white",
                    AutocovModel::Arma(_) => "arma",
                    AutocovModel::Polynomial(_) => "polynomial",
                    AutocovModel::Custom { .. } => "custom",
                };
                Ok((name.to_string(), m.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsGrid {
    pub mu: Option<Vec<f64>>,
    pub dof: Option<Vec<usize>>,
    pub noncentrality: Option<Vec<f64>>,
    pub scale: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub lambda_grid: Option<Vec<f64>>,
}

/// Contents of a config file. Every key is optional; flags override it.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub model: Option<ModelSpec>,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub decorrelate: Option<Decorrelate>,
    #[serde(default)]
    pub moments: MomentsGrid,
    #[serde(default)]
    pub estimate: EstimateSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigUnreadable {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => {
                    let before = &text[..span.start.min(text.len())];
                    let line = before.matches('\n').count() + 1;
                    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                    (Some(line), Some(column))
                }
                None => (None, None),
            };
            CliError::ConfigParse {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub model: Option<String>,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub decorrelate: Option<Decorrelate>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    /// Named models; `estimate` without an explicit model runs both
    /// built-in study models.
    pub models: Vec<(String, AutocovModel)>,
    pub p: usize,
    pub m: usize,
    pub reps: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub decorrelate: Decorrelate,
    pub moments: ResolvedMoments,
    pub lambda_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedMoments {
    pub mu: Vec<f64>,
    pub dof: Vec<usize>,
    pub noncentrality: Vec<f64>,
    pub scale: Vec<f64>,
}

pub const DEFAULT_P: usize = 60;
pub const DEFAULT_M: usize = 5;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_STUDY_REPS: usize = 300;
pub const DEFAULT_MC_REPS: usize = 20_000;

impl RunConfig {
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self, CliError> {
        let command = flags
            .command
            .or(file.command)
            .ok_or_else(|| CliError::invalid("command", "no command given (cov, mc, moments or estimate)"))?;
        let model_spec = flags.model.map(ModelSpec::Alias).or(file.model);
        let models = match (model_spec, command) {
            (Some(spec), _) => vec![spec.resolve()?],
            (None, Command::Estimate) => vec![
                ("arma-paper".to_string(), AutocovModel::arma_paper()),
                ("poly-paper".to_string(), AutocovModel::poly_paper()),
            ],
            (None, _) => vec![("arma-paper".to_string(), AutocovModel::arma_paper())],
        };
        for (_, model) in &models {
            model
                .validate()
                .map_err(|e| CliError::invalid("model", e.to_string()))?;
        }
        let default_reps = match command {
            Command::Mc => DEFAULT_MC_REPS,
            _ => DEFAULT_STUDY_REPS,
        };
        let moments = ResolvedMoments {
            mu: file.moments.mu.unwrap_or_else(|| vec![-0.25, 0.5, 1.0, 1.5, 2.0]),
            dof: file.moments.dof.unwrap_or_else(|| vec![1, 2, 5]),
            noncentrality: file.moments.noncentrality.unwrap_or_else(|| vec![0.0, 1.0, 4.0]),
            scale: file.moments.scale.unwrap_or_else(|| vec![1.0]),
        };
        let cfg = RunConfig {
            command,
            models,
            p: flags.p.or(file.p).unwrap_or(DEFAULT_P),
            m: flags.m.or(file.m).unwrap_or(DEFAULT_M),
            reps: flags.reps.or(file.reps).unwrap_or(default_reps),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            threads: flags.threads.or(file.threads),
            output: flags.output.or(file.output),
            format: flags.format.or(file.format).unwrap_or_default(),
            decorrelate: flags.decorrelate.or(file.decorrelate).unwrap_or_default(),
            moments,
            lambda_grid: file.estimate.lambda_grid.unwrap_or_else(default_lambda_grid),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.m == 0 {
            return Err(CliError::invalid("m", "must be at least 1"));
        }
        if self.p < 2 {
            return Err(CliError::invalid("p", "must be at least 2"));
        }
        if self.m > self.p {
            return Err(CliError::invalid("m", format!("must not exceed p = {}", self.p)));
        }
        if self.threads == Some(0) {
            return Err(CliError::invalid("threads", "must be at least 1"));
        }
        match self.command {
            Command::Mc if self.reps < logper::mc::MIN_REPLICATIONS => {
                return Err(CliError::invalid(
                    "reps",
                    format!("mc needs at least {} replications", logper::mc::MIN_REPLICATIONS),
                ));
            }
            Command::Estimate => {
                if self.reps == 0 {
                    return Err(CliError::invalid("reps", "must be at least 1"));
                }
                if self.p / self.m < 3 {
                    return Err(CliError::invalid("m", "estimation needs at least 3 bins"));
                }
                let g = &self.lambda_grid;
                if g.is_empty() || g.iter().any(|l| l.is_nan() || *l <= 0.0) || g.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::invalid(
                        "estimate.lambda_grid",
                        "must be non-empty, positive and strictly increasing",
                    ));
                }
            }
            Command::Moments => {
                let mo = &self.moments;
                if mo.mu.is_empty() || mo.dof.is_empty() || mo.noncentrality.is_empty() || mo.scale.is_empty() {
                    return Err(CliError::invalid("moments", "every grid axis needs at least one value"));
                }
                if mo.dof.contains(&0) {
                    return Err(CliError::invalid("moments.dof", "degrees of freedom must be at least 1"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn pilot(&self) -> Option<PilotMode> {
        match self.decorrelate {
            Decorrelate::TwoStage => Some(PilotMode::TwoStage),
            Decorrelate::Oracle => Some(PilotMode::Oracle),
            Decorrelate::Off => None,
        }
    }
}

//! Command-line flags, config files and the merged run configuration.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::output::{Format, Json};

/// Seed used when neither `--seed`, the config file nor `TAUKIT_SEED` sets one.
pub const DEFAULT_SEED: u64 = 20_170_419;

#[derive(Debug, Parser)]
#[command(name = "taukit", version, about = "Numerical checks of inf-convolution inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an invariant suite.
    Verify(RunArgs),
    /// Run a tail / moment experiment and emit per-parameter rows.
    Experiment(RunArgs),
    /// Re-emit a saved JSON report, e.g. as CSV.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Suite for `verify`.
    #[arg(long)]
    pub suite: Option<String>,
    /// Experiment for `experiment`.
    #[arg(long)]
    pub experiment: Option<String>,
    #[arg(long, env = "TAUKIT_SEED")]
    pub seed: Option<u64>,
    /// Monte Carlo samples, or random cases for case-based suites.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda_grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Treat inconclusive checks as failures.
    #[arg(long)]
    pub strict: bool,
    /// JSON file with any of the fields above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// A JSON report written by `verify` or `experiment`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Config file layout; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub suite: Option<String>,
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub t_grid: Option<Vec<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub strict: Option<bool>,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub seed: u64,
    pub samples: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub t_grid: Option<Vec<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub strict: bool,
}

/// A bad invocation (exit status 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl RunConfig {
    /// Merges flags over the optional config file. `experiment` selects
    /// whether the name comes from `--experiment` or `--suite`.
    pub fn resolve(args: &RunArgs, experiment: bool) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| UsageError(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| UsageError(format!("bad config {}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        let name = if experiment {
            args.experiment.clone().or(file.experiment)
        } else {
            args.suite.clone().or(file.suite)
        };
        let name = name.ok_or_else(|| {
            UsageError(format!("missing --{}", if experiment { "experiment" } else { "suite" }))
        })?;
        let cfg = RunConfig {
            name,
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            samples: args.samples.or(file.samples),
            dims: args.dims.clone().or(file.dims),
            t_grid: args.t_grid.clone().or(file.t_grid),
            lambda_grid: args.lambda_grid.clone().or(file.lambda_grid),
            format: args.format.or(file.format).unwrap_or(Format::Json),
            out: args.out.clone().or(file.out),
            threads: args.threads.or(file.threads),
            strict: args.strict || file.strict.unwrap_or(false),
        };
        if cfg.threads == Some(0) {
            return Err(UsageError("--threads must be positive".into()).into());
        }
        if cfg.samples == Some(0) {
            return Err(UsageError("--samples must be positive".into()).into());
        }
        if cfg.dims.as_ref().is_some_and(|d| d.is_empty() || d.contains(&0)) {
            return Err(UsageError("--dims must list positive dimensions".into()).into());
        }
        for (flag, grid) in [("--t-grid", &cfg.t_grid), ("--lambda-grid", &cfg.lambda_grid)] {
            if grid.as_ref().is_some_and(|g| g.is_empty() || g.iter().any(|v| !v.is_finite())) {
                return Err(UsageError(format!("{flag} must list finite numbers")).into());
            }
        }
        Ok(cfg)
    }

    /// The inputs that determine the numbers (not the output path or the
    /// thread count).
    pub fn echo(&self) -> Json {
        let opt_nums = |v: &Option<Vec<f64>>| v.as_ref().map_or(Json::Null, |g| Json::nums(g));
        Json::obj([
            ("name", Json::Str(self.name.clone())),
            ("seed", Json::Int(self.seed as i128)),
            ("samples", self.samples.map_or(Json::Null, |s| Json::Int(s as i128))),
            ("dims", self.dims.as_ref().map_or(Json::Null, |d| Json::ints(d))),
            ("t_grid", opt_nums(&self.t_grid)),
            ("lambda_grid", opt_nums(&self.lambda_grid)),
            ("strict", Json::Bool(self.strict)),
        ])
    }
}

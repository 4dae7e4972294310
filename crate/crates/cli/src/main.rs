mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use config::{Command, Decorrelate, FileConfig, Format, Overrides, RunConfig};
use error::CliError;

const AFTER_HELP: &str = "\
Commands:
  cov       T x T covariance matrix of the log-average periodogram
  mc        Monte Carlo check of that matrix
  moments   non-central chi-squared moments over the [moments] grid
  estimate  spectral density estimation study (raw, smoothed, decorrelated)

Outputs (CSV, floats with 17 significant digits):
  cov       T rows of T values, no header
  mc        j,j_prime,formula,empirical,std_err (1-based bins);
            a readable table is written to <output>.table.txt
  moments   mu,dof,noncentrality,scale,moment
  estimate  model,method,l_inf,l_2,spectral_norm (means);
            per replication: model,replication,method,l_inf,l_2,spectral_norm
            in <output>.replications.csv

Config file (TOML): keys command, model, p, m, reps, seed, threads, output,
format, decorrelate, plus sections [moments] (mu, dof, noncentrality, scale)
and [estimate] (lambda_grid). `model` is an alias or a table such as
  [model]
  kind = \"arma\"
  ar = [0.7, -0.6]
  ma = [-0.2, 0.2]
  innov_var = 1.44
Flags take precedence over the file.

Exit status:
  0  success
  2  invalid command line
  3  config file missing or unreadable
  4  config file malformed or invalid
  5  numerical failure or violated precondition
  6  output could not be written
Errors are reported on stderr as one JSON object.";

#[derive(Debug, Parser)]
#[command(name = "logper", version, about = "Covariance of the log-average periodogram", after_help = AFTER_HELP)]
struct Cli {
    /// What to compute
    #[arg(value_enum)]
    command: Option<Command>,

    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,

    /// white, arma-paper or poly-paper
    #[arg(long)]
    model: Option<String>,

    /// Series length
    #[arg(long)]
    p: Option<usize>,

    /// Frequencies per bin
    #[arg(long)]
    m: Option<usize>,

    /// Number of replications
    #[arg(long)]
    reps: Option<usize>,

    /// Random seed
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,

    /// Output file (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,

    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Decorrelated variant of the estimation study
    #[arg(long, value_enum, num_args = 0..=1, default_missing_value = "two-stage")]
    decorrelate: Option<Decorrelate>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        command: cli.command,
        model: cli.model,
        p: cli.p,
        m: cli.m,
        reps: cli.reps,
        seed: cli.seed,
        threads: cli.threads,
        output: cli.output,
        format: cli.format,
        decorrelate: cli.decorrelate,
    };
    let cfg = RunConfig::resolve(file, flags)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::invalid("threads", e.to_string()))?
    };
    let artifacts = pool.install(|| commands::run(&cfg))?;
    write_output(cfg.output.as_deref(), &artifacts.main)?;
    if let Some(base) = &cfg.output {
        for (suffix, body) in &artifacts.extra {
            let mut name = base.clone().into_os_string();
            name.push(suffix);
            write_output(Some(Path::new(&name)), body)?;
        }
    }
    Ok(())
}

fn write_output(path: Option<&Path>, body: &str) -> Result<(), CliError> {
    let err = |e: std::io::Error| CliError::Output {
        path: path.map(Path::to_path_buf),
        reason: e.to_string(),
    };
    match path {
        Some(p) => std::fs::write(p, body).map_err(err),
        None => std::io::stdout().lock().write_all(body.as_bytes()).map_err(err),
    }
}

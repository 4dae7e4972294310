use std::fmt::Write as _;

use logper::covkernel::{fmt_f64, logavg_covariance, noncentral_chisq_moment, spectral_covariance};
use logper::estimator::{run_study, StudyConfig, StudyResult};
use logper::mc::empirical_logavg_cov;
use logper::transform::BinPartition;
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Rendered outputs: the main artifact and optional extra files keyed by
/// a suffix appended to the output path.
pub struct Artifacts {
    pub main: String,
    pub extra: Vec<(&'static str, String)>,
}

impl Artifacts {
    fn single(main: String) -> Self {
        Artifacts {
            main,
            extra: Vec::new(),
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    use crate::config::Command::*;
    match cfg.command {
        Cov => cov(cfg),
        Mc => mc(cfg),
        Moments => moments(cfg),
        Estimate => estimate(cfg),
    }
}

fn partition(cfg: &RunConfig) -> Result<BinPartition, CliError> {
    Ok(BinPartition::new(cfg.p, cfg.m)?)
}

fn cov(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (_, model) = &cfg.models[0];
    let sc = spectral_covariance(&model.toeplitz(cfg.p)?, partition(cfg)?)?;
    let c = logavg_covariance(&sc)?;
    Ok(Artifacts::single(match cfg.format {
        Format::Csv => c.to_csv(),
        Format::Json => c.to_json() + "\n",
    }))
}

fn mc(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (_, model) = &cfg.models[0];
    let report = empirical_logavg_cov(model, partition(cfg)?, cfg.reps, cfg.seed)?;
    Ok(match cfg.format {
        Format::Json => Artifacts::single(report.to_json() + "\n"),
        Format::Csv => {
            let f = report.formula_cov.matrix();
            let mut out = String::from("j,j_prime,formula,empirical,std_err\n");
            for i in 0..report.bins {
                for j in 0..report.bins {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        i + 1,
                        j + 1,
                        fmt_f64(f[(i, j)]),
                        fmt_f64(report.empirical_cov[i][j]),
                        fmt_f64(report.std_err[i][j])
                    );
                }
            }
            Artifacts {
                main: out,
                extra: vec![(".table.txt", report.to_table())],
            }
        }
    })
}

fn moments(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let g = &cfg.moments;
    let mut rows = Vec::new();
    for &mu in &g.mu {
        for &dof in &g.dof {
            for &k in &g.noncentrality {
                for &scale in &g.scale {
                    rows.push((mu, dof, k, scale, noncentral_chisq_moment(mu, dof, k, scale)?));
                }
            }
        }
    }
    Ok(Artifacts::single(match cfg.format {
        Format::Csv => {
            let mut out = String::from("mu,dof,noncentrality,scale,moment\n");
            for (mu, dof, k, s, v) in rows {
                let _ = writeln!(out, "{},{dof},{},{},{}", fmt_f64(mu), fmt_f64(k), fmt_f64(s), fmt_f64(v));
            }
            out
        }
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|(mu, dof, k, s, v)| {
                    json!({"mu": mu, "dof": dof, "noncentrality": k, "scale": s, "moment": v})
                })
                .collect();
            serde_json::to_string_pretty(&v).expect("numeric rows serialize") + "\n"
        }
    }))
}

fn estimate(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let study_cfg = StudyConfig {
        partition: partition(cfg)?,
        n_reps: cfg.reps,
        first_seed: cfg.seed,
        decorrelate: cfg.pilot(),
        lambda_grid: cfg.lambda_grid.clone(),
    };
    let results: Vec<(String, StudyResult)> = cfg
        .models
        .iter()
        .map(|(name, model)| Ok((name.clone(), run_study(model, &study_cfg)?)))
        .collect::<Result<_, CliError>>()?;
    Ok(match cfg.format {
        Format::Csv => {
            let mut summary = String::from("model,method,l_inf,l_2,spectral_norm\n");
            let mut rows = String::from("model,replication,method,l_inf,l_2,spectral_norm\n");
            for (name, res) in &results {
                for s in &res.summary {
                    let _ = writeln!(
                        summary,
                        "{name},{},{},{},{}",
                        s.method.name(),
                        fmt_f64(s.l_inf),
                        fmt_f64(s.l_2),
                        fmt_f64(s.spectral_norm)
                    );
                }
                for r in &res.rows {
                    let _ = writeln!(
                        rows,
                        "{name},{},{},{},{},{}",
                        r.replication + 1,
                        r.method.name(),
                        fmt_f64(r.l_inf),
                        fmt_f64(r.l_2),
                        fmt_f64(r.spectral_norm)
                    );
                }
            }
            Artifacts {
                main: summary,
                extra: vec![(".replications.csv", rows)],
            }
        }
        Format::Json => {
            let v: Vec<_> = results
                .iter()
                .map(|(name, res)| {
                    json!({
                        "model": name,
                        "replications": cfg.reps,
                        "first_seed": cfg.seed,
                        "fallbacks": res.fallbacks,
                        "summary": res.summary,
                        "rows": res.rows,
                    })
                })
                .collect();
            Artifacts::single(serde_json::to_string_pretty(&v).expect("numeric rows serialize") + "\n")
        }
    })
}

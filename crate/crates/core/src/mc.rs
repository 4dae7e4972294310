//! Monte Carlo check of the log-average covariance formula.
//!
//! Replication `r` draws `y = L z` from ChaCha8 stream `r` of the seed,
//! maps it to `Y*`, and the per-replication vectors are reduced in
//! replication order. The result is therefore identical for any thread
//! count.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::covkernel::{logavg_covariance, matrix_rows, spectral_covariance, LogAvgCovariance};
use crate::error::{Error, Result};
use crate::models::AutocovModel;
use crate::transform::{log_average_periodogram, BinPartition, Dct1, Remainder};

pub const MIN_REPLICATIONS: usize = 100;
pub const BATCHES: usize = 50;

/// Empirical versus formula covariance of `Y*`.
#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub p: usize,
    pub m: usize,
    pub bins: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub empirical_cov: Vec<Vec<f64>>,
    pub std_err: Vec<Vec<f64>>,
    pub formula_cov: LogAvgCovariance,
    pub max_abs_dev: f64,
    pub max_dev_in_se_units: f64,
    /// `max_j |formula_jj - empirical_jj| / empirical_jj`.
    pub max_rel_diag_dev: f64,
    /// Largest off-diagonal `|formula - empirical|`.
    pub max_abs_offdiag_dev: f64,
}

/// Simulates `n_reps` series from `model` and compares the sample
/// covariance of `Y*` with the formula.
///
/// When `p` is not a multiple of `m` the trailing components are dropped
/// so that both sides refer to the same `m`-member bins.
pub fn empirical_logavg_cov(
    model: &AutocovModel,
    partition: BinPartition,
    n_reps: usize,
    seed: u64,
) -> Result<McReport> {
    if n_reps < MIN_REPLICATIONS {
        return Err(Error::Precondition(format!(
            "at least {MIN_REPLICATIONS} replications are required, got {n_reps}"
        )));
    }
    let partition = if partition.is_equal_width() {
        partition
    } else {
        partition.with_policy(Remainder::Drop)
    };
    let p = partition.p();
    let cov = model.toeplitz(p)?;
    let formula = logavg_covariance(&spectral_covariance(&cov, partition)?)?;
    let dct = Dct1::new(p)?;

    let draws: Vec<Vec<f64>> = (0..n_reps as u64)
        .into_par_iter()
        .map(|r| {
            let y = cov.sample_replication(seed, r);
            log_average_periodogram(&dct.spectral_components(&y, partition)?)
        })
        .collect::<Result<_>>()?;

    let t = partition.bins();
    let empirical = sample_covariance(&draws, t);
    let per_batch: Vec<DMatrix<f64>> = (0..BATCHES)
        .map(|b| sample_covariance(&draws[b * n_reps / BATCHES..(b + 1) * n_reps / BATCHES], t))
        .collect();
    let std_err = DMatrix::from_fn(t, t, |i, j| {
        let mean = per_batch.iter().map(|c| c[(i, j)]).sum::<f64>() / BATCHES as f64;
        let var = per_batch
            .iter()
            .map(|c| (c[(i, j)] - mean).powi(2))
            .sum::<f64>()
            / (BATCHES - 1) as f64;
        (var / BATCHES as f64).sqrt()
    });

    let dev = formula.matrix() - &empirical;
    let mut max_dev_in_se_units: f64 = 0.0;
    let mut max_rel_diag_dev: f64 = 0.0;
    let mut max_abs_offdiag_dev: f64 = 0.0;
    for i in 0..t {
        for j in 0..t {
            let d = dev[(i, j)].abs();
            max_dev_in_se_units = max_dev_in_se_units.max(d / std_err[(i, j)]);
            if i == j {
                max_rel_diag_dev = max_rel_diag_dev.max(d / empirical[(i, i)]);
            } else {
                max_abs_offdiag_dev = max_abs_offdiag_dev.max(d);
            }
        }
    }
    Ok(McReport {
        p,
        m: partition.m(),
        bins: t,
        n_reps,
        seed,
        empirical_cov: matrix_rows(&empirical),
        std_err: matrix_rows(&std_err),
        max_abs_dev: dev.amax(),
        max_dev_in_se_units,
        max_rel_diag_dev,
        max_abs_offdiag_dev,
        formula_cov: formula,
    })
}

/// Unbiased sample covariance, accumulated in slice order.
fn sample_covariance(draws: &[Vec<f64>], t: usize) -> DMatrix<f64> {
    let n = draws.len() as f64;
    let mut mean = vec![0.0; t];
    for d in draws {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut c = DMatrix::zeros(t, t);
    for d in draws {
        for i in 0..t {
            let di = d[i] - mean[i];
            for j in i..t {
                c[(i, j)] += di * (d[j] - mean[j]);
            }
        }
    }
    for i in 0..t {
        for j in i..t {
            c[(i, j)] /= n - 1.0;
            c[(j, i)] = c[(i, j)];
        }
    }
    c
}

impl McReport {
    pub fn empirical(&self) -> DMatrix<f64> {
        from_rows(&self.empirical_cov)
    }

    pub fn std_err_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.std_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric record serializes")
    }

    /// One line per bin pair with formula, empirical value, standard error
    /// and deviation in standard errors, followed by a summary.
    pub fn to_table(&self) -> String {
        let formula = self.formula_cov.matrix();
        let mut out = format!(
            "{:>3} {:>3} {:>14} {:>14} {:>12} {:>8}\n",
            "j", "j'", "formula", "empirical", "std_err", "dev/se"
        );
        for i in 0..self.bins {
            for j in i..self.bins {
                let (f, e, s) = (formula[(i, j)], self.empirical_cov[i][j], self.std_err[i][j]);
                let _ = writeln!(
                    out,
                    "{:>3} {:>3} {:>14.8} {:>14.8} {:>12.3e} {:>8.2}",
                    i + 1,
                    j + 1,
                    f,
                    e,
                    s,
                    (f - e) / s
                );
            }
        }
        let _ = writeln!(
            out,
            "p = {}, m = {}, T = {}, replications = {}, seed = {}",
            self.p, self.m, self.bins, self.n_reps, self.seed
        );
        let _ = writeln!(
            out,
            "max |dev| = {:.6}, max |dev|/se = {:.3}, max diag rel dev = {:.4}, max off-diag |dev| = {:.6}",
            self.max_abs_dev, self.max_dev_in_se_units, self.max_rel_diag_dev, self.max_abs_offdiag_dev
        );
        out
    }
}

fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

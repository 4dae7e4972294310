//! Covariance of the log-average periodogram.
//!
//! For `Ω = D Σ D` partitioned into `m x m` blocks `Ω_{j,j'}`, the
//! covariance of `Y*_j` and `Y*_{j'}` is approximated by
//!
//! ```text
//! Cov(Y*_j, Y*_j') ≈ Σ_{n>=1} n! τ^n / ((m/2)_n n^2),
//! τ = tr(Ω_jj^{-1} Ω_jj' Ω_j'j'^{-1} Ω_j'j) / m,
//! ```
//!
//! where `τ` is the mean squared canonical correlation between the two
//! blocks of spectral components.

pub mod moments;

use nalgebra::{Cholesky, DMatrix, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ToeplitzCovariance;
use crate::specfun::{logavg_cov_kernel, SeriesControl};
use crate::transform::{symmetrize, BinPartition, Dct1};

pub use moments::{ln_noncentral_chisq_moment, noncentral_chisq_moment};

/// Values of `τ` this close to 0 or 1 are snapped to the boundary.
const TAU_CLAMP: f64 = 1e-12;

/// How `p` not divisible by `m` is handled when assembling the covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnequalBins {
    /// Use only the first `T m` frequencies.
    #[default]
    Truncate,
    Reject,
}

/// Numerical settings for [`logavg_covariance_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovOptions {
    pub series: SeriesControl,
    pub unequal_bins: UnequalBins,
}

impl Default for CovOptions {
    fn default() -> Self {
        CovOptions {
            // The kernel converges like τ^n; τ close to 1 needs long sums.
            series: SeriesControl {
                rel_tol: 1e-14,
                max_terms: 1_000_000,
            },
            unequal_bins: UnequalBins::Truncate,
        }
    }
}

/// `Ω = D Σ D` together with the bin partition.
#[derive(Debug, Clone)]
pub struct SpectralCovariance {
    omega: DMatrix<f64>,
    partition: BinPartition,
}

/// Computes `Ω = D Σ D`.
pub fn spectral_covariance(
    cov: &ToeplitzCovariance,
    partition: BinPartition,
) -> Result<SpectralCovariance> {
    if partition.p() != cov.dim() {
        return Err(Error::DimensionMismatch {
            expected: cov.dim(),
            found: partition.p(),
        });
    }
    let dct = Dct1::new(cov.dim())?;
    SpectralCovariance::from_omega(dct.congruence(cov.matrix()), partition)
}

impl SpectralCovariance {
    /// Wraps a precomputed `Ω`; it is symmetrized on the way in.
    pub fn from_omega(mut omega: DMatrix<f64>, partition: BinPartition) -> Result<Self> {
        if omega.nrows() != partition.p() || omega.ncols() != partition.p() {
            return Err(Error::DimensionMismatch {
                expected: partition.p(),
                found: omega.nrows(),
            });
        }
        symmetrize(&mut omega);
        Ok(SpectralCovariance { omega, partition })
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn partition(&self) -> BinPartition {
        self.partition
    }

    pub fn trace(&self) -> f64 {
        self.omega.trace()
    }

    /// The `m x m` block `Ω_{j,j'}` (rows of bin `j`, columns of bin `j'`).
    pub fn block(&self, j: usize, j_prime: usize) -> DMatrix<f64> {
        let m = self.partition.m();
        self.omega
            .view((j * m, j_prime * m), (m, m))
            .into_owned()
    }

    fn check_bin(&self, j: usize) -> Result<()> {
        let t = self.partition.bins();
        if j >= t {
            return Err(Error::Parameter(format!(
                "bin index {j} out of range for {t} bins"
            )));
        }
        Ok(())
    }

    fn factor_block(&self, j: usize) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.block(j, j)).ok_or(Error::SingularBlock { bin: j })
    }
}

/// `τ` for one pair of bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTrace {
    pub j: usize,
    pub j_prime: usize,
    pub tau: f64,
}

/// `τ_{j,j'} = tr(Ω_jj^{-1} Ω_jj' Ω_j'j'^{-1} Ω_j'j) / m`, via Cholesky solves.
pub fn correlation_trace(
    sc: &SpectralCovariance,
    j: usize,
    j_prime: usize,
) -> Result<CorrelationTrace> {
    sc.check_bin(j)?;
    sc.check_bin(j_prime)?;
    let chol_j = sc.factor_block(j)?;
    let chol_k = sc.factor_block(j_prime)?;
    trace_from_factors(sc, j, j_prime, &chol_j, &chol_k)
}

fn trace_from_factors(
    sc: &SpectralCovariance,
    j: usize,
    j_prime: usize,
    chol_j: &Cholesky<f64, Dyn>,
    chol_k: &Cholesky<f64, Dyn>,
) -> Result<CorrelationTrace> {
    if j == j_prime {
        return Ok(CorrelationTrace { j, j_prime, tau: 1.0 });
    }
    let m = sc.partition.m();
    let a = chol_j.solve(&sc.block(j, j_prime));
    let b = chol_k.solve(&sc.block(j_prime, j));
    // tr(AB) without forming the product
    let raw = a.component_mul(&b.transpose()).sum() / m as f64;
    let tau = if raw.abs() <= TAU_CLAMP {
        0.0
    } else if (raw - 1.0).abs() <= TAU_CLAMP {
        1.0
    } else if (0.0..=1.0).contains(&raw) {
        raw
    } else {
        return Err(Error::TraceOutOfRange {
            j,
            j_prime,
            tau: raw,
        });
    };
    Ok(CorrelationTrace { j, j_prime, tau })
}

/// The `T x T` covariance matrix of the log-average periodogram.
#[derive(Debug, Clone, PartialEq)]
pub struct LogAvgCovariance {
    matrix: DMatrix<f64>,
    partition: BinPartition,
}

#[derive(Serialize)]
struct LogAvgCovarianceRecord {
    p: usize,
    m: usize,
    bins: usize,
    matrix: Vec<Vec<f64>>,
}

impl LogAvgCovariance {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn partition(&self) -> BinPartition {
        self.partition
    }

    pub fn bins(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.matrix)
    }

    /// Row-major CSV, no header, 17 significant digits.
    pub fn to_csv(&self) -> String {
        matrix_csv(&self.matrix)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric record serializes")
    }
}

impl Serialize for LogAvgCovariance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LogAvgCovarianceRecord {
            p: self.partition.p(),
            m: self.partition.m(),
            bins: self.bins(),
            matrix: self.rows(),
        }
        .serialize(s)
    }
}

pub(crate) fn matrix_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    a.row_iter()
        .map(|r| r.iter().copied().collect())
        .collect()
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn matrix_csv(a: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in a.row_iter() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Assembles the covariance with default options.
pub fn logavg_covariance(sc: &SpectralCovariance) -> Result<LogAvgCovariance> {
    logavg_covariance_with(sc, &CovOptions::default())
}

pub fn logavg_covariance_with(
    sc: &SpectralCovariance,
    opts: &CovOptions,
) -> Result<LogAvgCovariance> {
    opts.series.validate()?;
    let part = sc.partition;
    if !part.p().is_multiple_of(part.m()) && opts.unequal_bins == UnequalBins::Reject {
        return Err(Error::Precondition(format!(
            "p = {} is not divisible by m = {}",
            part.p(),
            part.m()
        )));
    }
    let t = part.bins();
    let m = part.m();
    let factors: Vec<_> = (0..t)
        .into_par_iter()
        .map(|j| sc.factor_block(j))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..t).flat_map(|j| (j..t).map(move |k| (j, k))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(j, k)| {
            let tau = trace_from_factors(sc, j, k, &factors[j], &factors[k])?.tau;
            logavg_cov_kernel(tau, m, &opts.series)
        })
        .collect::<Result<_>>()?;
    let mut matrix = DMatrix::zeros(t, t);
    for (&(j, k), v) in pairs.iter().zip(values) {
        matrix[(j, k)] = v;
        matrix[(k, j)] = v;
    }
    let partition = if part.is_equal_width() {
        part
    } else {
        part.with_policy(crate::transform::Remainder::Drop)
    };
    Ok(LogAvgCovariance { matrix, partition })
}

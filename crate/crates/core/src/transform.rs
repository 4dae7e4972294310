//! DCT-I spectral components and the log-average periodogram.
//!
//! The series `y_1..y_p` is mapped to spectral components `Y = D y`, where
//! `D` is the orthonormal, symmetric DCT-I matrix
//!
//! ```text
//! D_ij = sqrt(2 / (p-1)) cos(pi (i-1)(j-1) / (p-1)),
//! ```
//!
//! with each entry divided by `sqrt(2)` once for a boundary row and once for
//! a boundary column. Component `i` sits at frequency `pi (i-1) / (p-1)`.
//!
//! Frequencies are grouped into `T = floor(p/m)` bins of `m` consecutive
//! components; the log-average periodogram is the log of each bin's mean
//! squared component. Indices in this API are 0-based.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What happens to the `p - T m` components left over after `T` full bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Remainder {
    /// Leftovers join the last bin, which is averaged over its true size.
    #[default]
    MergeMemberCount,
    /// Leftovers join the last bin, but the sum is still divided by `m`.
    MergeDivideByM,
    /// Leftovers are dropped; every bin has exactly `m` members.
    Drop,
}

/// Grouping of `p` frequencies into `bins` bins of (nominally) `m` members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinPartition {
    p: usize,
    m: usize,
    bins: usize,
    remainder: Remainder,
}

impl BinPartition {
    pub fn new(p: usize, m: usize) -> Result<Self> {
        Self::with_remainder(p, m, Remainder::default())
    }

    pub fn with_remainder(p: usize, m: usize, remainder: Remainder) -> Result<Self> {
        if m == 0 || m > p {
            return Err(Error::Parameter(format!(
                "bin size m must satisfy 1 <= m <= p (p = {p}, m = {m})"
            )));
        }
        Ok(BinPartition {
            p,
            m,
            bins: p / m,
            remainder,
        })
    }

    /// Partition of `p` frequencies into exactly `bins` bins.
    pub fn from_bin_count(p: usize, bins: usize) -> Result<Self> {
        if bins == 0 || bins > p {
            return Err(Error::Parameter(format!(
                "bin count must satisfy 1 <= T <= p (p = {p}, T = {bins})"
            )));
        }
        Self::new(p, p / bins)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn remainder(&self) -> Remainder {
        self.remainder
    }

    pub fn is_equal_width(&self) -> bool {
        self.p.is_multiple_of(self.m)
    }

    pub fn with_policy(self, remainder: Remainder) -> Self {
        BinPartition { remainder, ..self }
    }

    /// Component indices of bin `j` (0-based).
    pub fn bin_range(&self, j: usize) -> Range<usize> {
        assert!(j < self.bins, "bin {j} out of range (T = {})", self.bins);
        let start = j * self.m;
        let end = if j + 1 == self.bins && self.remainder != Remainder::Drop {
            self.p
        } else {
            start + self.m
        };
        start..end
    }

    pub fn bin_len(&self, j: usize) -> usize {
        self.bin_range(j).len()
    }

    /// Divisor used when averaging bin `j`.
    pub fn bin_divisor(&self, j: usize) -> usize {
        match self.remainder {
            Remainder::MergeDivideByM => self.m,
            _ => self.bin_len(j),
        }
    }

    /// Frequency `pi i / (p-1)` of component `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        frequency(self.p, i)
    }

    /// Mean frequency of the members of bin `j`.
    pub fn bin_center(&self, j: usize) -> f64 {
        let r = self.bin_range(j);
        let n = r.len() as f64;
        r.map(|i| self.frequency(i)).sum::<f64>() / n
    }
}

/// Frequency grid point `pi i / (p-1)`, `i = 0..p`.
pub fn frequency(p: usize, i: usize) -> f64 {
    std::f64::consts::PI * i as f64 / (p - 1) as f64
}

/// Frequencies of all `p` spectral components.
pub fn frequency_grid(p: usize) -> Vec<f64> {
    (0..p).map(|i| frequency(p, i)).collect()
}

/// Builds the `p x p` orthonormal DCT-I matrix.
pub fn dct1_matrix(p: usize) -> Result<DMatrix<f64>> {
    if p < 2 {
        return Err(Error::Domain(format!("DCT-I needs p >= 2, got {p}")));
    }
    let n = p - 1;
    let period = 2 * n;
    let scale = (2.0 / n as f64).sqrt();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut d = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            // Reduce the angle index modulo the period before scaling so that
            // large p keeps full precision.
            let k = (i * j) % period;
            let mut v = scale * (std::f64::consts::PI * k as f64 / n as f64).cos();
            if i == 0 || i == n {
                v *= half;
            }
            if j == 0 || j == n {
                v *= half;
            }
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

/// Reusable DCT-I operator.
#[derive(Debug, Clone)]
pub struct Dct1 {
    matrix: DMatrix<f64>,
}

impl Dct1 {
    pub fn new(p: usize) -> Result<Self> {
        Ok(Dct1 {
            matrix: dct1_matrix(p)?,
        })
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `D y`.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: y.len(),
            });
        }
        let v = &self.matrix * DVector::from_column_slice(y);
        Ok(v.as_slice().to_vec())
    }

    pub fn spectral_components(
        &self,
        y: &[f64],
        partition: BinPartition,
    ) -> Result<SpectralComponents> {
        if partition.p() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: partition.p(),
            });
        }
        SpectralComponents::new(self.apply(y)?, partition)
    }

    /// `D diag(weights) D`, the covariance of components with independent
    /// variances `weights` mapped back to the time domain.
    pub fn congruence_diag(&self, weights: &[f64]) -> DMatrix<f64> {
        let p = self.len();
        let mut scaled = self.matrix.clone();
        for (j, w) in weights.iter().enumerate().take(p) {
            scaled.column_mut(j).scale_mut(*w);
        }
        let mut out = scaled * &self.matrix;
        symmetrize(&mut out);
        out
    }

    /// `D a D`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = &self.matrix * a * &self.matrix;
        symmetrize(&mut out);
        out
    }
}

pub(crate) fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Spectral components `Y_1..Y_p` together with their bin partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralComponents {
    values: Vec<f64>,
    partition: BinPartition,
}

impl SpectralComponents {
    pub fn new(values: Vec<f64>, partition: BinPartition) -> Result<Self> {
        if values.len() != partition.p() {
            return Err(Error::DimensionMismatch {
                expected: partition.p(),
                found: values.len(),
            });
        }
        Ok(SpectralComponents { values, partition })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn partition(&self) -> BinPartition {
        self.partition
    }

    /// Raw periodogram `Y_i^2`.
    pub fn periodogram(&self) -> Vec<f64> {
        self.values.iter().map(|y| y * y).collect()
    }
}

/// `Y = D y` for a series of length `p >= 2`.
pub fn spectral_components(y: &[f64], partition: BinPartition) -> Result<SpectralComponents> {
    Dct1::new(y.len())?.spectral_components(y, partition)
}

/// `Y*_j = log(mean of Y_i^2 over bin j)` for every bin.
pub fn log_average_periodogram(components: &SpectralComponents) -> Result<Vec<f64>> {
    let part = components.partition();
    let values = components.values();
    (0..part.bins())
        .map(|j| {
            let power: f64 = values[part.bin_range(j)].iter().map(|y| y * y).sum();
            let avg = power / part.bin_divisor(j) as f64;
            if avg > 0.0 && avg.is_finite() {
                Ok(avg.ln())
            } else {
                Err(Error::DegenerateBin { bin: j })
            }
        })
        .collect()
}

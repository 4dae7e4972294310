//! Stationary Gaussian process models.
//!
//! An [`AutocovModel`] describes an autocovariance sequence `σ(τ)`; a
//! [`ToeplitzCovariance`] materializes `Σ = (σ_{|i-j|})` for a given length
//! and holds its Cholesky factor for exact sampling.
//!
//! Sampling is keyed: replication `r` under seed `s` always draws its
//! normals from ChaCha8 stream `r` of seed `s`, so a replication is a pure
//! function of `(s, r)` regardless of how work is split across threads.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cut-off for ψ-weights.
const PSI_REL_TOL: f64 = 1e-14;
/// Hard cap on the number of ψ-weights.
const PSI_MAX_TERMS: usize = 100_000;
/// Autocovariances below this magnitude are treated as zero when summing
/// the spectral density.
const SPECTRAL_CUTOFF: f64 = 1e-12;
const MAX_SPECTRAL_LAG: usize = 5_000_000;

/// ARMA(p, q) with `X_t = Σ φ_i X_{t-i} + ε_t + Σ θ_j ε_{t-j}`, `Var ε = innov_var`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaSpec {
    #[serde(default)]
    pub ar: Vec<f64>,
    #[serde(default)]
    pub ma: Vec<f64>,
    pub innov_var: f64,
}

impl ArmaSpec {
    /// ARMA(2,2) with φ = (0.7, -0.6), θ = (-0.2, 0.2), innovation variance 1.44.
    pub fn paper() -> Self {
        ArmaSpec {
            ar: vec![0.7, -0.6],
            ma: vec![-0.2, 0.2],
            innov_var: 1.44,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.innov_var > 0.0 && self.innov_var.is_finite()) {
            return Err(Error::Parameter(format!(
                "innovation variance must be positive, got {}",
                self.innov_var
            )));
        }
        if self.ar.iter().chain(&self.ma).any(|c| !c.is_finite()) {
            return Err(Error::Parameter("ARMA coefficients must be finite".into()));
        }
        check_stationary(&self.ar)
    }

    /// MA(∞) weights ψ_0 = 1, ψ_k = θ_k + Σ φ_i ψ_{k-i}.
    pub fn psi_weights(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let p = self.ar.len();
        let q = self.ma.len();
        let mut psi = vec![1.0];
        let mut max_abs: f64 = 1.0;
        // After lag q the recursion is homogeneous, so once max(p, 1)
        // consecutive weights are negligible all later ones are too.
        let window = p.max(1);
        let mut small_run = 0;
        for k in 1..PSI_MAX_TERMS {
            let mut v = if k <= q { self.ma[k - 1] } else { 0.0 };
            for (i, phi) in self.ar.iter().enumerate() {
                if k > i {
                    v += phi * psi[k - i - 1];
                }
            }
            psi.push(v);
            max_abs = max_abs.max(v.abs());
            if k > q && v.abs() < PSI_REL_TOL * max_abs {
                small_run += 1;
                if small_run >= window {
                    break;
                }
            } else {
                small_run = 0;
            }
        }
        Ok(psi)
    }
}

/// Checks that all roots of `1 - φ_1 z - ... - φ_p z^p` lie outside the
/// unit circle, via the companion matrix eigenvalues.
fn check_stationary(ar: &[f64]) -> Result<()> {
    let p = ar.len();
    if p == 0 {
        return Ok(());
    }
    let mut companion = DMatrix::zeros(p, p);
    for (j, phi) in ar.iter().enumerate() {
        companion[(0, j)] = *phi;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    let modulus = companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if modulus >= 1.0 - 1e-12 {
        return Err(Error::NonStationary { modulus });
    }
    Ok(())
}

/// σ(0), ..., σ(max_lag) of an ARMA process via its ψ-weights.
pub fn arma_autocovariance(
    ar: &[f64],
    ma: &[f64],
    innov_var: f64,
    max_lag: usize,
) -> Result<Vec<f64>> {
    let spec = ArmaSpec {
        ar: ar.to_vec(),
        ma: ma.to_vec(),
        innov_var,
    };
    let psi = spec.psi_weights()?;
    Ok(autocov_from_psi(&psi, innov_var, max_lag))
}

fn autocov_from_psi(psi: &[f64], innov_var: f64, max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|lag| {
            if lag >= psi.len() {
                return 0.0;
            }
            let s: f64 = psi.iter().zip(&psi[lag..]).map(|(a, b)| a * b).sum();
            innov_var * s
        })
        .collect()
}

/// `σ(τ) = scale (1 + rate |τ|)^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialDecay {
    pub scale: f64,
    pub rate: f64,
    pub exponent: f64,
}

impl PolynomialDecay {
    /// `σ(τ) = 1.44 (1 + 2|τ|)^(-2.5)`.
    pub fn paper() -> Self {
        PolynomialDecay {
            scale: 1.44,
            rate: 2.0,
            exponent: 2.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.rate >= 0.0 && self.exponent > 1.0) {
            return Err(Error::Parameter(format!(
                "polynomial decay needs scale > 0, rate >= 0, exponent > 1 (got {:?})",
                self
            )));
        }
        Ok(())
    }

    pub fn at(&self, lag: usize) -> f64 {
        self.scale * (1.0 + self.rate * lag as f64).powf(-self.exponent)
    }
}

/// σ(0), ..., σ(max_lag) for `σ(τ) = 1.44 (1 + 2τ)^(-2.5)`.
pub fn polynomial_autocovariance(max_lag: usize) -> Vec<f64> {
    let model = PolynomialDecay::paper();
    (0..=max_lag).map(|k| model.at(k)).collect()
}

/// A stationary autocovariance function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AutocovModel {
    White { variance: f64 },
    Arma(ArmaSpec),
    Polynomial(PolynomialDecay),
    /// Explicit σ(0), σ(1), ...; zero beyond the given lags.
    Custom { sigma: Vec<f64> },
}

impl AutocovModel {
    pub fn arma_paper() -> Self {
        AutocovModel::Arma(ArmaSpec::paper())
    }

    pub fn poly_paper() -> Self {
        AutocovModel::Polynomial(PolynomialDecay::paper())
    }

    /// Resolves the built-in aliases `white`, `arma-paper` and `poly-paper`.
    pub fn from_alias(name: &str) -> Option<Self> {
        match name {
            "white" => Some(AutocovModel::White { variance: 1.44 }),
            "arma-paper" | "arma" => Some(Self::arma_paper()),
            "poly-paper" | "poly" | "polynomial" => Some(Self::poly_paper()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AutocovModel::White { variance } => {
                if !(*variance > 0.0 && variance.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "white noise variance must be positive, got {variance}"
                    )));
                }
                Ok(())
            }
            AutocovModel::Arma(spec) => spec.validate(),
            AutocovModel::Polynomial(poly) => poly.validate(),
            AutocovModel::Custom { sigma } => {
                if sigma.is_empty() || sigma[0].is_nan() || sigma[0] <= 0.0 {
                    return Err(Error::Parameter(
                        "custom autocovariance needs sigma[0] > 0".into(),
                    ));
                }
                if sigma.iter().any(|s| !s.is_finite() || s.abs() > sigma[0]) {
                    return Err(Error::Parameter(
                        "custom autocovariance must satisfy |sigma(k)| <= sigma(0)".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// σ(0), ..., σ(max_lag).
    pub fn autocovariance(&self, max_lag: usize) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match self {
            AutocovModel::White { variance } => {
                let mut v = vec![0.0; max_lag + 1];
                v[0] = *variance;
                v
            }
            AutocovModel::Arma(spec) => {
                autocov_from_psi(&spec.psi_weights()?, spec.innov_var, max_lag)
            }
            AutocovModel::Polynomial(poly) => (0..=max_lag).map(|k| poly.at(k)).collect(),
            AutocovModel::Custom { sigma } => (0..=max_lag)
                .map(|k| sigma.get(k).copied().unwrap_or(0.0))
                .collect(),
        })
    }

    pub fn sigma0(&self) -> Result<f64> {
        Ok(self.autocovariance(0)?[0])
    }

    /// Autocovariances up to the lag beyond which every `|σ(τ)|` stays
    /// below the spectral cut-off.
    fn effective_autocovariance(&self) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            AutocovModel::White { .. } => self.autocovariance(0),
            AutocovModel::Custom { sigma } => Ok(sigma.clone()),
            AutocovModel::Polynomial(poly) => {
                let mut last = 0;
                while last < MAX_SPECTRAL_LAG && poly.at(last + 1).abs() >= SPECTRAL_CUTOFF {
                    last += 1;
                }
                self.autocovariance(last)
            }
            AutocovModel::Arma(spec) => {
                // σ(τ) inherits the ψ-weight support, which is already
                // truncated at relative 1e-14.
                let psi = spec.psi_weights()?;
                let full = autocov_from_psi(&psi, spec.innov_var, psi.len());
                let last = full
                    .iter()
                    .rposition(|s| s.abs() >= SPECTRAL_CUTOFF)
                    .unwrap_or(0);
                Ok(full[..=last].to_vec())
            }
        }
    }

    /// Spectral density `f(ω) = σ(0) + 2 Σ_{τ>=1} σ(τ) cos(τω)` at each frequency.
    pub fn spectral_density(&self, omegas: &[f64]) -> Result<Vec<f64>> {
        let sigma = self.effective_autocovariance()?;
        Ok(omegas
            .iter()
            .map(|&w| {
                // Sum smallest terms first.
                let tail: f64 = sigma
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .map(|(k, s)| s * (k as f64 * w).cos())
                    .sum();
                sigma[0] + 2.0 * tail
            })
            .collect())
    }

    /// Toeplitz covariance of `p` consecutive observations.
    pub fn toeplitz(&self, p: usize) -> Result<ToeplitzCovariance> {
        if p == 0 {
            return Err(Error::Parameter("series length must be at least 1".into()));
        }
        toeplitz(&self.autocovariance(p - 1)?)
    }
}

/// Symmetric positive definite Toeplitz matrix `Σ = (σ_{|i-j|})` with its
/// lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct ToeplitzCovariance {
    sigma: Vec<f64>,
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

/// Builds `Σ` from σ(0..p) and checks positive definiteness.
pub fn toeplitz(sigma: &[f64]) -> Result<ToeplitzCovariance> {
    let p = sigma.len();
    if p == 0 {
        return Err(Error::Parameter("autocovariance vector is empty".into()));
    }
    let matrix = DMatrix::from_fn(p, p, |i, j| sigma[i.abs_diff(j)]);
    let chol = Cholesky::new(matrix.clone()).ok_or(Error::NotPositiveDefinite { dim: p })?;
    if chol.l_dirty().diagonal().iter().any(|d| d.is_nan() || *d <= 0.0) {
        return Err(Error::NotPositiveDefinite { dim: p });
    }
    Ok(ToeplitzCovariance {
        sigma: sigma.to_vec(),
        matrix,
        chol,
    })
}

impl ToeplitzCovariance {
    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Draws replication `index` under `seed`: `L z`, `z ~ N(0, I)`.
    pub fn sample_replication(&self, seed: u64, index: u64) -> Vec<f64> {
        let z = standard_normals(seed, index, self.dim());
        let l = self.chol.l_dirty();
        // lower-triangular product; the strict upper part of l_dirty is garbage
        let p = self.dim();
        (0..p)
            .map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum())
            .collect()
    }
}

/// `n` standard normals from ChaCha8 stream `index` of `seed`.
pub fn standard_normals(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Replications `0..n_reps` of a zero-mean Gaussian vector with covariance `cov`.
pub fn sample_gaussian(cov: &ToeplitzCovariance, n_reps: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n_reps as u64)
        .into_par_iter()
        .map(|r| cov.sample_replication(seed, r))
        .collect()
}

/// Simulates `n` observations of an ARMA process by direct recursion after
/// a burn-in long enough for the ψ-weights to have died out.
pub fn simulate_arma(spec: &ArmaSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    let burn_in = spec.psi_weights()?.len().max(100) * 2;
    let total = n + burn_in;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = spec.innov_var.sqrt();
    let p = spec.ar.len();
    let q = spec.ma.len();
    let mut eps_hist = vec![0.0; q];
    let mut x_hist = vec![0.0; p];
    let mut out = Vec::with_capacity(n);
    for t in 0..total {
        let z: f64 = StandardNormal.sample(&mut rng);
        let e = sd * z;
        let mut x = e;
        for (i, phi) in spec.ar.iter().enumerate() {
            x += phi * x_hist[i];
        }
        for (j, theta) in spec.ma.iter().enumerate() {
            x += theta * eps_hist[j];
        }
        if p > 0 {
            x_hist.rotate_right(1);
            x_hist[0] = x;
        }
        if q > 0 {
            eps_hist.rotate_right(1);
            eps_hist[0] = e;
        }
        if t >= burn_in {
            out.push(x);
        }
    }
    Ok(out)
}

/// Sample autocovariance of a known zero-mean series with batch-means
/// standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleAutocov {
    pub values: Vec<f64>,
    pub std_err: Vec<f64>,
}

/// `γ̂(τ) = (1/(n-τ)) Σ x_t x_{t+τ}` for `τ = 0..=max_lag`, with standard
/// errors from `batches` contiguous batches.
pub fn sample_autocovariance(x: &[f64], max_lag: usize, batches: usize) -> Result<SampleAutocov> {
    if batches < 2 || x.len() < batches * (max_lag + 2) {
        return Err(Error::Precondition(format!(
            "series of length {} too short for {} batches at max lag {}",
            x.len(),
            batches,
            max_lag
        )));
    }
    let lagged = |s: &[f64], lag: usize| -> f64 {
        let n = s.len() - lag;
        s[..n].iter().zip(&s[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
    };
    let values: Vec<f64> = (0..=max_lag).map(|k| lagged(x, k)).collect();
    let len = x.len() / batches;
    let per_batch: Vec<Vec<f64>> = (0..batches)
        .map(|b| {
            let s = &x[b * len..(b + 1) * len];
            (0..=max_lag).map(|k| lagged(s, k)).collect()
        })
        .collect();
    let std_err = (0..=max_lag)
        .map(|k| {
            let mean = per_batch.iter().map(|v| v[k]).sum::<f64>() / batches as f64;
            let var = per_batch.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>()
                / (batches - 1) as f64;
            (var / batches as f64).sqrt()
        })
        .collect();
    Ok(SampleAutocov { values, std_err })
}

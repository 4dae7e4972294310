//! Spectral density and covariance estimation from the log-average
//! periodogram.
//!
//! The debiased log-averages `z_j` are treated as noisy observations of
//! `log f` at the bin centers and smoothed with a natural cubic smoothing
//! spline, with the smoothing parameter chosen by generalized
//! cross-validation. In the decorrelated variant the fit is weighted by the
//! inverse of the (normalized) log-average covariance matrix, i.e. it is a
//! generalized least squares fit.

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covkernel::{logavg_covariance, spectral_covariance, SpectralCovariance};
use crate::error::{Error, Result};
use crate::models::{toeplitz, AutocovModel};
use crate::specfun::digamma;
use crate::transform::{frequency_grid, log_average_periodogram, BinPartition, Dct1, SpectralComponents};

/// Where the covariance used for decorrelation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PilotMode {
    /// Fit once without weights, build a Toeplitz covariance from that
    /// estimate and refit with the implied weights.
    #[default]
    TwoStage,
    /// Use the true covariance (requires a known model).
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub partition: BinPartition,
    pub decorrelate: bool,
    #[serde(default)]
    pub pilot: PilotMode,
    pub lambda_grid: Vec<f64>,
}

impl EstimatorConfig {
    pub fn new(partition: BinPartition) -> Self {
        EstimatorConfig {
            partition,
            decorrelate: false,
            pilot: PilotMode::TwoStage,
            lambda_grid: default_lambda_grid(),
        }
    }

    pub fn decorrelated(mut self, on: bool) -> Self {
        self.decorrelate = on;
        self
    }

    pub fn with_pilot(mut self, pilot: PilotMode) -> Self {
        self.pilot = pilot;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.lambda_grid;
        if g.is_empty() {
            return Err(Error::Parameter("lambda grid is empty".into()));
        }
        if g.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::Parameter("lambda grid values must be positive".into()));
        }
        if g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("lambda grid must be strictly increasing".into()));
        }
        if self.partition.bins() < 3 {
            return Err(Error::Precondition(format!(
                "a smoothing spline needs at least 3 bins, got {}",
                self.partition.bins()
            )));
        }
        Ok(())
    }
}

/// 40 log-spaced values from 1e-6 to 1e4.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1e-6, 1e4, 40)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub l_inf: f64,
    pub l_2: f64,
    pub spectral_norm: f64,
}

#[derive(Debug, Clone)]
pub struct DensityEstimate {
    /// Estimated density on `π i / (p-1)`, `i = 0..p`.
    pub f_hat: Vec<f64>,
    /// `D diag(f_hat) D`.
    pub sigma_hat: DMatrix<f64>,
    pub lambda: f64,
    pub gcv: f64,
    /// Set when the decorrelation covariance was unusable and identity
    /// weights were used instead.
    pub fell_back_to_identity: bool,
    pub errors: Option<ErrorMetrics>,
}

/// `Y*_j - (ψ(m_j/2) - log(m_j/2))`, with `m_j` the member count of bin `j`.
pub fn debiased_logavg(components: &SpectralComponents) -> Result<Vec<f64>> {
    let part = components.partition();
    let raw = log_average_periodogram(components)?;
    raw.iter()
        .enumerate()
        .map(|(j, y)| Ok(y - log_bias(part.bin_len(j))?))
        .collect()
}

/// `E[log(χ²_m / m)] = ψ(m/2) - log(m/2)`.
pub fn log_bias(m: usize) -> Result<f64> {
    let h = m as f64 / 2.0;
    Ok(digamma(h)? - h.ln())
}

/// Natural cubic smoothing spline on fixed knots (Reinsch form).
#[derive(Debug, Clone)]
pub struct SmoothingSpline {
    knots: Vec<f64>,
    h: Vec<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    penalty: DMatrix<f64>,
}

/// A fitted spline: values and second derivatives at the knots.
#[derive(Debug, Clone)]
pub struct SplineFit {
    pub lambda: f64,
    pub gcv: f64,
    pub values: Vec<f64>,
    second: Vec<f64>,
}

impl SmoothingSpline {
    pub fn new(knots: &[f64]) -> Result<Self> {
        let n = knots.len();
        if n < 3 {
            return Err(Error::Precondition(format!(
                "a smoothing spline needs at least 3 knots, got {n}"
            )));
        }
        if knots.windows(2).any(|w| w[1].is_nan() || w[1] <= w[0]) {
            return Err(Error::Parameter("knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let mut q = DMatrix::zeros(n, n - 2);
        let mut r = DMatrix::zeros(n - 2, n - 2);
        for k in 0..n - 2 {
            q[(k, k)] = 1.0 / h[k];
            q[(k + 1, k)] = -1.0 / h[k] - 1.0 / h[k + 1];
            q[(k + 2, k)] = 1.0 / h[k + 1];
            r[(k, k)] = (h[k] + h[k + 1]) / 3.0;
            if k + 1 < n - 2 {
                r[(k, k + 1)] = h[k + 1] / 6.0;
                r[(k + 1, k)] = h[k + 1] / 6.0;
            }
        }
        let rinv_qt = Cholesky::new(r.clone())
            .ok_or(Error::NotPositiveDefinite { dim: n - 2 })?
            .solve(&q.transpose());
        let mut penalty = &q * rinv_qt;
        crate::transform::symmetrize(&mut penalty);
        Ok(SmoothingSpline {
            knots: knots.to_vec(),
            h,
            q,
            r,
            penalty,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// The roughness penalty matrix `K = Q R^{-1} Q'`, so that
    /// `g' K g = ∫ g''(x)^2 dx` for the natural spline through `g`.
    pub fn penalty(&self) -> &DMatrix<f64> {
        &self.penalty
    }

    /// Minimizes `(z - g)' W (z - g) + λ g' K g` for one `λ`.
    pub fn fit(&self, z: &[f64], weights: &DMatrix<f64>, lambda: f64) -> Result<SplineFit> {
        let n = self.knots.len();
        if z.len() != n || weights.nrows() != n || weights.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: z.len(),
            });
        }
        let a = weights + &self.penalty * lambda;
        let chol = Cholesky::new(a).ok_or(Error::NotPositiveDefinite { dim: n })?;
        let zv = DVector::from_column_slice(z);
        let g = chol.solve(&(weights * &zv));
        let trace_h = chol.solve(weights).trace();
        let resid = &zv - &g;
        let rss = resid.dot(&(weights * &resid));
        let dof_left = n as f64 - trace_h;
        let gcv = if dof_left > 1e-10 {
            n as f64 * rss / (dof_left * dof_left)
        } else {
            f64::INFINITY
        };
        let second = self.second_derivatives(g.as_slice())?;
        Ok(SplineFit {
            lambda,
            gcv,
            values: g.as_slice().to_vec(),
            second,
        })
    }

    /// Fits every `λ` in the grid and keeps the smallest GCV score (the
    /// first one on ties).
    pub fn fit_gcv(&self, z: &[f64], weights: &DMatrix<f64>, grid: &[f64]) -> Result<SplineFit> {
        let mut best: Option<SplineFit> = None;
        for &lambda in grid {
            let fit = self.fit(z, weights, lambda)?;
            if best.as_ref().is_none_or(|b| fit.gcv < b.gcv) {
                best = Some(fit);
            }
        }
        best.ok_or_else(|| Error::Parameter("lambda grid is empty".into()))
    }

    /// Second derivatives at the knots, zero at both ends.
    fn second_derivatives(&self, g: &[f64]) -> Result<Vec<f64>> {
        let qtg = self.q.transpose() * DVector::from_column_slice(g);
        let inner = Cholesky::new(self.r.clone())
            .ok_or(Error::NotPositiveDefinite { dim: self.r.nrows() })?
            .solve(&qtg);
        let mut out = vec![0.0];
        out.extend(inner.iter());
        out.push(0.0);
        Ok(out)
    }

    /// Evaluates a fit at `x`, linearly beyond the end knots.
    pub fn eval(&self, fit: &SplineFit, x: f64) -> f64 {
        let (t, g, gam, h) = (&self.knots, &fit.values, &fit.second, &self.h);
        let n = t.len();
        if x <= t[0] {
            let slope = (g[1] - g[0]) / h[0] - h[0] * gam[1] / 6.0;
            return g[0] + slope * (x - t[0]);
        }
        if x >= t[n - 1] {
            let slope = (g[n - 1] - g[n - 2]) / h[n - 2] + h[n - 2] * gam[n - 2] / 6.0;
            return g[n - 1] + slope * (x - t[n - 1]);
        }
        let i = t.partition_point(|&k| k <= x).saturating_sub(1).min(n - 2);
        let (a, b) = (x - t[i], t[i + 1] - x);
        (a * g[i + 1] + b * g[i]) / h[i]
            - a * b / 6.0 * ((1.0 + a / h[i]) * gam[i + 1] + (1.0 + b / h[i]) * gam[i])
    }
}

/// Toeplitz autocovariance implied by a density sampled on the DCT grid:
/// `σ(τ) = (1/(p-1)) Σ_i w_i f_i cos(τ ω_i)` with trapezoid weights.
pub fn autocovariance_from_density(f: &[f64]) -> Vec<f64> {
    let p = f.len();
    let omegas = frequency_grid(p);
    (0..p)
        .map(|lag| {
            let s: f64 = f
                .iter()
                .zip(&omegas)
                .enumerate()
                .map(|(i, (fi, w))| {
                    let wt = if i == 0 || i == p - 1 { 0.5 } else { 1.0 };
                    wt * fi * (lag as f64 * w).cos()
                })
                .sum();
            s / (p - 1) as f64
        })
        .collect()
}

/// Weight matrix for a generalized least squares fit: the inverse of `c`
/// after scaling it to unit mean diagonal, so that `c` and `s c` give the
/// same weights. `None` if `c` is not positive definite.
pub fn weights_from_covariance(c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let scale = c.diagonal().mean();
    if !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    let chol = Cholesky::new(c / scale)?;
    let mut w = chol.inverse();
    crate::transform::symmetrize(&mut w);
    Some(w)
}

fn decorrelation_weights(sc: &SpectralCovariance, bins: usize) -> Option<DMatrix<f64>> {
    let c = logavg_covariance(sc).ok()?;
    if c.bins() != bins {
        return None;
    }
    weights_from_covariance(c.matrix())
}

fn pilot_spectral_covariance(
    f_hat: &[f64],
    partition: BinPartition,
) -> Option<SpectralCovariance> {
    let cov = toeplitz(&autocovariance_from_density(f_hat)).ok()?;
    spectral_covariance(&cov, partition).ok()
}

/// Bin centers: mean frequency of each bin's members.
pub fn bin_centers(partition: &BinPartition) -> Vec<f64> {
    (0..partition.bins()).map(|j| partition.bin_center(j)).collect()
}

/// Smoothed estimate of the spectral density and of `Σ`.
pub fn fit_spectral_density(
    y: &[f64],
    cfg: &EstimatorConfig,
    truth: Option<&AutocovModel>,
) -> Result<DensityEstimate> {
    let dct = Dct1::new(y.len())?;
    fit_with_dct(&dct, y, cfg, truth)
}

fn fit_with_dct(
    dct: &Dct1,
    y: &[f64],
    cfg: &EstimatorConfig,
    truth: Option<&AutocovModel>,
) -> Result<DensityEstimate> {
    cfg.validate()?;
    let part = cfg.partition;
    if part.p() < 2 * part.m() {
        return Err(Error::Precondition(format!(
            "need p >= 2m, got p = {}, m = {}",
            part.p(),
            part.m()
        )));
    }
    let z = debiased_logavg(&dct.spectral_components(y, part)?)?;
    let t = z.len();
    let spline = SmoothingSpline::new(&bin_centers(&part))?;
    let identity = DMatrix::identity(t, t);
    let omegas = frequency_grid(part.p());

    let plain = spline.fit_gcv(&z, &identity, &cfg.lambda_grid)?;
    let (fit, fell_back) = if cfg.decorrelate {
        let sc = match cfg.pilot {
            PilotMode::TwoStage => {
                let f0: Vec<f64> = omegas.iter().map(|w| spline.eval(&plain, *w).exp()).collect();
                pilot_spectral_covariance(&f0, part)
            }
            PilotMode::Oracle => {
                let model = truth.ok_or_else(|| {
                    Error::Precondition("oracle pilot needs the true model".into())
                })?;
                Some(spectral_covariance(&model.toeplitz(part.p())?, part)?)
            }
        };
        match sc.and_then(|sc| decorrelation_weights(&sc, t)) {
            Some(w) => (spline.fit_gcv(&z, &w, &cfg.lambda_grid)?, false),
            None => (plain, true),
        }
    } else {
        (plain, false)
    };

    let f_hat: Vec<f64> = omegas.iter().map(|w| spline.eval(&fit, *w).exp()).collect();
    let sigma_hat = dct.congruence_diag(&f_hat);
    let mut est = DensityEstimate {
        f_hat,
        sigma_hat,
        lambda: fit.lambda,
        gcv: fit.gcv,
        fell_back_to_identity: fell_back,
        errors: None,
    };
    if let Some(model) = truth {
        est.errors = Some(error_metrics(&est.f_hat, &est.sigma_hat, model)?);
    }
    Ok(est)
}

/// The raw periodogram `Y_i^2` used directly as the density estimate.
pub fn raw_estimate(y: &[f64], truth: Option<&AutocovModel>) -> Result<DensityEstimate> {
    let dct = Dct1::new(y.len())?;
    raw_with_dct(&dct, y, truth)
}

fn raw_with_dct(dct: &Dct1, y: &[f64], truth: Option<&AutocovModel>) -> Result<DensityEstimate> {
    let f_hat: Vec<f64> = dct.apply(y)?.iter().map(|v| v * v).collect();
    let sigma_hat = dct.congruence_diag(&f_hat);
    let errors = truth
        .map(|m| error_metrics(&f_hat, &sigma_hat, m))
        .transpose()?;
    Ok(DensityEstimate {
        f_hat,
        sigma_hat,
        lambda: 0.0,
        gcv: f64::NAN,
        fell_back_to_identity: false,
        errors,
    })
}

/// Sup and L2 distance of `f_hat` to the true density on the grid, and the
/// spectral norm of `sigma_hat - Σ`.
pub fn error_metrics(
    f_hat: &[f64],
    sigma_hat: &DMatrix<f64>,
    truth: &AutocovModel,
) -> Result<ErrorMetrics> {
    let p = f_hat.len();
    if sigma_hat.nrows() != p || sigma_hat.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: sigma_hat.nrows(),
        });
    }
    let f = truth.spectral_density(&frequency_grid(p))?;
    let diffs: Vec<f64> = f_hat.iter().zip(&f).map(|(a, b)| a - b).collect();
    let l_inf = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let l_2 = (diffs.iter().map(|d| d * d).sum::<f64>() / p as f64 * std::f64::consts::PI).sqrt();
    let sigma = truth.toeplitz(p)?;
    let spectral_norm = spectral_norm(&(sigma_hat - sigma.matrix()));
    Ok(ErrorMetrics {
        l_inf,
        l_2,
        spectral_norm,
    })
}

/// Largest singular value by power iteration on `A'A`, stopping when the
/// estimate changes by less than `1e-8` relative.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    if n == 0 || a.amax() == 0.0 {
        return 0.0;
    }
    let ata = a.transpose() * a;
    // fixed, non-symmetric start vector
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v.normalize_mut();
    let mut est = 0.0;
    for _ in 0..100_000 {
        let w = &ata * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        v = w / norm;
        if (next - est).abs() <= 1e-8 * next {
            return next;
        }
        est = next;
    }
    est
}

/// Which estimate a study row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Raw,
    SmoothedPlain,
    SmoothedDecorrelated,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Raw, Method::SmoothedPlain, Method::SmoothedDecorrelated];

    pub fn name(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::SmoothedPlain => "smoothed-plain",
            Method::SmoothedDecorrelated => "smoothed-decorrelated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub partition: BinPartition,
    pub n_reps: usize,
    /// Replication `r` (0-based) is drawn with seed `first_seed + r`.
    pub first_seed: u64,
    /// Pilot for the decorrelated variant; `None` skips that variant.
    pub decorrelate: Option<PilotMode>,
    pub lambda_grid: Vec<f64>,
}

impl StudyConfig {
    /// `p = 60`, `T = 12`, 300 replications with seeds 1..=300.
    pub fn standard() -> Self {
        StudyConfig {
            partition: BinPartition::new(60, 5).expect("valid partition"),
            n_reps: 300,
            first_seed: 1,
            decorrelate: Some(PilotMode::TwoStage),
            lambda_grid: default_lambda_grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub replication: usize,
    pub method: Method,
    pub l_inf: f64,
    pub l_2: f64,
    pub spectral_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub method: Method,
    pub l_inf: f64,
    pub l_2: f64,
    pub spectral_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
    pub summary: Vec<StudySummary>,
    /// Replications where the decorrelated fit fell back to identity weights.
    pub fallbacks: usize,
}

impl StudyResult {
    pub fn mean(&self, method: Method) -> Option<StudySummary> {
        self.summary.iter().copied().find(|s| s.method == method)
    }
}

/// Simulates `n_reps` series from `model` and records the errors of the raw
/// periodogram and of the plain and decorrelated smoothed estimates.
pub fn run_study(model: &AutocovModel, cfg: &StudyConfig) -> Result<StudyResult> {
    let part = cfg.partition;
    let cov = model.toeplitz(part.p())?;
    let dct = Dct1::new(part.p())?;
    let plain_cfg = EstimatorConfig {
        partition: part,
        decorrelate: false,
        pilot: PilotMode::TwoStage,
        lambda_grid: cfg.lambda_grid.clone(),
    };
    plain_cfg.validate()?;
    let dec_cfg = cfg.decorrelate.map(|pilot| EstimatorConfig {
        decorrelate: true,
        pilot,
        ..plain_cfg.clone()
    });
    let methods: &[Method] = if dec_cfg.is_some() {
        &Method::ALL
    } else {
        &Method::ALL[..2]
    };
    let per_rep: Vec<(Vec<StudyRow>, bool)> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|r| {
            let y = cov.sample_replication(cfg.first_seed.wrapping_add(r as u64), 0);
            let mut ests = vec![
                (Method::Raw, raw_with_dct(&dct, &y, Some(model))?),
                (Method::SmoothedPlain, fit_with_dct(&dct, &y, &plain_cfg, Some(model))?),
            ];
            if let Some(dc) = &dec_cfg {
                ests.push((Method::SmoothedDecorrelated, fit_with_dct(&dct, &y, dc, Some(model))?));
            }
            let fell_back = ests.iter().any(|(_, e)| e.fell_back_to_identity);
            let rows = ests
                .iter()
                .map(|(method, est)| {
                    let e = est.errors.expect("truth supplied");
                    StudyRow {
                        replication: r,
                        method: *method,
                        l_inf: e.l_inf,
                        l_2: e.l_2,
                        spectral_norm: e.spectral_norm,
                    }
                })
                .collect();
            Ok((rows, fell_back))
        })
        .collect::<Result<_>>()?;
    let fallbacks = per_rep.iter().filter(|(_, f)| *f).count();
    let rows: Vec<StudyRow> = per_rep.into_iter().flat_map(|(r, _)| r).collect();
    let summary = methods
        .iter()
        .map(|&method| {
            let sel: Vec<&StudyRow> = rows.iter().filter(|r| r.method == method).collect();
            let n = sel.len().max(1) as f64;
            StudySummary {
                method,
                l_inf: sel.iter().map(|r| r.l_inf).sum::<f64>() / n,
                l_2: sel.iter().map(|r| r.l_2).sum::<f64>() / n,
                spectral_norm: sel.iter().map(|r| r.spectral_norm).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(StudyResult {
        rows,
        summary,
        fallbacks,
    })
}

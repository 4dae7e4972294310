//! Real moments of a scaled non-central chi-squared variable.

use crate::error::{Error, Result};
use crate::specfun::{hyp1f1, ln_gamma, SeriesControl};

/// `E[X^mu]` for `X = |z|^2`, `z ~ N(κ, scale I_m)`:
///
/// ```text
/// E[X^mu] = 2^mu scale^mu Γ(mu + m/2) / Γ(m/2) 1F1(-mu; m/2; -κ̄ / (2 scale)),
/// ```
///
/// where `κ̄ = noncentrality` is the squared norm of the mean. Valid for
/// `mu > -m/2`.
pub fn noncentral_chisq_moment(mu: f64, m: usize, noncentrality: f64, scale: f64) -> Result<f64> {
    let v = ln_noncentral_chisq_moment(mu, m, noncentrality, scale)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!(
            "moment of order {mu} overflows; use ln_noncentral_chisq_moment"
        )))
    }
}

/// Natural log of [`noncentral_chisq_moment`].
pub fn ln_noncentral_chisq_moment(
    mu: f64,
    m: usize,
    noncentrality: f64,
    scale: f64,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("degrees of freedom must be at least 1".into()));
    }
    if !(noncentrality >= 0.0 && noncentrality.is_finite()) {
        return Err(Error::Domain(format!(
            "noncentrality must be finite and nonnegative, got {noncentrality}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive, got {scale}")));
    }
    let half_m = m as f64 / 2.0;
    if !mu.is_finite() || mu <= -half_m {
        return Err(Error::Domain(format!(
            "moment order must exceed -m/2 = {}, got {mu}",
            -half_m
        )));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let ln_prefactor = mu * (2.0 * scale).ln() + ln_gamma(mu + half_m)? - ln_gamma(half_m)?;
    let z = noncentrality / (2.0 * scale);
    // 1F1(-mu; m/2; -z) = e^{-z} 1F1(m/2 + mu; m/2; z), a series of positive terms
    let series = hyp1f1(half_m + mu, half_m, z, &SeriesControl::default())?;
    Ok(ln_prefactor - z + series.ln())
}

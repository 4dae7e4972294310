//! Scalar special functions.
//!
//! Gamma-family functions (log-gamma, digamma, trigamma), the Pochhammer
//! symbol, and the hypergeometric series `1F1` and `2F1` on the real
//! domains the log-periodogram covariance needs. The covariance kernel
//! `sum_{n>=1} n! tau^n / ((m/2)_n n^2)` lives here as well, since it is
//! a scaled `3F2(1,1,1; 2, m/2+1; tau)`.
//!
//! All functions are pure; they can be called from any thread.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation policy for infinite series.
///
/// A series is considered converged once three consecutive terms are
/// smaller than `rel_tol` times the running sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        let ctrl = SeriesControl { rel_tol, max_terms };
        ctrl.validate()?;
        Ok(ctrl)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Parameter(format!(
                "rel_tol must be positive and finite, got {}",
                self.rel_tol
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::Parameter("max_terms must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tol: 1e-14,
            max_terms: 10_000,
        }
    }
}

/// Number of consecutive negligible terms required before a series stops.
const STOP_RUN: usize = 3;

/// Rising factorial `(a)_n = a (a+1) ... (a+n-1)`; `(a)_0 = 1`.
///
/// Overflows to infinity for large `n`; see [`ln_pochhammer`].
pub fn pochhammer(a: f64, n: u32) -> f64 {
    let mut prod = 1.0;
    for i in 0..n {
        prod *= a + f64::from(i);
    }
    prod
}

/// `ln (a)_n` for `a > 0`, computed as `ln Γ(a+n) - ln Γ(a)`.
pub fn ln_pochhammer(a: f64, n: u32) -> Result<f64> {
    if a <= 0.0 || a.is_nan() {
        return Err(Error::Domain(format!(
            "ln_pochhammer requires a > 0, got {a}"
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    Ok(ln_gamma(a + f64::from(n))? - ln_gamma(a)?)
}

// Lanczos approximation, g = 10.900511 (Pugh, 2004).
const LANCZOS_G: f64 = 10.900511;
const LANCZOS_COEF: [f64; 11] = [
    2.485_740_891_387_535_5e-5,
    1.051_423_785_817_219_7,
    -3.456_870_972_220_162_5,
    4.512_277_094_668_948,
    -2.982_852_253_235_766_4,
    1.056_397_115_771_267,
    -1.954_287_731_916_458_7e-1,
    1.709_705_434_044_412e-2,
    -5.719_261_174_043_057e-4,
    4.633_994_733_599_057e-6,
    -2.719_949_084_886_077_2e-9,
];
/// `ln(2 sqrt(e / pi))`
const LN_2_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;

fn lanczos_sum(x: f64) -> f64 {
    LANCZOS_COEF
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_COEF[0], |s, (k, c)| s + c / (x + k as f64 - 1.0))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 || x.is_infinite() {
        return Err(Error::Domain(format!(
            "ln_gamma requires finite x > 0, got {x}"
        )));
    }
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        let y = 1.0 - x;
        return Ok(PI.ln() - (PI * x).sin().ln() - ln_gamma(y)?);
    }
    Ok(lanczos_sum(x).ln()
        + LN_2_SQRT_E_OVER_PI
        + (x - 0.5) * ((x - 0.5 + LANCZOS_G) / std::f64::consts::E).ln())
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// `1 / Γ(x)` for any real `x`; zero at the poles `0, -1, -2, ...`.
pub fn recip_gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x < 0.5 {
        // 1/Γ(x) = sin(pi x) Γ(1-x) / pi
        let lg = ln_gamma(1.0 - x).expect("1 - x > 0.5");
        return (PI * x).sin() * lg.exp() / PI;
    }
    (-ln_gamma(x).expect("x >= 0.5")).exp()
}

/// Digamma `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 || x.is_infinite() {
        return Err(Error::Domain(format!(
            "digamma requires finite x > 0, got {x}"
        )));
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    // B_{2k} / (2k) for k = 1..7
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    ];
    let mut series = 0.0;
    for c in C.iter().rev() {
        series = series * inv2 + c;
    }
    Ok(acc + y.ln() - 0.5 / y - series * inv2)
}

/// Trigamma `ψ'(x) = d²/dx² ln Γ(x)` for `x > 0`.
///
/// Upward recurrence `ψ'(x) = ψ'(x+1) + 1/x²` into `x >= 10`, then the
/// asymptotic expansion in Bernoulli numbers.
pub fn trigamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 || x.is_infinite() {
        return Err(Error::Domain(format!(
            "trigamma requires finite x > 0, got {x}"
        )));
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc += 1.0 / (y * y);
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // B_{2k} for k = 1..7
    const B: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let mut series = 0.0;
    for b in B.iter().rev() {
        series = series * inv2 + b;
    }
    // 1/y + 1/(2y²) + sum_k B_{2k} / y^{2k+1}
    Ok(acc + inv + 0.5 * inv2 + series * inv2 * inv)
}

/// Sums `sum_{n>=0} t_n` with `t_0 = 1` and `t_{n+1} = next(n, t_n)`.
fn sum_series(ctrl: &SeriesControl, mut next: impl FnMut(usize, f64) -> f64) -> Result<f64> {
    ctrl.validate()?;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut run = 0;
    for n in 0..ctrl.max_terms {
        term = next(n, term);
        sum += term;
        if !sum.is_finite() {
            return Err(Error::NonConvergence { terms: n + 1 });
        }
        if term.abs() < ctrl.rel_tol * sum.abs() {
            run += 1;
            if run >= STOP_RUN {
                return Ok(sum);
            }
        } else {
            run = 0;
        }
    }
    Err(Error::NonConvergence {
        terms: ctrl.max_terms,
    })
}

/// Terminating series: exactly `n_terms + 1` terms, no truncation test.
fn sum_polynomial(n_terms: usize, mut next: impl FnMut(usize, f64) -> f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..n_terms {
        term = next(n, term);
        sum += term;
    }
    sum
}

fn check_denominator(c: f64) -> Result<()> {
    if c.is_nan() || is_nonpositive_integer(c) {
        return Err(Error::Parameter(format!(
            "denominator parameter must not be 0 or a negative integer, got {c}"
        )));
    }
    Ok(())
}

/// Kummer's confluent hypergeometric series `1F1(b; c; z)`.
///
/// Negative arguments go through `1F1(b; c; z) = e^z 1F1(c-b; c; -z)` so
/// the summed series has no sign changes once `c - b > 0`.
pub fn hyp1f1(b: f64, c: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    check_denominator(c)?;
    if !z.is_finite() || b.is_nan() {
        return Err(Error::Domain(format!("hyp1f1 needs finite arguments, got z = {z}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let ratio = |b: f64, z: f64| move |n: usize, t: f64| {
        let n = n as f64;
        t * (b + n) / (c + n) * z / (n + 1.0)
    };
    if is_nonpositive_integer(b) {
        return Ok(sum_polynomial((-b) as usize, ratio(b, z)));
    }
    if z < 0.0 {
        return Ok(z.exp() * hyp1f1(c - b, c, -z, ctrl)?);
    }
    sum_series(ctrl, ratio(b, z))
}

/// Gauss hypergeometric series `2F1(a, b; c; z)` for real `z <= 1`.
///
/// - `0 < z < 1`: direct summation.
/// - `z < 0`: `(1-z)^{-b} 2F1(c-a, b; c; z/(z-1))`, which maps into `(0, 1)`.
/// - `z = 1`: Gauss' summation theorem, requires `c - a - b > 0`.
/// - `a` or `b` a non-positive integer: exact polynomial for any `z`.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    check_denominator(c)?;
    if z.is_nan() || a.is_nan() || b.is_nan() {
        return Err(Error::Domain("hyp2f1 received NaN".into()));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let ratio = move |n: usize, t: f64| {
        let n = n as f64;
        t * (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
    };
    let terminating = [a, b]
        .into_iter()
        .filter(|&x| is_nonpositive_integer(x))
        .map(|x| (-x) as usize)
        .min();
    if let Some(n) = terminating {
        if !z.is_finite() {
            return Err(Error::Domain("hyp2f1 needs finite z".into()));
        }
        return Ok(sum_polynomial(n, ratio));
    }
    if z > 1.0 || z == f64::NEG_INFINITY {
        return Err(Error::Domain(format!(
            "hyp2f1 is only implemented for z <= 1, got {z}"
        )));
    }
    if z == 1.0 {
        if c - a - b <= 0.0 {
            return Err(Error::Domain(format!(
                "hyp2f1 at z = 1 diverges unless c - a - b > 0 (got {})",
                c - a - b
            )));
        }
        return gauss_sum(a, b, c);
    }
    if z < 0.0 {
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-b) * hyp2f1(c - a, b, c, w, ctrl)?);
    }
    sum_series(ctrl, ratio)
}

/// `2F1(a, b; c; 1) = Γ(c) Γ(c-a-b) / (Γ(c-a) Γ(c-b))`.
fn gauss_sum(a: f64, b: f64, c: f64) -> Result<f64> {
    let den = recip_gamma(c - a) * recip_gamma(c - b);
    if den == 0.0 {
        return Ok(0.0);
    }
    let num = 1.0 / (recip_gamma(c) * recip_gamma(c - a - b));
    Ok(num * den)
}

/// Covariance kernel of the log-average periodogram,
/// `sum_{n>=1} n! tau^n / ((m/2)_n n^2) = (2 tau / m) 3F2(1,1,1; 2, m/2+1; tau)`.
///
/// At `tau = 1` the series equals `ψ'(m/2)` and that value is returned
/// directly. Otherwise the terms are positive with ratios bounded by `tau`,
/// so summation stops once the geometric tail bound `t_n tau / (1 - tau)`
/// drops below `rel_tol` times the partial sum.
pub fn logavg_cov_kernel(tau: f64, m: usize, ctrl: &SeriesControl) -> Result<f64> {
    ctrl.validate()?;
    if m == 0 {
        return Err(Error::Domain("bin size m must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("tau must lie in [0, 1], got {tau}")));
    }
    let half_m = m as f64 / 2.0;
    if tau == 1.0 {
        return trigamma(half_m);
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let tail_factor = tau / (1.0 - tau);
    // a = n! / (m/2)_n, p = tau^n
    let mut a = 1.0;
    let mut pow = 1.0;
    let mut sum = 0.0;
    for n in 1..=ctrl.max_terms {
        let nf = n as f64;
        a *= nf / (half_m + nf - 1.0);
        pow *= tau;
        let term = a * pow / (nf * nf);
        sum += term;
        if term * tail_factor < ctrl.rel_tol * sum {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        terms: ctrl.max_terms,
    })
}

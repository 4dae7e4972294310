//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded
/// 7-point Gauss rule.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth == 0 || (b - a).abs() < 1e-15 * a.abs().max(1.0) {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]` to roughly
/// `rel_tol` relative accuracy.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let coarse: f64 = (0..16)
        .map(|k| {
            let lo = a + (b - a) * k as f64 / 16.0;
            let hi = a + (b - a) * (k + 1) as f64 / 16.0;
            gk15(&f, lo, hi).0.abs()
        })
        .sum();
    let tol = rel_tol * coarse.max(f64::MIN_POSITIVE);
    adapt(&f, a, b, tol, 50)
}

/// Dilogarithm on `[0, 1]`.
pub fn dilog(x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x));
    if x == 1.0 {
        return PI * PI / 6.0;
    }
    if x <= 0.5 {
        let mut sum = 0.0;
        let mut pow = x;
        for k in 1..200 {
            let t = pow / (k * k) as f64;
            sum += t;
            if t < 1e-18 * sum {
                break;
            }
            pow *= x;
        }
        return sum;
    }
    PI * PI / 6.0 - x.ln() * (1.0 - x).ln() - dilog(1.0 - x)
}

/// `Σ_{n>=1} n! / ((m/2)_n n^2)` without reference to polygamma functions.
pub fn kernel_at_one(m: usize) -> f64 {
    match m {
        // Σ 4^n (n!)^2 / ((2n)! n^2) = 2 arcsin(1)^2
        1 => 2.0 * (PI / 2.0).powi(2),
        2 => PI * PI / 6.0,
        _ => {
            // n!/(a)_n = (a-1) ∫ t^n (1-t)^{a-2} dt, Σ t^n/n^2 = Li2(t),
            // then u = (1-t)^{a-1}.
            let e = 1.0 / (m as f64 / 2.0 - 1.0);
            integrate(|u| dilog(1.0 - u.powf(e)), 0.0, 1.0, 1e-14)
        }
    }
}

/// `log 0F1(; b; y)` for `y >= 0` by direct summation.
fn ln_hyp0f1(b: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    // Sum relative to the largest term to stay in range.
    let mut logs = vec![0.0];
    let (mut lt, mut mx, mut n) = (0.0f64, 0.0f64, 0.0);
    loop {
        lt += y.ln() - (b + n).ln() - (n + 1.0).ln();
        n += 1.0;
        logs.push(lt);
        mx = mx.max(lt);
        if n > 2.0 * y.sqrt() + 50.0 && lt < mx - 50.0 {
            break;
        }
    }
    mx + logs.iter().map(|l| (l - mx).exp()).sum::<f64>().ln()
}

/// `E[X^mu]`, `X = |z|^2`, `z ~ N(κ, scale I_m)`, `|κ|^2 = noncentrality`,
/// by quadrature against the non-central chi-squared density
/// `∝ x^{m/2-1} e^{-x/2} 0F1(; m/2; ν x / 4)` with `ν = noncentrality / scale`.
/// The normalizing constant is also obtained by quadrature.
pub fn ncx2_moment_quadrature(mu: f64, m: usize, noncentrality: f64, scale: f64) -> f64 {
    let b = m as f64 / 2.0;
    let nu = noncentrality / scale;
    let h = |x: f64| (-0.5 * x + ln_hyp0f1(b, 0.25 * nu * x)).exp();
    // ∫_0^∞ x^{a-1} h(x) dx
    let mellin = |a: f64| {
        let x0 = 1.0;
        // x = u^{1/a} removes the algebraic singularity at 0
        let head = integrate(|u: f64| h(u.powf(1.0 / a)), 0.0, 1.0, 1e-13) / a;
        let g = |x: f64| ((a - 1.0) * x.ln()).exp() * h(x);
        let mut hi = 2.0 * (m as f64 + nu + a.abs()) + 40.0;
        let peak = (0..200)
            .map(|k| g(x0 + k as f64 * hi / 200.0))
            .fold(0.0f64, f64::max);
        while g(hi) > 1e-24 * peak {
            hi *= 1.5;
        }
        head + integrate(g, x0, hi, 1e-13)
    };
    scale.powf(mu) * mellin(mu + b) / mellin(b)
}

/// Raw moments `E[X^n]`, `n = 0..=k`, of a non-central chi-squared variable
/// from its cumulants `κ_r = 2^{r-1} (r-1)! (m + r ν)`.
pub fn ncx2_integer_moments(k: usize, m: f64, nu: f64) -> Vec<f64> {
    let mut fact = vec![1.0f64; k + 1];
    for i in 1..=k {
        fact[i] = fact[i - 1] * i as f64;
    }
    let cum = |r: usize| 2f64.powi(r as i32 - 1) * fact[r - 1] * (m + r as f64 * nu);
    let binom = |n: usize, j: usize| fact[n] / (fact[j] * fact[n - j]);
    let mut mom = vec![1.0];
    for n in 1..=k {
        let v = (0..n).map(|j| binom(n - 1, j) * cum(n - j) * mom[j]).sum();
        mom.push(v);
    }
    mom
}

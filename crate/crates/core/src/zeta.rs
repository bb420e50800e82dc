//! Euler–Maclaurin evaluation of `ζ(s)` for `0.4 <= Re s <= 3` and the
//! short-interval maximum of `log |ζ(1/2 + it + ih)|`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_gamma, ln_sin};

/// `B_{2j}` for `j = 1..=13`.
const BERNOULLI: [f64; 13] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
];

/// Default number of Bernoulli correction terms.
pub const DEFAULT_ORDER: usize = 12;
const MAX_TERMS: usize = 400_000_000;

/// A value of `ζ` with a bound on the Euler–Maclaurin truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaPoint {
    pub s: Complex64,
    pub value: Complex64,
    pub err_bound: f64,
    /// Estimated floating-point error of the direct sum (not part of the
    /// truncation bound).
    pub rounding: f64,
    pub terms: usize,
}

fn check_domain(s: Complex64) -> Result<()> {
    if !(0.4..=3.0).contains(&s.re) || s.im.abs() > 1e8 || !s.im.is_finite() {
        return Err(Error::Domain(format!("s = {s} outside 0.4 <= Re s <= 3, |Im s| <= 1e8")));
    }
    if (s - 1.0).norm() < 1e-12 {
        return Err(Error::Domain("pole at s = 1".into()));
    }
    Ok(())
}

/// Euler–Maclaurin with `n` direct terms and `order` Bernoulli corrections.
pub fn zeta_em(s: Complex64, n: usize, order: usize) -> Result<ZetaPoint> {
    check_domain(s)?;
    if order == 0 || order > BERNOULLI.len() - 1 {
        return Err(Error::Domain(format!("Bernoulli order must be in 1..={}", BERNOULLI.len() - 1)));
    }
    let n = n.max(2);
    let sigma = s.re;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs_sq = 0.0;
    for k in 1..n {
        let l = (k as f64).ln();
        let mag = (-sigma * l).exp();
        let (sn, cs) = (s.im * l).sin_cos();
        sum += Complex64::new(mag * cs, -mag * sn);
        abs_sq += mag * mag;
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp(); // N^{-s}
    let mut value = sum + n_pow * nf / (s - 1.0) + 0.5 * n_pow;
    // term_j = B_{2j}/(2j)! s(s+1)...(s+2j-2) N^{-s-2j+1}
    let mut rising = s; // s (s+1) ... (s + 2j - 2)
    let mut fact = 2.0; // (2j)!
    let mut npow = n_pow / nf; // N^{-s-2j+1}
    let mut next = Complex64::new(0.0, 0.0);
    for j in 1..=order + 1 {
        let term = rising * npow * (BERNOULLI[j - 1] / fact);
        if j <= order {
            value += term;
        } else {
            next = term;
        }
        let a = 2.0 * j as f64;
        rising *= (s + (a - 1.0)) * (s + a);
        fact *= (a + 1.0) * (a + 2.0);
        npow /= nf * nf;
    }
    let q = order as f64;
    let err_bound = next.norm() * (s + 2.0 * q + 1.0).norm() / (sigma + 2.0 * q + 1.0);
    let rounding = 4.0 * f64::EPSILON * (s.im.abs() * ln_n + 1.0) * abs_sq.sqrt() * ln_n.sqrt().max(1.0);
    Ok(ZetaPoint { s, value, err_bound, rounding, terms: n })
}

/// `ζ(s)` with truncation bound at most `target_abs_err`.
pub fn zeta_eval(s: Complex64, target_abs_err: f64) -> Result<ZetaPoint> {
    check_domain(s)?;
    if !(target_abs_err >= 1e-10) {
        return Err(Error::Domain("target_abs_err must be >= 1e-10".into()));
    }
    let mut n = 20usize.max((s.im.abs() / PI).ceil() as usize);
    loop {
        let p = zeta_em(s, n, DEFAULT_ORDER)?;
        if p.rounding > target_abs_err {
            return Err(Error::Tolerance { requested: target_abs_err, achievable: p.rounding });
        }
        if p.err_bound <= target_abs_err {
            return Ok(p);
        }
        if n > MAX_TERMS {
            return Err(Error::Tolerance { requested: target_abs_err, achievable: p.err_bound });
        }
        n *= 2;
    }
}

/// `ln χ(s)` with `ζ(s) = χ(s) ζ(1 - s)`,
/// `χ(s) = 2^s π^{s-1} sin(πs/2) Γ(1-s)`.
pub fn ln_chi(s: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    s * 2f64.ln() + (s - 1.0) * PI.ln() + ln_sin(s * (PI / 2.0)) + ln_gamma(one - s)
}

/// `log |ζ(1/2 + i(t+h))|`.
pub fn log_abs_zeta_on_line(t: f64, h: f64, target: f64) -> Result<f64> {
    let p = zeta_eval(Complex64::new(0.5, t + h), target)?;
    Ok(p.value.norm().ln())
}

/// Location and value of `max_{|h| <= half_width} log |ζ(1/2 + it + ih)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortMax {
    pub h_star: f64,
    pub max_log_abs: f64,
}

/// Coarse scan at `coarse_step` followed by `refine_depth` trisection rounds
/// around the best grid point.
pub fn max_log_abs_zeta(t: f64, half_width: f64, coarse_step: f64, refine_depth: u32) -> Result<ShortMax> {
    if !(0.0..=2.0).contains(&half_width) {
        return Err(Error::Precondition(format!("half_width {half_width} outside (0, 2]")));
    }
    let spacing = 2.0 * PI / t.max(3.0).ln();
    if !(coarse_step > 0.0 && coarse_step <= spacing) {
        return Err(Error::Precondition(format!("coarse_step must be in (0, {spacing}]")));
    }
    let target = 1e-6;
    let f = |h: f64| log_abs_zeta_on_line(t, h, target);
    if half_width == 0.0 {
        return Ok(ShortMax { h_star: 0.0, max_log_abs: f(0.0)? });
    }
    let cells = (2.0 * half_width / coarse_step).ceil().max(1.0) as usize;
    let step = 2.0 * half_width / cells as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=cells {
        let h = -half_width + i as f64 * step;
        let v = f(h)?;
        if v > best.1 {
            best = (h, v);
        }
    }
    let mut a = (best.0 - step).max(-half_width);
    let mut b = (best.0 + step).min(half_width);
    for _ in 0..refine_depth {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        let (v1, v2) = (f(m1)?, f(m2)?);
        for (h, v) in [(m1, v1), (m2, v2)] {
            if v > best.1 {
                best = (h, v);
            }
        }
        if v1 < v2 {
            a = m1;
        } else {
            b = m2;
        }
    }
    Ok(ShortMax { h_star: best.0, max_log_abs: best.1 })
}

/// `log log t - (3/4) log log log t`, the centring of the short-interval maximum.
pub fn recentering(t: f64) -> f64 {
    let n = t.ln().ln();
    n - 0.75 * n.ln()
}

//! Special functions: normal and bivariate-normal probabilities, the cosine
//! integral, cardinal B-splines and the complex log-gamma function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::quad::GaussLegendre;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `P(lo < Z <= hi)` for a standard normal `Z`.
pub fn normal_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    // Use the upper tail on the right half line to keep precision.
    if lo >= 0.0 {
        normal_cdf(-lo) - normal_cdf(-hi)
    } else {
        normal_cdf(hi) - normal_cdf(lo)
    }
}

fn bvn_rules() -> &'static [GaussLegendre; 3] {
    static RULES: OnceLock<[GaussLegendre; 3]> = OnceLock::new();
    RULES.get_or_init(|| [GaussLegendre::new(6), GaussLegendre::new(12), GaussLegendre::new(20)])
}

/// Upper orthant probability `P(X > h, Y > k)` for standard bivariate normal
/// with correlation `r` (Drezner–Wesolowsky as refined by Genz).
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY { 1.0 } else { normal_cdf(-k) };
    }
    if k == f64::NEG_INFINITY {
        return normal_cdf(-h);
    }
    if r == 0.0 {
        return normal_cdf(-h) * normal_cdf(-k);
    }
    let rules = bvn_rules();
    let rule = if r.abs() < 0.3 {
        &rules[0]
    } else if r.abs() < 0.75 {
        &rules[1]
    } else {
        &rules[2]
    };
    // Nodes on [0, 2] as in Genz's formulation.
    let nodes = rule.nodes.iter().map(|x| 1.0 + x);
    let weights = &rule.weights;
    let tp = 2.0 * PI;
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = 0.5 * r.asin();
        for (x, w) in nodes.zip(weights) {
            let sn = (asr * x).sin();
            bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        bvn = bvn * asr / tp + normal_cdf(-h) * normal_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = 1.0 - r * r;
            let mut a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let asr = -0.5 * (bs / as_ + hk);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * normal_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a *= 0.5;
            let mut acc = 0.0;
            for (x, w) in nodes.zip(weights) {
                let xs = (a * x) * (a * x);
                let asr = -0.5 * (bs / xs + hk);
                if asr > -100.0 {
                    let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    let rs = (1.0 - xs).sqrt();
                    let ep = (-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                    acc += w * asr.exp() * (sp - ep);
                }
            }
            bvn = (a * acc - bvn) / tp;
        }
        if r > 0.0 {
            bvn += normal_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 { normal_cdf(k) - normal_cdf(h) } else { normal_cdf(-h) - normal_cdf(-k) };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `P(X in (a_lo, a_hi], Y in (b_lo, b_hi])` for a standard bivariate normal
/// with correlation `r`. Infinite endpoints are allowed.
pub fn bvn_rectangle(a: (f64, f64), b: (f64, f64), r: f64) -> f64 {
    if a.1 <= a.0 || b.1 <= b.0 {
        return 0.0;
    }
    let p = bvn_upper(a.0, b.0, r) - bvn_upper(a.1, b.0, r) - bvn_upper(a.0, b.1, r) + bvn_upper(a.1, b.1, r);
    p.clamp(0.0, 1.0)
}

/// Cosine integral `Ci(x) = -∫_x^∞ cos(t)/t dt` for `x > 0`.
pub fn cosine_integral(x: f64) -> f64 {
    assert!(x > 0.0, "Ci is defined for positive arguments");
    if x <= 2.0 {
        // γ + ln x + Σ (-1)^k x^{2k} / (2k (2k)!)
        let x2 = x * x;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..40 {
            let kk = 2 * k;
            term *= -x2 / ((kk - 1) * kk) as f64;
            let add = term / kk as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        return EULER_GAMMA + x.ln() + sum;
    }
    // Continued fraction for E1(ix), modified Lentz.
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..10_000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let h = Complex64::new(x.cos(), -x.sin()) * h;
    -h.re
}

/// Centred cardinal B-spline `M_n`, the density of a sum of `n` independent
/// uniforms on `[-1/2, 1/2]`. Evaluated with the Cox–de Boor recursion.
pub fn cardinal_bspline(n: usize, x: f64) -> f64 {
    assert!(n >= 1);
    let t = x + 0.5 * n as f64;
    if t <= 0.0 || t >= n as f64 {
        return 0.0;
    }
    // vals[i] = N_r(t - i) for the current order r.
    let mut vals = vec![0.0; n + 1];
    let j = t.floor() as usize;
    vals[j.min(n - 1)] = 1.0;
    for r in 2..=n {
        let rf = r as f64;
        let mut next = vec![0.0; n + 1];
        for i in 0..n {
            let u = t - i as f64;
            if u <= 0.0 || u >= rf {
                continue;
            }
            let left = vals[i];
            let right = vals[i + 1];
            // N_r(u) = (u N_{r-1}(u) + (r - u) N_{r-1}(u - 1)) / (r - 1)
            // with N_{r-1}(u - 1) = vals[i + 1].
            next[i] = (u * left + (rf - u) * right) / (rf - 1.0);
        }
        vals = next;
    }
    vals[0]
}

const STIRLING_B: [f64; 8] =
    [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];

/// Principal-branch-agnostic `ln Γ(z)` for `Re z > 0` (Stirling series after
/// upward recurrence). Accurate to about 1e-13 in the real part.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    assert!(z.re > 0.0, "ln_gamma needs Re z > 0");
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.norm() < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let ln_2pi = (2.0 * PI).ln();
    let mut s = (z - 0.5) * z.ln() - z + 0.5 * ln_2pi;
    let z2 = z * z;
    let mut zp = z;
    for (i, b) in STIRLING_B.iter().enumerate() {
        let k = (i + 1) as f64;
        s += *b / (2.0 * k * (2.0 * k - 1.0) * zp);
        zp *= z2;
    }
    s - shift
}

/// `ln sin(z)` stable for large `|Im z|`.
pub fn ln_sin(z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    if z.im.abs() < 20.0 {
        return z.sin().ln();
    }
    if z.im > 0.0 {
        // sin z = (i/2) e^{-iz} (1 - e^{2iz})
        -i * z + Complex64::new(0.0, 0.5).ln() + (Complex64::new(1.0, 0.0) - (2.0 * i * z).exp()).ln()
    } else {
        ln_sin(z.conj()).conj()
    }
}

//! Band-limited kernels `F0(x) = sinc(πx/m)^{2m}`.
//!
//! With `f̂(u) = ∫ f(x) e^{-2πiux} dx`, `sinc(πx/m)` is the transform of the
//! uniform density on `[-1/(2m), 1/(2m)]`, so `F̂0` is the `2m`-fold
//! convolution of that density: `F̂0(u) = m M_{2m}(m u)`, supported on
//! `[-1, 1]` and nonnegative. The peak is `F0(0) = 1`.

use std::f64::consts::PI;

use crate::quad::GaussLegendre;
use crate::special::cardinal_bspline;

/// Kernel with Fourier support `[-1, 1]` and decay `|x|^{-2m}`.
#[derive(Debug, Clone)]
pub struct SincPower {
    m: u32,
    l1: f64,
    // cdf table: cumulative mass of F0 on [0, i * panel]
    panel: f64,
    cumulative: Vec<f64>,
    rule: GaussLegendre,
}

impl SincPower {
    pub fn new(m: u32) -> Self {
        assert!(m >= 1, "kernel order must be positive");
        let mf = m as f64;
        let l1 = mf * cardinal_bspline(2 * m as usize, 0.0);
        let rule = GaussLegendre::new(20);
        let panel = 0.25 * mf;
        let panels = 64;
        let mut cumulative = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        let f0 = |x: f64| sinc_power(m, x);
        for i in 0..panels {
            acc += rule.integrate(i as f64 * panel, (i + 1) as f64 * panel, f0);
            cumulative.push(acc);
        }
        Self { m, l1, panel, cumulative, rule }
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    /// `F0(x)`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        sinc_power(self.m, x)
    }

    /// `‖F0‖₁ = F̂0(0)`.
    pub fn l1_norm(&self) -> f64 {
        self.l1
    }

    /// Closed-form Fourier transform of `F0`.
    pub fn fourier(&self, u: f64) -> f64 {
        let mf = self.m as f64;
        mf * cardinal_bspline(2 * self.m as usize, mf * u)
    }

    /// The unit-mass approximate identity `F = F0 / ‖F0‖₁`.
    #[inline]
    pub fn density(&self, x: f64) -> f64 {
        self.value(x) / self.l1
    }

    /// Distribution function of the density `F`.
    pub fn cdf(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 1.0 - self.cdf(-z);
        }
        0.5 + self.mass_from_zero(z) / self.l1
    }

    /// Mass of `F` on `[z, ∞)`, accurate in the far tail.
    pub fn upper_tail(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 1.0 - self.upper_tail(-z);
        }
        let cut = self.panel * (self.cumulative.len() - 1) as f64;
        if z >= cut {
            return self.tail_asymptotic(z) / self.l1;
        }
        (self.tail_asymptotic(cut) + (self.mass_from_zero(cut) - self.mass_from_zero(z))) / self.l1
    }

    /// `∫_0^z F0` for `z >= 0`.
    fn mass_from_zero(&self, z: f64) -> f64 {
        let cut = self.panel * (self.cumulative.len() - 1) as f64;
        if z >= cut {
            return 0.5 * self.l1 - self.tail_asymptotic(z);
        }
        let i = (z / self.panel).floor() as usize;
        let lo = i as f64 * self.panel;
        let m = self.m;
        self.cumulative[i] + self.rule.integrate(lo, z, |x| sinc_power(m, x))
    }

    /// `∫_z^∞ F0` for large `z` from the cosine expansion of `sin^{2m}` and
    /// an asymptotic series for each oscillatory piece.
    fn tail_asymptotic(&self, z: f64) -> f64 {
        let n = 2 * self.m as usize;
        let c = PI / self.m as f64;
        // sin^n(cx) = 2^{-n} [C(n, n/2) + 2 Σ_j (-1)^j C(n, n/2 - j) cos(2jcx)]
        let half = n / 2;
        let mut total = binomial(n, half) * z.powi(1 - n as i32) / (n as f64 - 1.0);
        for j in 1..=half {
            let w = 2.0 * j as f64 * c;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            total += 2.0 * sign * binomial(n, half - j) * oscillatory_tail(n as f64, w, z);
        }
        total / (2f64.powi(n as i32) * c.powi(n as i32))
    }
}

/// `sinc(πx/m)^{2m}` with value 1 at the origin.
#[inline]
pub fn sinc_power(m: u32, x: f64) -> f64 {
    let z = PI * x / m as f64;
    if z.abs() < 1e-8 {
        return 1.0 - m as f64 * z * z / 3.0;
    }
    (z.sin() / z).powi(2 * m as i32)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// `Re ∫_z^∞ x^{-p} e^{iωx} dx` by repeated integration by parts.
fn oscillatory_tail(p: f64, w: f64, z: f64) -> f64 {
    // I_p = -e^{iωz}/(iω) Σ_r (p)_r z^{-p-r} / (iω)^r
    let mut sum_re = 0.0;
    let mut sum_im = 0.0;
    // term_r = (p)_r / (iω z)^r, tracked as magnitude and power of i
    let mut mag = 1.0;
    let mut prev = f64::INFINITY;
    for r in 0..200 {
        if mag > prev || mag < 1e-20 {
            break;
        }
        // (1/i)^r = (-i)^r
        let (re, im) = match r % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, -1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, 1.0),
        };
        sum_re += mag * re;
        sum_im += mag * im;
        prev = mag;
        mag *= (p + r as f64) / (w * z);
    }
    // prefactor -e^{iωz} z^{-p} / (iω) = i e^{iωz} z^{-p} / ω
    let (s, co) = (w * z).sin_cos();
    let pre_re = -s / w;
    let pre_im = co / w;
    z.powf(-p) * (pre_re * sum_re - pre_im * sum_im)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫_0^∞ (sin x / x)^n dx = π / (2^n (n-1)!) Σ_{k < n/2} (-1)^k C(n,k) (n - 2k)^{n-1}
    fn sinc_power_integral(n: usize) -> f64 {
        let mut s = 0.0;
        for k in 0..=(n - 1) / 2 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binomial(n, k) * ((n - 2 * k) as f64).powi(n as i32 - 1);
        }
        let fact: f64 = (1..n).map(|i| i as f64).product();
        PI * s / (2f64.powi(n as i32) * fact)
    }

    #[test]
    fn l1_norm_matches_closed_form_integral() {
        for m in [1u32, 2, 3, 8] {
            let k = SincPower::new(m);
            // ∫ sinc(πx/m)^{2m} dx = (2m/π) ∫_0^∞ (sin y/y)^{2m} dy
            let exact = 2.0 * m as f64 / PI * sinc_power_integral(2 * m as usize);
            assert!((k.l1_norm() - exact).abs() < 1e-12 * exact, "m={m}");
        }
    }

    #[test]
    fn cdf_is_continuous_across_the_asymptotic_switch() {
        for m in [2u32, 8] {
            let k = SincPower::new(m);
            let cut = k.panel * 64.0;
            let below = k.cdf(cut - 1e-9);
            let above = k.cdf(cut + 1e-9);
            assert!((below - above).abs() < 1e-13, "m={m}: {below} {above}");
            assert!((k.cdf(0.0) - 0.5).abs() < 1e-15);
            assert!((k.cdf(1e6) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tail_asymptotic_matches_quadrature() {
        let k = SincPower::new(2);
        let g = GaussLegendre::new(20);
        let z = 20.0;
        // direct quadrature to 4000 plus a crude x^{-3} tail estimate
        let direct: f64 = g.integrate_panels(z, 4000.0, 8000, |x| sinc_power(2, x));
        let rest = (2.0 / PI).powi(4) * 0.375 / (3.0 * 4000f64.powi(3));
        let asym = k.tail_asymptotic(z);
        assert!((asym - direct - rest).abs() < 1e-12, "{asym} vs {}", direct + rest);
    }

    #[test]
    fn fourier_transform_vanishes_outside_unit_interval() {
        let k = SincPower::new(2);
        assert_eq!(k.fourier(1.0001), 0.0);
        assert!((k.fourier(0.0) - k.l1_norm()).abs() < 1e-15);
    }
}

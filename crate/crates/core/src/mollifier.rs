//! Band-limited smoothed indicators `G±` of `[0, 1/Δ]`, their polynomial
//! truncations, and a numerical certificate of the sandwich properties.
//!
//! `G±(x) = ∫_I D F(D(x - t)) dt` with `D = Δ^{2A}`, `F` the unit-mass
//! kernel with `supp F̂ ⊂ [-1, 1]`, and `I` the slightly shrunk (`-`) or
//! enlarged (`+`) interval. Values come from the kernel distribution
//! function, so `G(x) = P(D(x - hi) <= U <= D(x - lo))` for `U ~ F`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::kernel::SincPower;
use crate::quad::GaussLegendre;

/// Order `m` of the kernel `sinc(πx/m)^{2m}` used for the indicators.
pub const DEFAULT_KERNEL_ORDER: u32 = 2;
pub const MAX_DEGREE: usize = 60;

/// `F(x) = F0(x) / ‖F0‖₁` for the default kernel.
pub fn approximate_identity(x: f64) -> f64 {
    thread_local! {
        static KERNEL: SincPower = SincPower::new(DEFAULT_KERNEL_ORDER);
    }
    KERNEL.with(|k| k.density(x))
}

/// `∫ F0(x) cos(2πux) dx` by quadrature over `|x| <= cut`.
pub fn kernel_fourier_numeric(kernel: &SincPower, u: f64, cut: f64) -> f64 {
    let rule = GaussLegendre::new(20);
    let panels = (cut / 0.25).ceil() as usize;
    2.0 * rule.integrate_panels(0.0, cut, panels, |x| kernel.value(x) * (2.0 * PI * u * x).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproximationParams {
    pub delta: f64,
    pub a: f64,
    pub kernel_order: u32,
}

impl ApproximationParams {
    pub fn new(delta: f64, a: f64) -> Result<Self> {
        if !(delta >= 3.0 && a >= 3.0 && delta.is_finite() && a.is_finite()) {
            return Err(Error::Domain(format!("need Δ, A >= 3, got Δ = {delta}, A = {a}")));
        }
        let p = Self { delta, a, kernel_order: DEFAULT_KERNEL_ORDER };
        if !(p.scale() * (1.0 / delta + 2.0) < 1e15) {
            return Err(Error::Domain(format!("Δ^(2A) = {} too large", p.scale())));
        }
        Ok(p)
    }

    /// `D = Δ^{2A}`.
    pub fn scale(&self) -> f64 {
        self.delta.powf(2.0 * self.a)
    }

    /// `Δ^{-A/2}`.
    pub fn margin(&self) -> f64 {
        self.delta.powf(-self.a / 2.0)
    }

    /// `e^{-Δ^{A-1}}`.
    pub fn error_scale(&self) -> f64 {
        (-self.delta.powf(self.a - 1.0)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone)]
pub struct SmoothedIndicator {
    pub sign: Sign,
    pub params: ApproximationParams,
    lo: f64,
    hi: f64,
    scale: f64,
    kernel: SincPower,
}

impl SmoothedIndicator {
    pub fn build(params: ApproximationParams, sign: Sign) -> Self {
        let d = params.delta;
        let tiny = d.powf(-params.a);
        let (lo, hi) = match sign {
            Sign::Minus => (params.margin() - tiny, 1.0 / d - params.margin() + tiny),
            Sign::Plus => (-tiny, 1.0 / d + tiny),
        };
        Self { sign, params, lo, hi, scale: params.scale(), kernel: SincPower::new(params.kernel_order) }
    }

    /// The interval being smoothed.
    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `P(p <= U <= q)` for `U ~ F`, accurate when both ends are in a tail.
    fn mass(&self, p: f64, q: f64) -> f64 {
        if p >= q {
            return 0.0;
        }
        let k = &self.kernel;
        if p >= 0.0 {
            k.upper_tail(p) - k.upper_tail(q)
        } else if q <= 0.0 {
            k.upper_tail(-q) - k.upper_tail(-p)
        } else {
            1.0 - k.upper_tail(-p) - k.upper_tail(q)
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.mass(self.scale * (x - self.hi), self.scale * (x - self.lo))
    }

    /// The defining convolution integral by adaptive quadrature.
    pub fn value_by_quadrature(&self, x: f64, abs_tol: f64) -> Result<f64> {
        let rule = GaussLegendre::new(10);
        let (p, q) = (self.scale * (x - self.hi), self.scale * (x - self.lo));
        // panels of width ~ m keep each piece smooth enough for bisection
        let width = self.kernel.order() as f64;
        let pieces = ((q - p) / width).ceil().clamp(1.0, 1e6) as usize;
        let step = (q - p) / pieces as f64;
        let tol = abs_tol / pieces as f64;
        let mut acc = 0.0;
        for i in 0..pieces {
            let a = p + i as f64 * step;
            acc += rule.adaptive(a, a + step, tol, 30, |u| self.kernel.density(u))?;
        }
        Ok(acc)
    }

    /// `Ĝ(ξ) = 1̂_I(ξ) F̂(ξ/D)`.
    pub fn fourier(&self, xi: f64) -> Complex64 {
        let f_hat = self.kernel.fourier(xi / self.scale) / self.kernel.l1_norm();
        if f_hat == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let w = self.hi - self.lo;
        let c = 0.5 * (self.hi + self.lo);
        let box_hat = if xi == 0.0 { w } else { (PI * xi * w).sin() / (PI * xi) };
        Complex64::from_polar(box_hat * f_hat, -2.0 * PI * xi * c)
    }

    /// `∫ |Ĝ|` with panels between the zeros of the box transform.
    pub fn fourier_l1(&self) -> f64 {
        let rule = GaussLegendre::new(20);
        let w = self.hi - self.lo;
        let mut acc = 0.0;
        let mut a = 0.0;
        while a < self.scale {
            let b = (a + 1.0 / w).min(self.scale);
            acc += rule.integrate(a, b, |xi| self.fourier(xi).norm());
            a = b;
        }
        2.0 * acc
    }

    /// `∫ ξ^ℓ Ĝ(ξ) dξ`.
    pub fn moment(&self, l: usize) -> Complex64 {
        self.shifted_moment(l, 0.0)
    }

    /// `∫ ξ^ℓ Ĝ(ξ) e^{2πiξx} dξ = G^{(ℓ)}(x) / (2πi)^ℓ`.
    pub fn shifted_moment(&self, l: usize, x: f64) -> Complex64 {
        let rule = GaussLegendre::new(20);
        let c = (0.5 * (self.hi + self.lo) - x).abs();
        let w = self.hi - self.lo;
        // about four panels per oscillation, more for high powers
        let per_unit = 4.0 * (c + w).max(1.0 / self.scale) + l as f64 / self.scale;
        let panels = ((2.0 * self.scale * per_unit).ceil() as usize).max(64);
        rule.integrate_panels(-self.scale, self.scale, panels, |xi| {
            self.fourier(xi) * Complex64::from_polar(xi.powi(l as i32), 2.0 * PI * xi * x)
        })
    }
}

/// Degree-`ν` Taylor truncation of `G` at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub nu: usize,
    /// Coefficient of `x^ℓ`: `(2πi)^ℓ/ℓ! ∫ ξ^ℓ Ĝ`.
    pub coefficients: Vec<Complex64>,
    pub window: f64,
    /// `max |𝒟(x) - G(x)|` over `|x| <= window`.
    pub gap: f64,
    /// Gap above 1: the window is too wide for this degree.
    pub flagged: bool,
}

impl Truncation {
    pub fn eval(&self, x: f64) -> Complex64 {
        self.coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
    }
}

/// `(2πi)^ℓ / ℓ!` times the moments, `ℓ = 0..=nu`.
pub fn truncation_coefficients(ind: &SmoothedIndicator, nu: usize) -> Result<Vec<Complex64>> {
    if nu > MAX_DEGREE {
        return Err(Error::Precondition(format!("degree {nu} exceeds {MAX_DEGREE}")));
    }
    let mut out = Vec::with_capacity(nu + 1);
    let mut factor = Complex64::new(1.0, 0.0);
    for l in 0..=nu {
        if l > 0 {
            factor *= Complex64::new(0.0, 2.0 * PI / l as f64);
        }
        out.push(factor * ind.moment(l));
    }
    Ok(out)
}

pub fn truncate_to_polynomial(ind: &SmoothedIndicator, nu: usize, window: f64) -> Result<Truncation> {
    if !(window > 0.0) {
        return Err(Error::Domain("window must be positive".into()));
    }
    let coefficients = truncation_coefficients(ind, nu)?;
    let mut t = Truncation { nu, coefficients, window, gap: 0.0, flagged: false };
    let points = 2001;
    t.gap = (0..points)
        .map(|i| {
            let x = -window + 2.0 * window * i as f64 / (points - 1) as f64;
            (t.eval(x) - ind.value(x)).norm()
        })
        .fold(0.0, f64::max);
    t.flagged = !(t.gap <= 1.0);
    Ok(t)
}

/// Log of `(10^ν/ν!) W^ν Δ^{2A(ν+1)}`, the tail bound for `|x| <= W`
/// (default `W = Δ^{6A}`).
pub fn window_truncation_bound(delta: f64, a: f64, nu: f64, window: Option<f64>) -> f64 {
    let w = window.unwrap_or_else(|| delta.powf(6.0 * a));
    nu * 10f64.ln() - ln_gamma(nu + 1.0) + nu * w.ln() + 2.0 * a * (nu + 1.0) * delta.ln()
}

/// Log of the simplified form `(10^ν/ν!) Δ^{9Aν}`.
pub fn simplified_truncation_bound(delta: f64, a: f64, nu: f64) -> f64 {
    nu * 10f64.ln() - ln_gamma(nu + 1.0) + 9.0 * a * nu * delta.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCheck {
    /// `(u, |F̂0(u)| / F̂0(0))` by quadrature at `|u| > 1`.
    pub kernel_tail: Vec<(f64, f64)>,
    pub max_relative: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub eps_plus: f64,
    pub eps_minus: f64,
    /// Measured `ε / e^{-Δ^{A-1}}`.
    pub constant_plus: f64,
    pub constant_minus: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Check {
    pub l1_plus: f64,
    pub l1_minus: f64,
    pub bound: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientCheck {
    pub sign: Sign,
    pub nu: usize,
    /// `min_ℓ log10(bound_ℓ / |c_ℓ|)`.
    pub min_log10_margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub sign: Sign,
    pub nu: usize,
    pub window: f64,
    pub gap: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub l: usize,
    pub x: f64,
    pub quadrature: Complex64,
    pub finite_difference: Complex64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub params: ApproximationParams,
    pub kernel: String,
    pub grid_points: usize,
    pub item1_support: SupportCheck,
    /// `max(-G⁻, G⁻ - G⁺, G⁺ - 1)` over the grid.
    pub item2_violation: f64,
    pub item2_holds: bool,
    pub item3: SandwichCheck,
    pub item4: SandwichCheck,
    pub item5: L1Check,
    pub coefficients: Vec<CoefficientCheck>,
    pub truncation: Vec<GapRow>,
    pub moment_checks: Vec<MomentCheck>,
    /// Log of the window-form tail bound at each requested degree.
    pub window_bound_log: Vec<(usize, f64)>,
}

impl Certificate {
    pub fn items_hold(&self) -> bool {
        self.item1_support.holds
            && self.item2_holds
            && self.item3.holds
            && self.item4.holds
            && self.item5.holds
            && self.coefficients.iter().all(|c| c.holds)
    }
}

/// Tolerance on measured sandwich slacks.
pub const SANDWICH_TOL: f64 = 1e-3;
pub const ORDER_TOL: f64 = 1e-8;

fn evaluation_grid(p: &ApproximationParams) -> Vec<f64> {
    let d = p.delta;
    let (lo, hi) = (-p.margin() - 1.0, 1.0 / d + p.margin() + 1.0);
    let step = 1.0 / (8.0 * p.scale()).min(1e5);
    let n = ((hi - lo) / step).ceil() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    let tiny = d.powf(-p.a);
    g.extend([
        0.0,
        1.0 / d,
        p.margin(),
        1.0 / d - p.margin(),
        -p.margin(),
        1.0 / d + p.margin(),
        -tiny,
        1.0 / d + tiny,
    ]);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn sandwich(plus: f64, minus: f64, p: &ApproximationParams) -> SandwichCheck {
    let e = p.error_scale();
    SandwichCheck {
        eps_plus: plus,
        eps_minus: minus,
        constant_plus: plus / e,
        constant_minus: minus / e,
        holds: plus <= SANDWICH_TOL && minus <= SANDWICH_TOL,
    }
}

/// Five-point central derivative of order 1 or 2.
fn central_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64, order: usize) -> f64 {
    let (m2, m1, p1, p2) = (f(x - 2.0 * h), f(x - h), f(x + h), f(x + 2.0 * h));
    match order {
        1 => (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h),
        _ => (-m2 + 16.0 * m1 - 30.0 * f(x) + 16.0 * p1 - p2) / (12.0 * h * h),
    }
}

/// Measure every sandwich item at `(Δ, A)` and the truncation gaps for each
/// degree in `nus` on each window.
pub fn certify(params: ApproximationParams, nus: &[usize], windows: &[f64]) -> Result<Certificate> {
    if let Some(&nu) = nus.iter().find(|&&n| n > MAX_DEGREE) {
        return Err(Error::Precondition(format!("degree {nu} exceeds {MAX_DEGREE}")));
    }
    let plus = SmoothedIndicator::build(params, Sign::Plus);
    let minus = SmoothedIndicator::build(params, Sign::Minus);
    let d = params.delta;

    let kernel = SincPower::new(params.kernel_order);
    let kernel_tail: Vec<(f64, f64)> = [1.05, 1.5, 2.0]
        .iter()
        .map(|&u| (u, kernel_fourier_numeric(&kernel, u, 4000.0).abs() / kernel.l1_norm()))
        .collect();
    let max_relative = kernel_tail.iter().map(|r| r.1).fold(0.0, f64::max);
    let item1_support = SupportCheck { kernel_tail, max_relative, holds: max_relative < ORDER_TOL };

    let grid = evaluation_grid(&params);
    let values: Vec<(f64, f64, f64)> = grid.iter().map(|&x| (x, plus.value(x), minus.value(x))).collect();
    let item2_violation =
        values.iter().map(|&(_, gp, gm)| (-gm).max(gm - gp).max(gp - 1.0)).fold(f64::NEG_INFINITY, f64::max);

    let unit = |x: f64| (0.0..=1.0 / d).contains(&x);
    let outer = |x: f64| (-params.margin()..=1.0 / d + params.margin()).contains(&x);
    let inner = |x: f64| (params.margin()..=1.0 / d - params.margin()).contains(&x);
    let mut e3p = 0.0f64;
    let mut e3m = 0.0f64;
    let mut e4p = 0.0f64;
    let mut e4m = 0.0f64;
    for &(x, gp, gm) in &values {
        if unit(x) {
            e3p = e3p.max(1.0 / gp - 1.0);
        }
        e3m = e3m.max(gm - unit(x) as u8 as f64);
        if !outer(x) {
            e4p = e4p.max(gp);
        }
        if inner(x) {
            e4m = e4m.max(1.0 - gm);
        }
    }

    let (l1_plus, l1_minus) = (plus.fourier_l1(), minus.fourier_l1());
    let bound = 2.0 * params.scale();
    let margin = bound - l1_plus.max(l1_minus);

    let mut coefficients = Vec::new();
    let mut truncation = Vec::new();
    let max_nu = nus.iter().copied().max().unwrap_or(0);
    for ind in [&plus, &minus] {
        let coefs = truncation_coefficients(ind, max_nu)?;
        for &nu in nus {
            let mut min_margin = f64::INFINITY;
            for (l, c) in coefs.iter().enumerate().take(nu + 1) {
                let lf = l as f64;
                let log_bound =
                    2f64.ln() + 2.0 * params.a * (lf + 1.0) * d.ln() + lf * (2.0 * PI).ln() - ln_gamma(lf + 1.0);
                min_margin = min_margin.min((log_bound - c.norm().ln()) / 10f64.ln());
            }
            coefficients.push(CoefficientCheck {
                sign: ind.sign,
                nu,
                min_log10_margin: min_margin,
                holds: min_margin >= 0.0,
            });
            for &w in windows {
                let t = Truncation { nu, coefficients: coefs[..=nu].to_vec(), window: w, gap: 0.0, flagged: false };
                let points = 2001;
                let gap = (0..points)
                    .map(|i| {
                        let x = -w + 2.0 * w * i as f64 / (points - 1) as f64;
                        (t.eval(x) - ind.value(x)).norm()
                    })
                    .fold(0.0, f64::max);
                truncation.push(GapRow { sign: ind.sign, nu, window: w, gap, flagged: !(gap <= 1.0) });
            }
        }
    }

    // at the origin G is flat to many digits, so the identity is checked
    // half a kernel unit inside the lower edge where the derivatives are O(D^ℓ)
    let h = 0.01 / params.scale();
    let x0 = plus.interval().0 + 0.5 / params.scale();
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let moment_checks = (0..=2)
        .map(|l| {
            let quadrature = plus.shifted_moment(l, x0);
            let deriv = if l == 0 { plus.value(x0) } else { central_derivative(|x| plus.value(x), x0, h, l) };
            let finite_difference = Complex64::new(deriv, 0.0) / two_pi_i.powi(l as i32);
            let relative = (quadrature - finite_difference).norm() / quadrature.norm().max(f64::MIN_POSITIVE);
            MomentCheck { l, x: x0, quadrature, finite_difference, relative }
        })
        .collect();

    Ok(Certificate {
        params,
        kernel: format!("sinc(pi x/{m})^{}", 2 * params.kernel_order, m = params.kernel_order),
        grid_points: grid.len(),
        item1_support,
        item2_violation,
        item2_holds: item2_violation <= ORDER_TOL,
        item3: sandwich(e3p, e3m, &params),
        item4: sandwich(e4p, e4m, &params),
        item5: L1Check { l1_plus, l1_minus, bound, margin, holds: margin >= 0.0 },
        coefficients,
        truncation,
        moment_checks,
        window_bound_log: nus.iter().map(|&nu| (nu, window_truncation_bound(d, params.a, nu as f64, None))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_peak_and_range() {
        let k = SincPower::new(DEFAULT_KERNEL_ORDER);
        assert_eq!(k.value(0.0), 1.0);
        assert!((approximate_identity(0.0) - 1.0 / k.l1_norm()).abs() < 1e-15);
        for i in 0..100_000 {
            let v = k.value(-50.0 + i as f64 * 1e-3);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn kernel_transform_vanishes_beyond_one() {
        let k = SincPower::new(DEFAULT_KERNEL_ORDER);
        assert!(kernel_fourier_numeric(&k, 1.05, 4000.0).abs() < 1e-8);
        let at_half = kernel_fourier_numeric(&k, 0.5, 4000.0);
        assert!((at_half - k.fourier(0.5)).abs() < 1e-9);
    }

    #[test]
    fn indicator_matches_convolution_quadrature() {
        let p = ApproximationParams::new(3.0, 3.0).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let g = SmoothedIndicator::build(p, sign);
            for x in [-0.01, 0.0, 0.05, 0.17, 0.34, 0.5] {
                let q = g.value_by_quadrature(x, 1e-10).unwrap();
                assert!((g.value(x) - q).abs() < 2e-10, "{sign:?} x={x}: {} vs {q}", g.value(x));
            }
        }
    }

    #[test]
    fn plus_indicator_near_one_at_midpoint() {
        let p = ApproximationParams::new(4.0, 3.0).unwrap();
        assert!(SmoothedIndicator::build(p, Sign::Plus).value(0.125) >= 0.99);
    }

    #[test]
    fn zeroth_coefficient_is_value_at_origin() {
        let p = ApproximationParams::new(3.0, 3.0).unwrap();
        let g = SmoothedIndicator::build(p, Sign::Plus);
        let t = truncate_to_polynomial(&g, 0, 0.2).unwrap();
        assert!((t.coefficients[0].re - g.value(0.0)).abs() < 1e-9);
        assert!(t.coefficients[0].im.abs() < 1e-9);
        let direct = (0..2001)
            .map(|i| (g.value(-0.2 + 0.4 * i as f64 / 2000.0) - t.coefficients[0].re).abs())
            .fold(0.0, f64::max);
        assert!((t.gap - direct).abs() < 1e-8);
        assert!(truncate_to_polynomial(&g, 61, 0.2).is_err());
    }

    #[test]
    fn truncation_bound_forms() {
        let nu = 3f64.powi(30);
        assert!(window_truncation_bound(3.0, 3.0, nu, None) <= -27.0);
        assert!(window_truncation_bound(3.0, 3.0, 10.0, None) > 0.0);
        // consecutive ratio 10 W Δ^{2A} / (ν+1) < 1 past the threshold
        let w = 3f64.powi(18);
        let start = (std::f64::consts::E * 10.0 * 3f64.powi(27) * w).ceil();
        for f in [1.0, 1.5, 2.0] {
            assert!(
                window_truncation_bound(3.0, 3.0, f * 1.5 * start, None)
                    < window_truncation_bound(3.0, 3.0, f * start, None)
            );
        }
    }
}

//! Prime-block partial sums along vertical lines, Dirichlet polynomials, the
//! discretised supremum bound, the mean-value identity and the smoothed Euler
//! product.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::SincPower;
use crate::primes::{BlockKind, PrimePartition};
use crate::quad::GaussLegendre;

/// Which primes enter the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Convention {
    /// Blocks `n0 < j <= k`.
    Thm1 { n0: i32 },
    /// All blocks from `p = 2`.
    Thm3,
}

impl Convention {
    fn first_block(&self) -> i32 {
        match *self {
            Convention::Thm1 { n0 } => (n0 + 1).max(0),
            Convention::Thm3 => 0,
        }
    }
}

/// Values `S_k(h)` for `k = k_lo..=k_hi` at height `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSample {
    pub t: f64,
    pub h: f64,
    pub k_lo: i32,
    pub values: Vec<f64>,
    pub convention: Convention,
}

impl WalkSample {
    pub fn value(&self, k: i32) -> Option<f64> {
        if k < self.k_lo {
            return None;
        }
        self.values.get((k - self.k_lo) as usize).copied()
    }
}

/// `Σ_{p in block k} Re(p^{-(1/2 + iτ)} + p^{-2(1/2 + iτ)}/2)` with `τ = t + h`.
pub fn block_increment(partition: &PrimePartition, t: f64, h: f64, k: i32) -> Result<f64> {
    let tau = t + h;
    let mut acc = 0.0;
    partition.for_each_prime(k, |p| {
        let pf = p as f64;
        let theta = tau * pf.ln();
        acc += theta.cos() / pf.sqrt() + (2.0 * theta).cos() / (2.0 * pf);
    })?;
    Ok(acc)
}

/// Partial sums `S_k(t + h)` under the given convention.
pub fn partial_sums(
    t: f64,
    h: f64,
    k_lo: i32,
    k_hi: i32,
    partition: &PrimePartition,
    convention: Convention,
) -> Result<WalkSample> {
    if k_hi < k_lo {
        return Ok(WalkSample { t, h, k_lo, values: Vec::new(), convention });
    }
    if h.abs() > 1.0 {
        return Err(Error::Precondition(format!("|h| = {} > 1", h.abs())));
    }
    if partition.kind(k_hi) != BlockKind::Explicit {
        return Err(Error::BlockOutOfRange { block: k_hi, needed_limit: PrimePartition::edges(k_hi).1 });
    }
    let mut running = 0.0;
    let mut values = Vec::with_capacity((k_hi - k_lo + 1) as usize);
    for k in convention.first_block().min(k_lo)..=k_hi {
        if k >= convention.first_block() && k >= 0 {
            running += block_increment(partition, t, h, k)?;
        }
        if k >= k_lo {
            values.push(running);
        }
    }
    Ok(WalkSample { t, h, k_lo, values, convention })
}

/// `P_{n0}(h)`: the contribution of blocks `0..=n0`, summed prime by prime.
pub fn p_n0(t: f64, h: f64, n0: i32, partition: &PrimePartition) -> Result<f64> {
    let hi = PrimePartition::edges(n0).1;
    if partition.kind(n0) != BlockKind::Explicit {
        return Err(Error::BlockOutOfRange { block: n0, needed_limit: hi });
    }
    let tau = t + h;
    let mut acc = 0.0;
    for p in crate::primes::sieve_primes(hi.max(2))? {
        let pf = p as f64;
        let theta = tau * pf.ln();
        acc += theta.cos() / pf.sqrt() + (2.0 * theta).cos() / (2.0 * pf);
    }
    Ok(acc)
}

/// `D(s) = Σ a_n n^{-s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPoly {
    terms: Vec<(u64, Complex64)>,
}

impl DirichletPoly {
    /// Terms are sorted by index; duplicate indices are rejected and trailing
    /// zero coefficients dropped.
    pub fn new(mut terms: Vec<(u64, Complex64)>) -> Result<Self> {
        terms.sort_by_key(|t| t.0);
        if terms.iter().any(|t| t.0 == 0) {
            return Err(Error::Domain("Dirichlet indices start at 1".into()));
        }
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Domain("duplicate Dirichlet index".into()));
        }
        while terms.last().is_some_and(|t| t.1 == Complex64::new(0.0, 0.0)) {
            terms.pop();
        }
        Ok(Self { terms })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().enumerate().map(|(i, &a)| (i as u64 + 1, Complex64::new(a, 0.0))).collect())
    }

    pub fn terms(&self) -> &[(u64, Complex64)] {
        &self.terms
    }

    /// Largest index with a nonzero coefficient.
    pub fn length(&self) -> u64 {
        self.terms.last().map_or(0, |t| t.0)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.terms.iter().map(|&(n, a)| a * (-s * (n as f64).ln()).exp()).sum()
    }

    /// `Σ |a_n|^2`.
    pub fn l2_sq(&self) -> f64 {
        self.terms.iter().map(|t| t.1.norm_sqr()).sum()
    }
}

/// Right side of the discretisation inequality: a weighted sum of `|D|^2`
/// on the lattice `1/2 + it + 2πij/(8 log N)`.
pub fn sup_bound_discretized(poly: &DirichletPoly, t: f64, k: i32) -> Result<f64> {
    let n = poly.length();
    if n < 2 {
        return Err(Error::Domain("polynomial length must be at least 2".into()));
    }
    let log_n = (n as f64).ln();
    let k_max = log_n.ln().max(1.0);
    if k < 1 || k as f64 > k_max {
        return Err(Error::Domain(format!("k = {k} outside [1, {k_max:.3}]")));
    }
    let step = 2.0 * PI / (8.0 * log_n);
    let at = |j: i64| poly.eval(Complex64::new(0.5, t + step * j as f64)).norm_sqr();
    let core = (16.0 * (-k as f64).exp() * log_n).floor() as i64;
    let mut total = 0.0;
    for j in -core..=core {
        total += at(j);
    }
    let sup: f64 = poly.terms().iter().map(|&(m, a)| a.norm() / (m as f64).sqrt()).sum();
    let sup_sq = sup * sup;
    let mut j = core + 1;
    loop {
        let w = 1.0 / (1.0 + (j as f64).powi(100));
        // remaining tail is at most twice the next weight times sup |D|^2
        if 2.0 * w * sup_sq < 1e-12 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        total += w * (at(j) + at(-j));
        j += 1;
    }
    Ok(total)
}

/// Mean-square identity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanValueGap {
    /// `|(1/T) ∫_T^{2T} |Σ a(n) n^{iτ}|^2 dτ - Σ |a(n)|^2|`
    pub absolute: f64,
    /// `absolute / Σ |a(n)|^2`
    pub relative: f64,
    /// Difference between the closed form and Gauss–Legendre quadrature when
    /// a node count was given.
    pub quadrature_check: Option<f64>,
}

/// Exact mean square of a Dirichlet polynomial over `[T, 2T]` by pairwise
/// closed-form integration.
pub fn mean_value_gap(poly: &DirichletPoly, big_t: f64, n_quadrature: Option<usize>) -> Result<MeanValueGap> {
    if big_t < 100.0 {
        return Err(Error::Precondition(format!("T = {big_t} < 100")));
    }
    let n = poly.length();
    if n as f64 > big_t {
        return Err(Error::Precondition(format!("length {n} exceeds T = {big_t}")));
    }
    let terms = poly.terms();
    let diag = poly.l2_sq();
    let mut off = 0.0;
    for (i, &(n1, a1)) in terms.iter().enumerate() {
        let l1 = (n1 as f64).ln();
        for &(n2, a2) in &terms[i + 1..] {
            let r = l1 - (n2 as f64).ln();
            // (1/T) ∫_T^{2T} e^{iτr} dτ
            let avg = (Complex64::new(0.0, 2.0 * big_t * r).exp() - Complex64::new(0.0, big_t * r).exp())
                / Complex64::new(0.0, big_t * r);
            off += 2.0 * (a1 * a2.conj() * avg).re;
        }
    }
    let quadrature_check = n_quadrature.map(|nodes| {
        let g = GaussLegendre::new(32);
        let panels = nodes.div_ceil(32).max(1);
        let f = |tau: f64| -> f64 {
            terms
                .iter()
                .map(|&(m, a)| a * Complex64::new(0.0, tau * (m as f64).ln()).exp())
                .sum::<Complex64>()
                .norm_sqr()
        };
        let q: f64 = g.integrate_panels(big_t, 2.0 * big_t, panels, f) / big_t;
        (q - (diag + off)).abs()
    });
    let absolute = off.abs();
    Ok(MeanValueGap { absolute, relative: if diag > 0.0 { absolute / diag } else { 0.0 }, quadrature_check })
}

/// `f(x) = F0(x/2π) / (2π ‖F0‖₁)`: `f̂` is supported on `[-1/(2π), 1/(2π)]`
/// and `f̂(0) = 1`.
#[derive(Debug, Clone)]
pub struct EulerKernel {
    base: SincPower,
}

impl EulerKernel {
    pub fn new(m: u32) -> Self {
        Self { base: SincPower::new(m) }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.base.value(x / (2.0 * PI)) / (2.0 * PI * self.base.l1_norm())
    }

    /// `f̂(u) = F̂0(2πu) / ‖F0‖₁`.
    pub fn fourier(&self, u: f64) -> f64 {
        self.base.fourier(2.0 * PI * u) / self.base.l1_norm()
    }

    /// Smallest `W` with `|f(x)| <= cut` for all `|x| >= W`, from the
    /// envelope `(m / (π y))^{2m}` of `F0(y)`.
    pub fn window(&self, cut: f64) -> f64 {
        let m = self.base.order() as f64;
        let scale = 2.0 * PI * self.base.l1_norm();
        // (m/(π y))^{2m} / scale = cut
        let y = m / PI * (cut * scale).powf(-1.0 / (2.0 * m));
        2.0 * PI * y
    }
}

/// Result of the smoothed Euler-product integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerProductValue {
    pub value: Complex64,
    /// Change between the final and the previous (half-density) quadrature.
    pub refinement_change: f64,
    pub panels: usize,
    pub window: f64,
}

/// `log X ∫ ζ(1/2+it+ih+ix) Π_{p<=X} (1 - p^{-(1/2+it+ih+ix)}) f(x log X) dx`.
///
/// The panel count is doubled until two successive results agree to `tol`.
pub fn smoothed_euler_product<Z>(
    t: f64,
    h: f64,
    x_cut: f64,
    kernel: &EulerKernel,
    zeta: Z,
    tol: f64,
) -> Result<EulerProductValue>
where
    Z: Fn(Complex64) -> Result<Complex64>,
{
    if x_cut < 3.0 {
        return Err(Error::Precondition(format!("X = {x_cut} < 3")));
    }
    if t < 100.0 {
        return Err(Error::Precondition(format!("t = {t} < 100")));
    }
    let log_x = x_cut.ln();
    let primes = crate::primes::sieve_primes(x_cut.floor() as u64)?;
    let window = kernel.window(1e-12) / log_x;
    let g = GaussLegendre::new(32);
    let integrand = |x: f64| -> Result<Complex64> {
        let s = Complex64::new(0.5, t + h + x);
        let z = zeta(s)?;
        // Π (1 - p^{-s}) through a sum of logarithms
        let log_prod: Complex64 = primes.iter().map(|&p| (1.0 - (-s * (p as f64).ln()).exp()).ln()).sum();
        Ok(z * log_prod.exp() * kernel.value(x * log_x) * log_x)
    };
    let eval = |panels: usize| -> Result<Complex64> {
        let width = 2.0 * window / panels as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..panels {
            let a = -window + i as f64 * width;
            let half = 0.5 * width;
            let mid = a + half;
            for (x, w) in g.nodes.iter().zip(&g.weights) {
                acc += integrand(mid + half * x)? * (w * half);
            }
        }
        Ok(acc)
    };
    // initial panels roughly half a unit wide
    let mut panels = (2.0 * window / 0.5).ceil() as usize;
    let mut prev = eval(panels)?;
    let mut change = f64::INFINITY;
    for _ in 0..6 {
        panels *= 2;
        let cur = eval(panels)?;
        change = (cur - prev).norm();
        prev = cur;
        if change <= tol {
            return Ok(EulerProductValue { value: cur, refinement_change: change, panels, window });
        }
    }
    Err(Error::Quadrature { achieved: change, requested: tol })
}

/// Primes `p` with `e^{k-1} < log p <= e^k` never exceed this height for `k <= 3`.
pub fn max_explicit_height() -> f64 {
    E.powi(3).exp()
}

//! Gauss–Legendre quadrature: fixed panels and adaptive bisection.

use std::ops::{Add, Mul};

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]` with a single application of the rule.
    #[inline]
    pub fn integrate<T, F>(&self, a: f64, b: f64, mut f: F) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = T::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * (w * half);
        }
        acc
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn integrate_panels<T, F>(&self, a: f64, b: f64, panels: usize, mut f: F) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut acc = T::default();
        for i in 0..panels {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            acc = acc + self.integrate(lo, hi, &mut f);
        }
        acc
    }

    /// Adaptive bisection: a panel is accepted once the rule on the panel and
    /// on its two halves agree to within `abs_tol` scaled by the panel share.
    pub fn adaptive<F>(&self, a: f64, b: f64, abs_tol: f64, max_depth: u32, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        let whole = self.integrate(a, b, &mut f);
        let mut worst = 0.0f64;
        let v = self.adaptive_rec(a, b, whole, abs_tol, max_depth, &mut f, &mut worst);
        if worst > abs_tol {
            return Err(Error::Quadrature { achieved: worst, requested: abs_tol });
        }
        Ok(v)
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive_rec<F>(&self, a: f64, b: f64, whole: f64, tol: f64, depth: u32, f: &mut F, worst: &mut f64) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        let mid = 0.5 * (a + b);
        let left = self.integrate(a, mid, &mut *f);
        let right = self.integrate(mid, b, &mut *f);
        let err = (left + right - whole).abs();
        if err <= tol || depth == 0 {
            if depth == 0 {
                *worst = worst.max(err);
            }
            return left + right;
        }
        self.adaptive_rec(a, mid, left, 0.5 * tol, depth - 1, f, worst)
            + self.adaptive_rec(mid, b, right, 0.5 * tol, depth - 1, f, worst)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

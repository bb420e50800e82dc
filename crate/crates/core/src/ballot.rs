//! Bridge corridor probabilities: the Brownian closed form, Monte-Carlo for
//! Gaussian bridge walks with arbitrary barriers, curved-barrier ballot
//! ratios and the reflection-principle inequality.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{map_chunks, EstimateCI};
use crate::rng::stream;

/// `P(min of the Brownian bridge from x to y over [0, t] >= 0) = 1 - e^{-2xy/t}`.
pub fn bridge_stay_positive_exact(x: f64, y: f64, t: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0 && t > 0.0) {
        return Err(Error::Domain(format!("need x, y, t > 0, got ({x}, {y}, {t})")));
    }
    Ok(-(-2.0 * x * y / t).exp_m1())
}

/// A barrier indexed by step `0..=t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Barrier {
    None,
    Scalar(f64),
    Array(Vec<f64>),
}

impl Barrier {
    #[inline]
    fn at(&self, k: usize, absent: f64) -> f64 {
        match self {
            Barrier::None => absent,
            Barrier::Scalar(v) => *v,
            Barrier::Array(v) => v[k],
        }
    }
}

/// How the corridor is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monitoring {
    /// Only at integer steps.
    Discrete,
    /// Along the Brownian bridge interpolating each step, with barriers
    /// linear between steps; each path contributes its survival probability.
    Continuous,
}

/// Gaussian walk from `a` at step 0 conditioned to end at `b` at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub variances: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub lower: Barrier,
    pub upper: Barrier,
}

impl BridgeSpec {
    pub fn unit(t: usize, a: f64, b: f64, lower: Barrier, upper: Barrier) -> Self {
        Self { variances: vec![1.0; t], a, b, lower, upper }
    }

    pub fn steps(&self) -> usize {
        self.variances.len()
    }

    /// `σ = Σ σ_k²`.
    pub fn total_variance(&self) -> f64 {
        self.variances.iter().sum()
    }

    /// Smallest `κ` with all variances in `[κ, 1/κ]`.
    pub fn kappa(&self) -> f64 {
        self.variances.iter().map(|&v| v.min(1.0 / v)).fold(1.0, f64::min)
    }

    pub fn lower_at(&self, k: usize) -> f64 {
        self.lower.at(k, f64::NEG_INFINITY)
    }

    pub fn upper_at(&self, k: usize) -> f64 {
        self.upper.at(k, f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.steps();
        if t == 0 {
            return Err(Error::Precondition("bridge needs at least one step".into()));
        }
        if self.variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Precondition("variances must be positive and finite".into()));
        }
        for b in [&self.lower, &self.upper] {
            if let Barrier::Array(v) = b {
                if v.len() != t + 1 {
                    return Err(Error::Precondition(format!("barrier array has {} entries, need {}", v.len(), t + 1)));
                }
            }
        }
        for (k, x) in [(0, self.a), (t, self.b)] {
            if !(self.lower_at(k) < x && x < self.upper_at(k)) {
                return Err(Error::Precondition(format!("endpoint {x} at step {k} is not inside the corridor")));
            }
        }
        Ok(())
    }
}

/// Survival weight of one path. Increments are drawn by sequential bridge
/// conditioning so every path ends exactly at `b`.
fn corridor_weight<R: RngCore>(spec: &BridgeSpec, tails: &[f64], rng: &mut R, monitoring: Monitoring) -> f64 {
    let mut s = spec.a;
    let mut weight = 1.0;
    for (k, &var) in spec.variances.iter().enumerate() {
        let rest = tails[k + 1];
        let total = var + rest;
        let mean = var * (spec.b - s) / total;
        let sd = (var * rest / total).sqrt();
        let z: f64 = StandardNormal.sample(rng);
        let next = if rest == 0.0 { spec.b } else { s + mean + sd * z };
        let (l0, l1) = (spec.lower_at(k), spec.lower_at(k + 1));
        let (u0, u1) = (spec.upper_at(k), spec.upper_at(k + 1));
        if next < l1 || next > u1 {
            return 0.0;
        }
        if monitoring == Monitoring::Continuous {
            let mut cross = 0.0;
            if l0.is_finite() && l1.is_finite() {
                cross += (-2.0 * (s - l0) * (next - l1) / var).exp();
            }
            if u0.is_finite() && u1.is_finite() {
                cross += (-2.0 * (u0 - s) * (u1 - next) / var).exp();
            }
            weight *= (1.0 - cross).max(0.0);
        }
        s = next;
    }
    weight
}

pub const MIN_CORRIDOR_PATHS: u64 = 1000;

/// Fraction (or mean survival weight) of bridge paths that stay in the
/// corridor.
pub fn walk_corridor_mc(spec: &BridgeSpec, seed: u64, m: u64, monitoring: Monitoring) -> Result<EstimateCI> {
    spec.validate()?;
    if m < MIN_CORRIDOR_PATHS {
        return Err(Error::Precondition(format!("need at least {MIN_CORRIDOR_PATHS} paths, got {m}")));
    }
    let t = spec.steps();
    // tails[k] = Σ_{j >= k} σ_j²
    let mut tails = vec![0.0; t + 1];
    for k in (0..t).rev() {
        tails[k] = tails[k + 1] + spec.variances[k];
    }
    let weights: Vec<f64> = map_chunks(m, 1 << 13, |c, r| {
        let mut rng = stream(seed, &[c]);
        r.map(|_| corridor_weight(spec, &tails, &mut rng, monitoring)).collect::<Vec<_>>()
    })
    .concat();
    Ok(match monitoring {
        Monitoring::Discrete => {
            EstimateCI::from_proportion(weights.iter().filter(|&&w| w > 0.0).count() as u64, m, seed)
        }
        Monitoring::Continuous => EstimateCI::from_weights(&weights, seed),
    })
}

/// Sampled end-to-end paths (for inspection and the pinning invariant).
pub fn sample_bridge_paths(spec: &BridgeSpec, seed: u64, m: u64) -> Result<Vec<Vec<f64>>> {
    let open = BridgeSpec { lower: Barrier::None, upper: Barrier::None, ..spec.clone() };
    open.validate()?;
    let t = spec.steps();
    let mut tails = vec![0.0; t + 1];
    for k in (0..t).rev() {
        tails[k] = tails[k + 1] + spec.variances[k];
    }
    let mut rng = stream(seed, &[0x9A7B]);
    Ok((0..m)
        .map(|_| {
            let mut s = spec.a;
            let mut path = vec![s];
            for (k, &var) in spec.variances.iter().enumerate() {
                let rest = tails[k + 1];
                let total = var + rest;
                let z: f64 = StandardNormal.sample(&mut rng);
                s += var * (spec.b - s) / total + (var * rest / total).sqrt() * z;
                path.push(s);
            }
            path
        })
        .collect())
}

/// Shape of the lower barrier in a [`CurvedBallot`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LowerShape {
    /// `u_s = min(s, t-s)^α`.
    #[default]
    Rising,
    /// `u_s = 0`.
    Flat,
    /// `u_s = -min(s, t-s)^α`.
    Falling,
}

impl std::str::FromStr for LowerShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rising" => Ok(Self::Rising),
            "flat" => Ok(Self::Flat),
            "falling" => Ok(Self::Falling),
            _ => Err(Error::Config(format!("unknown lower barrier shape {s:?}"))),
        }
    }
}

/// Curved-barrier configuration: lower `u_s = ±min(s, t-s)^α` (or 0), upper
/// `v_s = y + min(s, t-s)^δ`, bridge from `a` to `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvedBallot {
    pub t: usize,
    pub a: f64,
    pub b: f64,
    pub y: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Step variances; `None` means unit.
    pub variances: Option<Vec<f64>>,
    #[serde(default)]
    pub lower: LowerShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallotRatio {
    pub estimate: f64,
    pub se: f64,
    /// `1 - exp(-2ab/σ)`: the flat-barrier Brownian value.
    pub exact_reference: f64,
    /// `P σ / (2ab)`.
    pub ratio: f64,
    pub ratio_se: f64,
    pub d: f64,
    pub sigma: f64,
    pub flags: Vec<String>,
}

impl CurvedBallot {
    /// `min(|y-a|, |y-b|, |a|, |b|)`.
    pub fn d(&self) -> f64 {
        (self.y - self.a).abs().min((self.y - self.b).abs()).min(self.a.abs()).min(self.b.abs())
    }

    pub fn bridge(&self) -> Result<(BridgeSpec, Vec<String>)> {
        if !(self.delta > 0.5 && 0.5 > self.alpha && self.alpha > 0.0) {
            return Err(Error::Config(format!("need δ > 1/2 > α > 0, got α = {}, δ = {}", self.alpha, self.delta)));
        }
        if !(self.y > 2.0 && (1.0..=self.y - 1.0).contains(&self.a) && (1.0..=self.y - 1.0).contains(&self.b)) {
            return Err(Error::Config(format!("a, b must lie in [1, y - 1], got a = {}, b = {}", self.a, self.b)));
        }
        if self.t == 0 {
            return Err(Error::Config("t must be positive".into()));
        }
        let mut flags = Vec::new();
        let tf = self.t as f64;
        if self.y < 10.0 || self.y > tf.powf(0.1) {
            flags.push(format!("y = {} outside [10, t^(1/10) = {:.4}]", self.y, tf.powf(0.1)));
        }
        let gap = |s: usize| s.min(self.t - s) as f64;
        let sign = match self.lower {
            LowerShape::Rising => 1.0,
            LowerShape::Flat => 0.0,
            LowerShape::Falling => -1.0,
        };
        let lower = (0..=self.t).map(|s| sign * gap(s).powf(self.alpha)).collect();
        let upper = (0..=self.t).map(|s| self.y + gap(s).powf(self.delta)).collect();
        let variances = self.variances.clone().unwrap_or_else(|| vec![1.0; self.t]);
        if variances.len() != self.t {
            return Err(Error::Config("variance array length must equal t".into()));
        }
        let spec =
            BridgeSpec { variances, a: self.a, b: self.b, lower: Barrier::Array(lower), upper: Barrier::Array(upper) };
        Ok((spec, flags))
    }
}

/// Discretely monitored corridor probability normalised by `2ab/σ`.
pub fn ballot_asymptotic_ratio(cfg: &CurvedBallot, seed: u64, m: u64) -> Result<BallotRatio> {
    let (spec, flags) = cfg.bridge()?;
    let est = walk_corridor_mc(&spec, seed, m, Monitoring::Discrete)?;
    let sigma = spec.total_variance();
    let scale = sigma / (2.0 * cfg.a * cfg.b);
    Ok(BallotRatio {
        estimate: est.value,
        se: est.se,
        exact_reference: bridge_stay_positive_exact(cfg.a, cfg.b, sigma)?,
        ratio: est.value * scale,
        ratio_se: est.se * scale,
        d: cfg.d(),
        sigma,
        flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionCheck {
    /// `P(M_t <= a, m_t >= -c, B_t ∈ A)`.
    pub lhs: EstimateCI,
    /// `P(m_t >= -c, B_t ∈ A) - P(B_t ∈ A - 2a)`, both terms by Monte Carlo.
    pub rhs: EstimateCI,
    /// Closed form of `P(B_t ∈ A - 2a)`.
    pub shifted_exact: f64,
}

impl ReflectionCheck {
    /// `lhs >= rhs - k · combined SE`.
    pub fn holds(&self, k: f64) -> bool {
        self.lhs.value >= self.rhs.value - k * (self.lhs.se.powi(2) + self.rhs.se.powi(2)).sqrt()
    }
}

/// Brownian paths on `[0, t]` at step 1/64; within each step the bridge
/// maximum and minimum are drawn from their exact marginal laws.
pub fn reflection_bound_mc(a: f64, c: f64, box_a: (f64, f64), t: f64, seed: u64, m: u64) -> Result<ReflectionCheck> {
    if !(a > 0.0 && c > 0.0 && t > 0.0) {
        return Err(Error::Domain("need a, c, t > 0".into()));
    }
    let empty = box_a.0 > box_a.1;
    if !empty && (box_a.0 < -c || box_a.1 > a) {
        return Err(Error::Domain(format!("box {box_a:?} is not inside [-c, a] = [{}, {a}]", -c)));
    }
    if m == 0 {
        return Err(Error::Precondition("need at least one path".into()));
    }
    let steps = (t * 64.0).ceil() as usize;
    let dt = t / steps as f64;
    let sd = dt.sqrt();
    let inside = |x: f64| !empty && x >= box_a.0 && x <= box_a.1;
    let rows: Vec<(f64, f64)> = map_chunks(m, 1 << 12, |ch, r| {
        let mut rng = stream(seed, &[ch, 0x2EF1]);
        r.map(|_| {
            let mut x = 0.0f64;
            let (mut hi, mut lo) = (0.0f64, 0.0f64);
            for _ in 0..steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                let next = x + sd * z;
                let d2 = (next - x) * (next - x);
                let u1: f64 = 1.0 - rng.random::<f64>();
                let u2: f64 = 1.0 - rng.random::<f64>();
                hi = hi.max(0.5 * (x + next + (d2 - 2.0 * dt * u1.ln()).sqrt()));
                lo = lo.min(0.5 * (x + next - (d2 - 2.0 * dt * u2.ln()).sqrt()));
                x = next;
            }
            let in_a = inside(x);
            let lhs = (in_a && hi <= a && lo >= -c) as u8 as f64;
            let shifted = inside(x + 2.0 * a) as u8 as f64;
            let rhs = (in_a && lo >= -c) as u8 as f64 - shifted;
            (lhs, rhs)
        })
        .collect::<Vec<_>>()
    })
    .concat();
    let lhs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let rhs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let st = t.sqrt();
    let shifted_exact =
        if empty { 0.0 } else { crate::special::normal_interval((box_a.0 - 2.0 * a) / st, (box_a.1 - 2.0 * a) / st) };
    Ok(ReflectionCheck {
        lhs: EstimateCI::from_samples(&lhs, seed),
        rhs: EstimateCI::from_samples(&rhs, seed),
        shifted_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_formula_values() {
        assert!((bridge_stay_positive_exact(1.0, 1.0, 2.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert_eq!(
            bridge_stay_positive_exact(2.0, 3.0, 7.0).unwrap(),
            bridge_stay_positive_exact(3.0, 2.0, 7.0).unwrap()
        );
        assert!(bridge_stay_positive_exact(1e-12, 1.0, 1.0).unwrap() < 3e-12);
        assert!(bridge_stay_positive_exact(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn open_corridor_is_certain() {
        let spec = BridgeSpec::unit(20, 0.0, 1.0, Barrier::None, Barrier::None);
        let e = walk_corridor_mc(&spec, 1, 2000, Monitoring::Discrete).unwrap();
        assert_eq!((e.value, e.se), (1.0, 0.0));
    }

    #[test]
    fn paths_are_pinned_at_both_ends() {
        let spec = BridgeSpec {
            variances: vec![0.5, 2.0, 1.0, 0.7],
            a: 1.5,
            b: -2.0,
            lower: Barrier::None,
            upper: Barrier::None,
        };
        for p in sample_bridge_paths(&spec, 3, 100).unwrap() {
            assert_eq!(p[0], 1.5);
            assert!((p[4] + 2.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn endpoint_outside_corridor_is_rejected() {
        let spec = BridgeSpec::unit(10, -1.0, 1.0, Barrier::Scalar(0.0), Barrier::None);
        assert!(matches!(walk_corridor_mc(&spec, 1, 2000, Monitoring::Discrete), Err(Error::Precondition(_))));
    }

    #[test]
    fn curved_shape_preconditions() {
        let good = CurvedBallot {
            t: 400,
            a: 5.0,
            b: 5.0,
            y: 10.0,
            alpha: 0.3,
            delta: 0.6,
            variances: None,
            lower: LowerShape::Rising,
        };
        assert!(good.bridge().is_ok());
        assert!(CurvedBallot { alpha: 0.6, ..good.clone() }.bridge().is_err());
        assert!(CurvedBallot { a: 9.5, ..good }.bridge().is_err());
    }

    #[test]
    fn empty_box_gives_zero() {
        let r = reflection_bound_mc(1.0, 1.0, (1.0, 0.0), 1.0, 2, 500).unwrap();
        assert_eq!(r.lhs.value, 0.0);
        assert!(r.rhs.value <= r.rhs.se);
    }
}

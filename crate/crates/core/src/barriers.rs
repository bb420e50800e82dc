//! Barriers, good-set counting on sampled fields, Paley–Zygmund moment
//! reports and right-tail statistics of the recentred maximum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{map_chunks, pairwise_sum, quantile, wilson_interval, EstimateCI};
use crate::models::{cell_index, unit_grid, FieldSpec};
use crate::rng::{derive_key, keyed_normal, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarrierFamily {
    /// Left tail: walk over blocks `(n0, k]`, `n0 = ⌊y⌋`.
    Thm1,
    /// Right tail: walk from the first prime, `n0 = ⌊y/100⌋`.
    Thm3,
}

impl std::str::FromStr for BarrierFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thm1" => Ok(Self::Thm1),
            "thm3" => Ok(Self::Thm3),
            _ => Err(Error::Config(format!("unknown convention {s:?} (expected thm1 or thm3)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Height `T`, when the config was derived from one.
    pub t: Option<f64>,
    pub n: u32,
    pub n0: i32,
    pub nl: i32,
    pub y: f64,
    pub alpha: f64,
    pub convention: BarrierFamily,
    pub grid_step: f64,
    /// Notes on parameters outside the range where the estimates are proved.
    pub flags: Vec<String>,
}

/// `1 - (3/4) log n / n`.
pub fn slope(n: u32) -> f64 {
    let n = n as f64;
    1.0 - 0.75 * n.ln() / n
}

/// `n - (3/4) log n`.
pub fn recentering_offset(n: u32) -> f64 {
    let n = n as f64;
    n - 0.75 * n.ln()
}

impl WalkConfig {
    pub fn new(convention: BarrierFamily, n: u32, y: f64) -> Result<Self> {
        if !(y >= 0.0 && y.is_finite()) {
            return Err(Error::Config(format!("y = {y} must be finite and nonnegative")));
        }
        if n < 2 {
            return Err(Error::Config("n must be at least 2".into()));
        }
        let nf = n as f64;
        let mut flags = Vec::new();
        let (n0, nl, grid_step) = match convention {
            BarrierFamily::Thm1 => {
                let n0 = y.floor() as i32;
                let nl = n as i32 - n0;
                if y > nf.powf(0.1) {
                    flags.push(format!("y = {y} exceeds n^(1/10) = {:.4}", nf.powf(0.1)));
                }
                if n0 == 0 {
                    flags.push("y < 1: n0 = 0".into());
                }
                (n0, nl, (-((nl - n0) as f64)).exp())
            }
            BarrierFamily::Thm3 => {
                let n0 = (y / 100.0).floor() as i32;
                let nl = (nf - 100f64.ln()).floor() as i32;
                if y < 10.0 || y > nf / nf.ln() {
                    flags.push(format!("y = {y} outside [10, n/log n = {:.4}]", nf / nf.ln()));
                }
                (n0, nl, (-(nl as f64)).exp())
            }
        };
        let cfg = Self { t: None, n, n0, nl, y, alpha: slope(n), convention, grid_step, flags };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `n = ⌊log log T⌋`.
    pub fn from_height(convention: BarrierFamily, t: f64, y: f64) -> Result<Self> {
        if !(t > std::f64::consts::E.exp()) {
            return Err(Error::Config(format!("T = {t} too small for log log T >= 1")));
        }
        let mut cfg = Self::new(convention, t.ln().ln().floor() as u32, y)?;
        cfg.t = Some(t);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n0 >= 0 && self.n0 < self.nl && self.nl <= self.n as i32) {
            return Err(Error::Config(format!(
                "need 0 <= n0 < nL <= n, got n0 = {}, nL = {}, n = {}",
                self.n0, self.nl, self.n
            )));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::Config("grid_step must be positive".into()));
        }
        Ok(())
    }

    /// First field level: thm1 walks start after block `n0`, thm3 walks
    /// include every block from 0.
    pub fn first_level(&self) -> i32 {
        match self.convention {
            BarrierFamily::Thm1 => self.n0 + 1,
            BarrierFamily::Thm3 => 0,
        }
    }

    /// Hierarchical field on `[-1/2, 1/2] ∩ grid_step ℤ` with one level per
    /// block up to `nL`, variances from `variance(k)`.
    pub fn field<F: Fn(i32) -> Result<f64>>(&self, variance: F) -> Result<FieldSpec> {
        let levels: Vec<f64> = (self.first_level()..=self.nl).map(variance).collect::<Result<_>>()?;
        FieldSpec::new(unit_grid(self.grid_step)?, self.first_level(), &levels)
    }
}

/// `f(k - n0)` on `(n0, n/2]`, `f(nL - k)` on `(n/2, nL)`, zero elsewhere.
pub fn symmetrize<F: Fn(f64) -> f64>(f: F, k: i32, n0: i32, nl: i32, n: i32) -> f64 {
    if k <= n0 || k >= nl {
        0.0
    } else if 2 * k <= n {
        f((k - n0) as f64)
    } else {
        f((nl - k) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarrierKind {
    Thm1,
    Thm3,
    Custom,
}

/// Lower and upper barriers over `k_lo..=k_lo + len - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub k_lo: i32,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub generator: BarrierKind,
}

impl BarrierSpec {
    pub fn custom(k_lo: i32, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Config("barrier arrays must be nonempty and of equal length".into()));
        }
        Ok(Self { k_lo, lower, upper, generator: BarrierKind::Custom })
    }

    pub fn k_hi(&self) -> i32 {
        self.k_lo + self.lower.len() as i32 - 1
    }

    /// `(L_k, U_k)`, or `None` outside the range.
    pub fn at(&self, k: i32) -> Option<(f64, f64)> {
        let i = usize::try_from(k - self.k_lo).ok()?;
        Some((*self.lower.get(i)?, self.upper[i]))
    }

    /// Distance by which `value` lies outside `[L_k, U_k]` (negative inside).
    #[inline]
    fn violation(&self, i: usize, value: f64) -> f64 {
        (self.lower[i] - value).max(value - self.upper[i])
    }
}

pub fn barrier_values(config: &WalkConfig) -> Result<BarrierSpec> {
    config.validate()?;
    let (n0, nl, n) = (config.n0, config.nl, config.n as i32);
    let (y, alpha) = (config.y, config.alpha);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    match config.convention {
        BarrierFamily::Thm1 => {
            for k in n0..=nl {
                let drift = alpha * (k - n0) as f64;
                upper.push(y / 10.0 + drift - 10.0 * symmetrize(f64::ln, k, n0, nl, n));
                lower.push(-10.0 * y + drift - symmetrize(|x| x.powf(0.75), k, n0, nl, n));
            }
        }
        BarrierFamily::Thm3 => {
            let nlf = nl as f64;
            for j in n0..=nl {
                if j == nl {
                    let top = recentering_offset(config.n) + y;
                    upper.push(top);
                    lower.push(top - 10.0);
                    continue;
                }
                let jf = j as f64;
                // at j = 0 the logarithm is taken as 0 so that U_{n0} = y + α n0
                let m = j.min(n - j).max(1) as f64;
                upper.push(y + alpha * jf - 10.0 * m.ln());
                lower.push(-10.0 + (alpha + y / nlf) * jf - (j.min(n - j).max(0) as f64).powf(0.75));
            }
        }
    }
    let generator = match config.convention {
        BarrierFamily::Thm1 => BarrierKind::Thm1,
        BarrierFamily::Thm3 => BarrierKind::Thm3,
    };
    Ok(BarrierSpec { k_lo: n0, lower, upper, generator })
}

/// Per grid point, the largest corridor violation over all constrained
/// levels. A point is good with slack `s` iff its violation is `<= s`.
///
/// The pinned start at `first_level - 1` is not constrained; only levels the
/// field actually samples are.
pub fn max_violations(field: &FieldSpec, seed: u64, replica: u64, spec: &BarrierSpec) -> Result<Vec<f64>> {
    check_levels(field, spec)?;
    let mut worst = vec![f64::NEG_INFINITY; field.grid().len()];
    let first = field.first_level();
    field.walk(seed, replica, |k, cur| {
        if k < first {
            return;
        }
        if let Some(i) = usize::try_from(k - spec.k_lo).ok().filter(|&i| i < spec.lower.len()) {
            for (w, &v) in worst.iter_mut().zip(cur) {
                *w = w.max(spec.violation(i, v));
            }
        }
    });
    Ok(worst)
}

fn check_levels(field: &FieldSpec, spec: &BarrierSpec) -> Result<()> {
    let last = field.first_level() + field.n_levels() as i32 - 1;
    if spec.k_lo < field.first_level() - 1 || spec.k_hi() > last {
        return Err(Error::Precondition(format!(
            "field levels {}..={last} do not cover barrier range {}..={}",
            field.first_level(),
            spec.k_lo,
            spec.k_hi()
        )));
    }
    Ok(())
}

/// Number of points with `violation <= slack`.
pub fn count_within(violations: &[f64], slack: f64) -> u64 {
    violations.iter().filter(|&&v| v <= slack).count() as u64
}

/// `#{h : L_k - slack <= path_k(h) <= U_k + slack for all k}`.
pub fn good_set_count(field: &FieldSpec, seed: u64, replica: u64, spec: &BarrierSpec, slack: f64) -> Result<u64> {
    Ok(count_within(&max_violations(field, seed, replica, spec)?, slack))
}

/// Reference count that rebuilds each point's path on its own from the keyed
/// normals, without the run structure used by [`FieldSpec::walk`].
#[allow(clippy::too_many_arguments)]
pub fn brute_force_count(
    grid: &[f64],
    first_level: i32,
    variances: &[f64],
    cell_width: f64,
    seed: u64,
    replica: u64,
    spec: &BarrierSpec,
    slack: f64,
) -> u64 {
    grid.iter()
        .filter(|&&h| {
            let mut s = 0.0;
            let mut ok = true;
            let mut check = |k: i32, s: f64| {
                if let Some((l, u)) = spec.at(k) {
                    ok &= l - slack <= s && s <= u + slack;
                }
            };
            for (l, v) in variances.iter().enumerate() {
                let j = first_level + l as i32;
                let cell = cell_index(h, j, cell_width);
                s += v.sqrt() * keyed_normal(derive_key(seed, &[replica, j as i64 as u64]), cell);
                check(j, s);
            }
            ok
        })
        .count() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMoments {
    pub seed: u64,
    pub mean_count: f64,
    pub second_moment: f64,
    pub pz_lower: f64,
    pub p_any: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub config: WalkConfig,
    /// `E[#𝔊⁺]`.
    pub mean_count: EstimateCI,
    /// `E[(#𝔊⁻)²]`.
    pub second_moment: EstimateCI,
    /// `min(1, mean² / second)`, or 0 when the second moment vanishes.
    pub pz_lower: f64,
    pub pz_raw: f64,
    /// Jackknife standard error and bias of the plug-in ratio.
    pub pz_se: f64,
    pub pz_bias: f64,
    /// Direct `P(#G >= 1)` with no slack.
    pub p_any: EstimateCI,
    pub degenerate: bool,
    pub per_seed: Vec<SeedMoments>,
    pub flags: Vec<String>,
}

impl MomentReport {
    /// `pz_lower - p_any` in units of the combined standard error.
    pub fn pz_excess_se(&self) -> f64 {
        let se = (self.pz_se * self.pz_se + self.p_any.se * self.p_any.se).sqrt();
        if se == 0.0 {
            if self.pz_lower > self.p_any.value {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            (self.pz_lower - self.p_any.value) / se
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ReplicaCounts {
    plus: f64,
    minus: f64,
    any: bool,
}

fn ratio_stats(counts: &[ReplicaCounts]) -> (f64, f64, f64) {
    let m = counts.len() as f64;
    let plus: Vec<f64> = counts.iter().map(|c| c.plus).collect();
    let minus_sq: Vec<f64> = counts.iter().map(|c| c.minus * c.minus).collect();
    let s1 = pairwise_sum(&plus);
    let s2 = pairwise_sum(&minus_sq);
    let ratio = |a: f64, b: f64, n: f64| if b > 0.0 { (a / n).powi(2) / (b / n) } else { 0.0 };
    let full = ratio(s1, s2, m);
    if counts.len() < 2 {
        return (full, 0.0, 0.0);
    }
    let loo: Vec<f64> = plus.iter().zip(&minus_sq).map(|(p, q)| ratio(s1 - p, s2 - q, m - 1.0)).collect();
    let loo_mean = pairwise_sum(&loo) / m;
    let dev: Vec<f64> = loo.iter().map(|r| (r - loo_mean).powi(2)).collect();
    let se = ((m - 1.0) / m * pairwise_sum(&dev)).sqrt();
    (full, se, (m - 1.0) * (loo_mean - full))
}

/// Plug-in Paley–Zygmund ratio `E[#𝔊⁺]² / E[(#𝔊⁻)²]` over `n_replicas`
/// field draws per seed.
pub fn moment_report(
    config: &WalkConfig,
    spec: &BarrierSpec,
    field: &FieldSpec,
    n_replicas: u64,
    seeds: &[u64],
) -> Result<MomentReport> {
    if n_replicas < 1 {
        return Err(Error::Config("replicas must be ≥ 1".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    check_levels(field, spec)?;
    let mut flags = config.flags.clone();
    if n_replicas < 100 {
        flags.push(format!("{n_replicas} replicas per seed is below 100"));
    }
    let mut all = Vec::new();
    let mut per_seed = Vec::new();
    for &seed in seeds {
        let counts: Vec<ReplicaCounts> = map_chunks(n_replicas, 16, |_, r| {
            r.map(|rep| {
                let v = max_violations(field, seed, rep, spec).expect("levels checked");
                ReplicaCounts {
                    plus: count_within(&v, 1.0) as f64,
                    minus: count_within(&v, -1.0) as f64,
                    any: count_within(&v, 0.0) > 0,
                }
            })
            .collect::<Vec<_>>()
        })
        .concat();
        let (pz, _, _) = ratio_stats(&counts);
        let m = counts.len() as f64;
        per_seed.push(SeedMoments {
            seed,
            mean_count: pairwise_sum(&counts.iter().map(|c| c.plus).collect::<Vec<_>>()) / m,
            second_moment: pairwise_sum(&counts.iter().map(|c| c.minus * c.minus).collect::<Vec<_>>()) / m,
            pz_lower: pz.min(1.0),
            p_any: counts.iter().filter(|c| c.any).count() as f64 / m,
        });
        all.extend(counts);
    }
    let seed = seeds[0];
    let plus: Vec<f64> = all.iter().map(|c| c.plus).collect();
    let minus_sq: Vec<f64> = all.iter().map(|c| c.minus * c.minus).collect();
    let mean_count = EstimateCI::from_samples(&plus, seed);
    let second_moment = EstimateCI::from_samples(&minus_sq, seed);
    let (pz_raw, pz_se, pz_bias) = ratio_stats(&all);
    if mean_count.value == 0.0 {
        flags.push("no good points in any replica".into());
    }
    if second_moment.value == 0.0 {
        // no replica had a point in the narrowed corridor: the ratio is undefined
        flags.push("narrowed good set is empty in every replica; no lower bound".into());
    }
    let degenerate = mean_count.value == 0.0 || second_moment.value == 0.0;
    let any = all.iter().filter(|c| c.any).count() as u64;
    Ok(MomentReport {
        config: config.clone(),
        mean_count,
        second_moment,
        pz_lower: pz_raw.min(1.0),
        pz_raw,
        pz_se,
        pz_bias,
        p_any: EstimateCI::from_proportion(any, all.len() as u64, seed),
        degenerate,
        per_seed,
        flags,
    })
}

/// Recentred maxima `max_h field - (n - (3/4) log n)` for `replicas` draws.
pub fn recentred_maxima(field: &FieldSpec, n: u32, seed: u64, replicas: u64) -> Vec<f64> {
    let offset = recentering_offset(n);
    map_chunks(replicas, 8, |_, r| r.map(|rep| field.sample_max(seed, rep) - offset).collect::<Vec<_>>()).concat()
}

/// Field with `n` levels of variance 1/2 on the grid of spacing `e^{-n}`:
/// the Gaussian surrogate for the maximum over a unit interval.
pub fn surrogate_field(n: u32) -> Result<FieldSpec> {
    FieldSpec::new(unit_grid((-(n as f64)).exp())?, 1, &vec![0.5; n as usize])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub y: f64,
    pub exceed: u64,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub usable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// 95% interval for the slope.
    pub ci: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub samples: u64,
    /// Variance scale in the `y²/n` correction; `None` fits the bare
    /// `y e^{-2y}` law.
    pub n: Option<f64>,
    pub right: Vec<TailRow>,
    pub left: Vec<TailRow>,
    pub fit: Option<TailFit>,
    pub degenerate: bool,
    pub flags: Vec<String>,
}

pub const MIN_TAIL_SAMPLES: usize = 10_000;
const MIN_EXCEEDANCES: u64 = 10;

fn tail_row(y: f64, exceed: u64, total: u64) -> TailRow {
    let (lo, hi) = wilson_interval(exceed, total, 1.96);
    TailRow { y, exceed, p_hat: exceed as f64 / total as f64, lo, hi, usable: exceed >= MIN_EXCEEDANCES }
}

/// Empirical tails of recentred maxima on `y_grid` and a weighted fit of
/// `log P(X > y) - log y + y²/n` against `y`.
pub fn tail_statistics(samples: &[f64], n: Option<f64>, y_grid: &[f64]) -> Result<TailReport> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::Precondition(format!("{} samples, at least {MIN_TAIL_SAMPLES} required", samples.len())));
    }
    if y_grid.iter().any(|y| !(*y > 0.0)) {
        return Err(Error::Domain("tail grid must be positive".into()));
    }
    let total = samples.len() as u64;
    let degenerate = samples.iter().all(|&x| x == samples[0]);
    let right: Vec<TailRow> =
        y_grid.iter().map(|&y| tail_row(y, samples.iter().filter(|&&x| x > y).count() as u64, total)).collect();
    let left: Vec<TailRow> =
        y_grid.iter().map(|&y| tail_row(y, samples.iter().filter(|&&x| x < -y).count() as u64, total)).collect();
    let mut flags = Vec::new();
    for r in right.iter().filter(|r| !r.usable) {
        flags.push(format!("y = {}: only {} exceedances", r.y, r.exceed));
    }
    if degenerate {
        flags.push("all samples are equal".into());
    }
    let fit = if degenerate { None } else { weighted_fit(&right, total, n) };
    Ok(TailReport { samples: total, n, right, left, fit, degenerate, flags })
}

fn weighted_fit(rows: &[TailRow], total: u64, n: Option<f64>) -> Option<TailFit> {
    // (y, z, p̂, w)
    let pts: Vec<(f64, f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.usable && r.p_hat < 1.0)
        .map(|r| {
            let z = r.p_hat.ln() - r.y.ln() + n.map_or(0.0, |n| r.y * r.y / n);
            // var(log p̂) ≈ (1 - p) / (N p)
            let w = total as f64 * r.p_hat / (1.0 - r.p_hat);
            (r.y, z, r.p_hat, w)
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let sw: f64 = pts.iter().map(|p| p.3).sum();
    let mx = pts.iter().map(|p| p.3 * p.0).sum::<f64>() / sw;
    let mz = pts.iter().map(|p| p.3 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.3 * (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let coef: Vec<f64> = pts.iter().map(|p| p.3 * (p.0 - mx) / sxx).collect();
    let slope = coef.iter().zip(&pts).map(|(a, p)| a * p.1).sum::<f64>();
    let intercept = mz - slope * mx;
    // exceedance counts at different y share samples:
    // cov(log p̂_i, log p̂_j) ≈ (1/p_lo - 1)/N with p_lo the larger of the two tails
    let mut var = 0.0;
    for (i, pi) in pts.iter().enumerate() {
        for (j, pj) in pts.iter().enumerate() {
            let p_lo = pi.2.max(pj.2);
            var += coef[i] * coef[j] * (1.0 / p_lo - 1.0) / total as f64;
        }
    }
    let slope_se = var.sqrt();
    Some(TailFit {
        slope,
        intercept,
        slope_se,
        ci: (slope - 1.96 * slope_se, slope + 1.96 * slope_se),
        points: pts.len(),
    })
}

/// Draws from the law with survival `P(X > y) = 2e y e^{-2y}` on `y >= 1/2`.
pub fn synthetic_tail_samples(seed: u64, m: u64) -> Vec<f64> {
    use rand::Rng;
    map_chunks(m, 1 << 14, |c, r| {
        let mut rng = stream(seed, &[c, 0x7A11]);
        r.map(|_| invert_synthetic_survival(1.0 - rng.random::<f64>())).collect::<Vec<_>>()
    })
    .concat()
}

/// Solve `log(2e y) - 2y = log u` for `y >= 1/2`, `u ∈ (0, 1]`.
fn invert_synthetic_survival(u: f64) -> f64 {
    let target = u.ln();
    let g = |y: f64| (2.0 * y).ln() + 1.0 - 2.0 * y - target;
    let (mut lo, mut hi) = (0.5, 1.0 - target);
    let mut y = 0.75 - 0.5 * target;
    for _ in 0..100 {
        let gy = g(y);
        if gy > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let step = gy / (1.0 / y - 2.0);
        if step.abs() < 1e-15 * y || hi - lo < 1e-15 {
            break;
        }
        let next = y - step;
        y = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub n: u32,
    pub median: f64,
    pub iqr: f64,
}

pub fn tightness_row(n: u32, samples: &[f64]) -> TightnessRow {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    TightnessRow { n, median: quantile(&s, 0.5), iqr: quantile(&s, 0.75) - quantile(&s, 0.25) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrize_branches() {
        let f = |x: f64| x.powf(0.75);
        assert_eq!(symmetrize(f, 2, 2, 18, 20), 0.0);
        assert!((symmetrize(f, 5, 2, 18, 20) - 3f64.powf(0.75)).abs() < 1e-15);
        assert!((symmetrize(f, 15, 2, 18, 20) - 3f64.powf(0.75)).abs() < 1e-15);
        assert_eq!(symmetrize(f, 18, 2, 18, 20), 0.0);
        // odd n: k = 5 is above n/2 = 4.5
        assert_eq!(symmetrize(|x| x, 5, 1, 8, 9), 3.0);
        assert_eq!(symmetrize(|x| x, 4, 1, 8, 9), 3.0);
    }

    #[test]
    fn thm1_barriers_at_start() {
        let cfg = WalkConfig::new(BarrierFamily::Thm1, 20, 2.5).unwrap();
        assert_eq!((cfg.n0, cfg.nl), (2, 18));
        let b = barrier_values(&cfg).unwrap();
        let (l, u) = b.at(2).unwrap();
        assert!((u - 0.25).abs() < 1e-15 && (l + 25.0).abs() < 1e-15);
        // the α-part is linear: second differences of U + 10 𝒮(log) vanish
        let lin: Vec<f64> = (2..=18).map(|k| b.at(k).unwrap().1 + 10.0 * symmetrize(f64::ln, k, 2, 18, 20)).collect();
        for w in lin.windows(3) {
            assert!((w[2] - 2.0 * w[1] + w[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn thm3_terminal_window() {
        let cfg = WalkConfig::new(BarrierFamily::Thm3, 30, 12.0).unwrap();
        let b = barrier_values(&cfg).unwrap();
        let (l, u) = b.at(cfg.nl).unwrap();
        assert!((u - (30.0 - 0.75 * 30f64.ln() + 12.0)).abs() < 1e-12);
        assert!((u - l - 10.0).abs() < 1e-12);
        assert_eq!(cfg.nl, 25);
        assert!((b.at(0).unwrap().1 - 12.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(matches!(WalkConfig::new(BarrierFamily::Thm1, 4, 3.0), Err(Error::Config(_))));
        assert!(WalkConfig::new(BarrierFamily::Thm1, 10, -1.0).is_err());
    }

    #[test]
    fn vacuous_and_empty_corridors() {
        let field = FieldSpec::new(unit_grid(1.0 / 63.0).unwrap(), 1, &[0.5; 4]).unwrap();
        let open = BarrierSpec::custom(0, vec![f64::NEG_INFINITY; 5], vec![f64::INFINITY; 5]).unwrap();
        assert_eq!(good_set_count(&field, 1, 0, &open, 0.0).unwrap(), 64);
        let mut shut = open.clone();
        shut.lower[2] = 1.0;
        shut.upper[2] = 0.0;
        assert_eq!(good_set_count(&field, 1, 0, &shut, 0.0).unwrap(), 0);
    }

    #[test]
    fn synthetic_inversion_hits_target() {
        for u in [1.0, 0.5, 1e-3, 1e-12] {
            let y = invert_synthetic_survival(u);
            let s = 2.0 * std::f64::consts::E * y * (-2.0 * y).exp();
            assert!((s - u).abs() <= 1e-12 * u.max(1e-300) + 1e-15, "u = {u}: {s}");
        }
    }

    #[test]
    fn constant_counts_give_unit_ratio() {
        let c = vec![ReplicaCounts { plus: 7.0, minus: 7.0, any: true }; 50];
        let (r, se, bias) = ratio_stats(&c);
        assert_eq!(r, 1.0);
        assert_eq!(se, 0.0);
        assert_eq!(bias, 0.0);
    }
}

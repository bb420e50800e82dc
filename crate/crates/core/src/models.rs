//! Random surrogates for the prime-block walk: Steinhaus random Euler
//! products, correlated Gaussian pairs, and a hierarchical Gaussian field over
//! a grid of shifts with an exact-covariance sampler for small grids.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{map_chunks, EstimateCI};
use crate::primes::{BlockKind, PrimePartition};
use crate::rng::{derive_key, keyed_normal, stream};
use crate::special::bvn_rectangle;

/// Primes above this bound are aggregated into an exact-covariance Gaussian
/// in the Steinhaus sampler.
pub const DEFAULT_EXPLICIT_CUTOFF: u64 = 20_000;

struct PrimeTerm {
    p: u64,
    inv_sqrt: f64,
    half_inv: f64,
    // (cos(h log p), sin(h log p)) for each h in the shift set
    rot: Vec<(f64, f64)>,
}

struct SteinhausBlock {
    k: i32,
    terms: Vec<PrimeTerm>,
    // lower Cholesky factor of the aggregated remainder covariance over h
    remainder: Option<DMatrix<f64>>,
}

/// Sampler for `𝒮_k(h) = Σ Re(e^{iθ_p} p^{-1/2-ih} + e^{2iθ_p} p^{-1-2ih}/2)`.
///
/// Primes up to the explicit cutoff get their own uniform phase. The rest of
/// a block is a sum of millions of tiny independent terms and is replaced by
/// a Gaussian vector with the same covariance over the shift set.
pub struct SteinhausSampler {
    h_set: Vec<f64>,
    k_range: RangeInclusive<i32>,
    blocks: Vec<SteinhausBlock>,
}

/// One Steinhaus draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteinhausSample {
    /// Phases of the explicitly sampled primes.
    pub theta: Vec<(u64, f64)>,
    pub h_set: Vec<f64>,
    pub k_lo: i32,
    /// `trajectories[i][k - k_lo]` is `𝒮_k(h_i)`.
    pub trajectories: Vec<Vec<f64>>,
}

impl SteinhausSample {
    /// Increment `𝒴_k(h_i)` recomputed from the stored phases (explicit
    /// primes only).
    pub fn explicit_increment(&self, i: usize, k: i32) -> f64 {
        let h = self.h_set[i];
        let mut acc = 0.0;
        let (lo, hi) = PrimePartition::edges(k);
        for &(p, th) in &self.theta {
            if p > lo && p <= hi {
                let pf = p as f64;
                let a = th - h * pf.ln();
                acc += a.cos() / pf.sqrt() + (2.0 * a).cos() / (2.0 * pf);
            }
        }
        acc
    }
}

impl SteinhausSampler {
    pub fn new(partition: &PrimePartition, h_set: &[f64], k_range: RangeInclusive<i32>, cutoff: u64) -> Result<Self> {
        if h_set.is_empty() {
            return Err(Error::EmptyRange("empty shift set".into()));
        }
        let mut blocks = Vec::new();
        for k in k_range.clone() {
            if partition.kind(k) != BlockKind::Explicit {
                return Err(Error::BlockOutOfRange { block: k, needed_limit: PrimePartition::edges(k).1 });
            }
            let mut terms = Vec::new();
            let hn = h_set.len();
            let mut cov = vec![0.0; hn * hn];
            let mut any_rest = false;
            partition.for_each_prime(k, |p| {
                let pf = p as f64;
                let l = pf.ln();
                if p <= cutoff {
                    terms.push(PrimeTerm {
                        p,
                        inv_sqrt: 1.0 / pf.sqrt(),
                        half_inv: 0.5 / pf,
                        rot: h_set.iter().map(|h| ((h * l).cos(), (h * l).sin())).collect(),
                    });
                } else {
                    any_rest = true;
                    let a = 0.5 / pf;
                    let b = 0.125 / (pf * pf);
                    for i in 0..hn {
                        cov[i * hn + i] += a + b;
                        for j in 0..i {
                            let d = (h_set[i] - h_set[j]) * l;
                            let c = a * d.cos() + b * (2.0 * d).cos();
                            cov[i * hn + j] += c;
                            cov[j * hn + i] += c;
                        }
                    }
                }
            })?;
            let remainder =
                if any_rest { Some(cholesky_with_jitter(DMatrix::from_row_slice(hn, hn, &cov))?) } else { None };
            blocks.push(SteinhausBlock { k, terms, remainder });
        }
        Ok(Self { h_set: h_set.to_vec(), k_range, blocks })
    }

    pub fn h_set(&self) -> &[f64] {
        &self.h_set
    }

    /// Number of blocks sampled.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Increments `𝒴_k(h_i)` into `out[i * len + (k - k_lo)]`. Explicit
    /// phases are passed to `on_theta`.
    pub fn increments_with<R: RngCore, F: FnMut(u64, f64)>(&self, rng: &mut R, out: &mut [f64], mut on_theta: F) {
        let hn = self.h_set.len();
        let nk = self.blocks.len();
        out.iter_mut().for_each(|x| *x = 0.0);
        let mut z = vec![0.0; hn];
        for (b, block) in self.blocks.iter().enumerate() {
            for term in &block.terms {
                let theta = rng.random::<f64>() * 2.0 * PI;
                on_theta(term.p, theta);
                let (s, c) = theta.sin_cos();
                for (i, &(ch, sh)) in term.rot.iter().enumerate() {
                    // cos(θ - h log p) and its double angle
                    let x = c * ch + s * sh;
                    out[i * nk + b] += x * term.inv_sqrt + (2.0 * x * x - 1.0) * term.half_inv;
                }
            }
            if let Some(l) = &block.remainder {
                for zi in z.iter_mut() {
                    *zi = StandardNormal.sample(rng);
                }
                for i in 0..hn {
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += l[(i, j)] * z[j];
                    }
                    out[i * nk + b] += acc;
                }
            }
        }
    }

    pub fn increments<R: RngCore>(&self, rng: &mut R, out: &mut [f64]) {
        self.increments_with(rng, out, |_, _| {});
    }

    /// One full draw keyed by `(seed, replica)`.
    pub fn sample(&self, seed: u64, replica: u64) -> SteinhausSample {
        let mut rng = stream(seed, &[replica]);
        let hn = self.h_set.len();
        let nk = self.blocks.len();
        let mut inc = vec![0.0; hn * nk];
        let mut theta = Vec::new();
        self.increments_with(&mut rng, &mut inc, |p, t| theta.push((p, t)));
        let trajectories = (0..hn)
            .map(|i| {
                let mut run = 0.0;
                inc[i * nk..(i + 1) * nk]
                    .iter()
                    .map(|x| {
                        run += x;
                        run
                    })
                    .collect()
            })
            .collect();
        SteinhausSample { theta, h_set: self.h_set.clone(), k_lo: *self.k_range.start(), trajectories }
    }

    pub fn block_indices(&self) -> Vec<i32> {
        self.blocks.iter().map(|b| b.k).collect()
    }
}

/// Single Steinhaus draw over blocks `0..=k_max`.
pub fn sample_steinhaus(seed: u64, partition: &PrimePartition, h_set: &[f64], k_max: i32) -> Result<SteinhausSample> {
    let s = SteinhausSampler::new(partition, h_set, 0..=k_max, DEFAULT_EXPLICIT_CUTOFF)?;
    Ok(s.sample(seed, 0))
}

/// Lower Cholesky factor, adding diagonal jitter if the matrix is only
/// numerically semidefinite.
pub fn cholesky_with_jitter(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut jitter = 0.0;
    for _ in 0..12 {
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += jitter;
        }
        if let Some(c) = a.cholesky() {
            return Ok(c.l());
        }
        jitter = if jitter == 0.0 { 1e-14 * scale } else { jitter * 10.0 };
    }
    Err(Error::Domain("covariance matrix is not positive semidefinite".into()))
}

/// Two correlated Gaussian walks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianWalkPair {
    pub delta_h: f64,
    pub k_lo: i32,
    pub increments: Vec<(f64, f64)>,
    pub paths: Vec<(f64, f64)>,
}

/// Draw increments with covariance `[[s², ρ], [ρ, s²]]` per block using the
/// closed-form square root `(√(s²+ρ) Z1 ± √(s²-ρ) Z2)/√2`.
pub fn gaussian_pair_increment<R: RngCore>(rng: &mut R, s2: f64, rho: f64) -> (f64, f64) {
    let a = ((s2 + rho).max(0.0) * 0.5).sqrt();
    let b = ((s2 - rho).max(0.0) * 0.5).sqrt();
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    (a * z1 + b * z2, a * z1 - b * z2)
}

fn check_psd(k: i32, s2: f64, rho: f64) -> Result<()> {
    if rho.abs() > s2 {
        return Err(Error::CovarianceNotPsd { block: k, rho: rho.abs(), variance: s2 });
    }
    Ok(())
}

/// Gaussian pair walk over `moments[i] = (s², ρ)` for blocks `k_lo + i`.
pub fn sample_gaussian_pair(seed: u64, delta_h: f64, k_lo: i32, moments: &[(f64, f64)]) -> Result<GaussianWalkPair> {
    for (i, &(s2, rho)) in moments.iter().enumerate() {
        check_psd(k_lo + i as i32, s2, rho)?;
    }
    let mut rng = stream(seed, &[delta_h.to_bits()]);
    let increments: Vec<(f64, f64)> =
        moments.iter().map(|&(s2, rho)| gaussian_pair_increment(&mut rng, s2, rho)).collect();
    let mut run = (0.0, 0.0);
    let paths = increments
        .iter()
        .map(|&(a, b)| {
            run = (run.0 + a, run.1 + b);
            run
        })
        .collect();
    Ok(GaussianWalkPair { delta_h, k_lo, increments, paths })
}

/// `√((s²+|ρ|)/(s²-|ρ|))`.
pub fn decoupling_factor(s2: f64, rho: f64) -> f64 {
    ((s2 + rho.abs()) / (s2 - rho.abs())).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecouplingCheck {
    /// `P((N, N') ∈ A×B)` in closed form.
    pub coupled_exact: f64,
    pub coupled_mc: EstimateCI,
    /// Same box for two independent `N(0, s²+|ρ|)` variables.
    pub decoupled: f64,
    pub factor: f64,
    pub bound: f64,
}

/// Compare a correlated pair's box probability with the decoupled bound.
pub fn decoupling_check(
    s2: f64,
    rho: f64,
    box_a: (f64, f64),
    box_b: (f64, f64),
    seed: u64,
    m: u64,
) -> Result<DecouplingCheck> {
    check_psd(0, s2, rho)?;
    let sd = s2.sqrt();
    let coupled_exact = bvn_rectangle((box_a.0 / sd, box_a.1 / sd), (box_b.0 / sd, box_b.1 / sd), rho / s2);
    let wide = (s2 + rho.abs()).sqrt();
    let decoupled = crate::special::normal_interval(box_a.0 / wide, box_a.1 / wide)
        * crate::special::normal_interval(box_b.0 / wide, box_b.1 / wide);
    let hits: u64 = map_chunks(m, 1 << 14, |c, r| {
        let mut rng = stream(seed, &[c]);
        let mut n = 0u64;
        for _ in r {
            let (x, y) = gaussian_pair_increment(&mut rng, s2, rho);
            if x > box_a.0 && x <= box_a.1 && y > box_b.0 && y <= box_b.1 {
                n += 1;
            }
        }
        n
    })
    .into_iter()
    .sum();
    let factor = decoupling_factor(s2, rho);
    Ok(DecouplingCheck {
        coupled_exact,
        coupled_mc: EstimateCI::from_proportion(hits, m, seed),
        decoupled,
        factor,
        bound: factor * decoupled,
    })
}

/// Block variances, exact where sieved.
pub fn level_variances(partition: &PrimePartition, levels: RangeInclusive<i32>) -> Result<Vec<f64>> {
    levels.map(|k| partition.best_sk2(k)).collect()
}

struct Level {
    sd: f64,
    // run r covers grid indices run_start[r]..run_start[r + 1], cell cells[r]
    run_start: Vec<u32>,
    cells: Vec<u64>,
}

impl Level {
    fn cell_at(&self, i: usize) -> u64 {
        self.cells[self.run_start.partition_point(|&s| s as usize <= i) - 1]
    }
}

/// Cell width, in units of `e^{-j}`, used by default.
pub const DEFAULT_CELL_WIDTH: f64 = 2.0;

/// Cell of `h` at level `j` for cells of width `width · e^{-j}`.
pub fn cell_index(h: f64, j: i32, width: f64) -> u64 {
    ((h + 0.5) * (j as f64).exp() / width).floor().max(0.0) as u64
}

/// Hierarchical field: level `j` adds one Gaussian of variance `s_j²` per
/// cell `⌊(h + 1/2) e^j / c⌋`, shared by all grid points in the cell.
pub struct FieldSpec {
    grid: Vec<f64>,
    first_level: i32,
    cell_width: f64,
    variances: Vec<f64>,
    levels: Vec<Level>,
}

/// A sampled field: `paths[i * levels + l]` is the walk at grid point `i`
/// after level `first_level + l`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchicalField {
    pub grid: Vec<f64>,
    pub first_level: i32,
    pub n_levels: usize,
    pub paths: Vec<f64>,
}

impl HierarchicalField {
    pub fn path(&self, i: usize) -> &[f64] {
        &self.paths[i * self.n_levels..(i + 1) * self.n_levels]
    }

    /// Final value at each grid point.
    pub fn terminal(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.path(i).last().copied().unwrap_or(0.0)).collect()
    }
}

/// Largest grid the field samplers accept.
pub const MAX_GRID: usize = 10_000_000;

/// Uniform grid on `[-1/2, 1/2]` with the given spacing.
pub fn unit_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::Domain("grid step must be positive".into()));
    }
    let n = (1.0 / step + 1e-9).floor() + 1.0;
    if n > MAX_GRID as f64 {
        return Err(Error::Resource(format!("grid of {n} points exceeds {MAX_GRID}")));
    }
    Ok((0..n as usize).map(|i| -0.5 + i as f64 * step).collect())
}

impl FieldSpec {
    /// Levels `first_level, first_level + 1, ...` with the given variances
    /// and the default cell width.
    pub fn new(grid: Vec<f64>, first_level: i32, variances: &[f64]) -> Result<Self> {
        Self::with_cell_width(grid, first_level, variances, DEFAULT_CELL_WIDTH)
    }

    pub fn with_cell_width(grid: Vec<f64>, first_level: i32, variances: &[f64], cell_width: f64) -> Result<Self> {
        if grid.len() > MAX_GRID {
            return Err(Error::Resource(format!("grid of {} points exceeds {MAX_GRID}", grid.len())));
        }
        if grid.is_empty() {
            return Err(Error::EmptyRange("empty grid".into()));
        }
        if !(cell_width > 0.0 && cell_width.is_finite()) {
            return Err(Error::Domain("cell width must be positive".into()));
        }
        let levels = variances
            .iter()
            .enumerate()
            .map(|(l, &v)| {
                let j = first_level + l as i32;
                let mut run_start = Vec::new();
                let mut cells = Vec::new();
                for (i, &h) in grid.iter().enumerate() {
                    let cell = cell_index(h, j, cell_width);
                    if cells.last() != Some(&cell) {
                        run_start.push(i as u32);
                        cells.push(cell);
                    }
                }
                run_start.push(grid.len() as u32);
                Level { sd: v.max(0.0).sqrt(), run_start, cells }
            })
            .collect();
        Ok(Self { grid, first_level, cell_width, variances: variances.to_vec(), levels })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Covariance of the terminal values at grid points `a` and `b`.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        self.levels
            .iter()
            .zip(&self.variances)
            .filter(|(lv, _)| lv.cell_at(a) == lv.cell_at(b))
            .map(|(_, &v)| v.max(0.0))
            .sum()
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn first_level(&self) -> i32 {
        self.first_level
    }

    /// Number of Gaussian draws per replica.
    pub fn draws_per_replica(&self) -> usize {
        self.levels.iter().map(|l| l.cells.len()).sum()
    }

    /// Drive a replica level by level. `visit(k, values)` is called first with
    /// `k = first_level - 1` and all zeros, then after each level `k`.
    pub fn walk<F: FnMut(i32, &[f64])>(&self, seed: u64, replica: u64, mut visit: F) {
        let mut cur = vec![0.0; self.grid.len()];
        visit(self.first_level - 1, &cur);
        for (l, level) in self.levels.iter().enumerate() {
            let j = self.first_level + l as i32;
            let key = derive_key(seed, &[replica, j as i64 as u64]);
            for (r, &cell) in level.cells.iter().enumerate() {
                let z = level.sd * keyed_normal(key, cell);
                let (a, b) = (level.run_start[r] as usize, level.run_start[r + 1] as usize);
                for v in &mut cur[a..b] {
                    *v += z;
                }
            }
            visit(j, &cur);
        }
    }

    pub fn sample(&self, seed: u64, replica: u64) -> HierarchicalField {
        let g = self.grid.len();
        let nl = self.levels.len();
        let mut paths = vec![0.0; g * nl];
        let mut l = 0usize;
        self.walk(seed, replica, |k, cur| {
            if k >= self.first_level {
                for (i, v) in cur.iter().enumerate() {
                    paths[i * nl + l] = *v;
                }
                l += 1;
            }
        });
        HierarchicalField { grid: self.grid.clone(), first_level: self.first_level, n_levels: nl, paths }
    }

    /// Maximum of the terminal values for one replica.
    pub fn sample_max(&self, seed: u64, replica: u64) -> f64 {
        let mut out = f64::NEG_INFINITY;
        let last = self.first_level + self.levels.len() as i32 - 1;
        self.walk(seed, replica, |k, cur| {
            if k == last {
                out = cur.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
        });
        out
    }

    /// Number of leading levels shared by grid points `a` and `b`.
    pub fn shared_levels(&self, a: usize, b: usize) -> usize {
        self.levels.iter().take_while(|lv| lv.cell_at(a) == lv.cell_at(b)).count()
    }
}

/// Field sampler with the true covariance `Σ_j ρ_j(|h - h'|)` of the terminal
/// values, by Cholesky factorisation. Only for small grids.
pub struct ExactFieldSampler {
    grid: Vec<f64>,
    chol: DMatrix<f64>,
}

pub const EXACT_GRID_LIMIT: usize = 4096;

impl ExactFieldSampler {
    /// `rho(j, δ)` gives the block covariance at shift `δ`.
    pub fn new<F>(grid: Vec<f64>, levels: RangeInclusive<i32>, rho: F) -> Result<Self>
    where
        F: Fn(i32, f64) -> Result<f64>,
    {
        let n = grid.len();
        if n > EXACT_GRID_LIMIT {
            return Err(Error::Resource(format!("exact sampler limited to {EXACT_GRID_LIMIT} points")));
        }
        let cov_at = |d: f64| -> Result<f64> {
            let mut acc = 0.0;
            for j in levels.clone() {
                acc += rho(j, d.abs())?;
            }
            Ok(acc)
        };
        let uniform = n > 2 && grid.windows(3).all(|w| ((w[2] - w[1]) - (w[1] - w[0])).abs() < 1e-12);
        if uniform {
            let step = grid[1] - grid[0];
            let by_lag: Vec<f64> = (0..n).map(|d| cov_at(d as f64 * step)).collect::<Result<_>>()?;
            Self::from_covariance(grid, |i, j| by_lag[i.abs_diff(j)])
        } else {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let c = cov_at(grid[i] - grid[j])?;
                    m[(i, j)] = c;
                    m[(j, i)] = c;
                }
            }
            Ok(Self { grid, chol: cholesky_with_jitter(m)? })
        }
    }

    /// Sampler for an arbitrary covariance `cov(i, j)` between grid indices.
    pub fn from_covariance<F: Fn(usize, usize) -> f64>(grid: Vec<f64>, cov: F) -> Result<Self> {
        let n = grid.len();
        if n > EXACT_GRID_LIMIT {
            return Err(Error::Resource(format!("exact sampler limited to {EXACT_GRID_LIMIT} points")));
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let c = cov(i, j);
                m[(i, j)] = c;
                m[(j, i)] = c;
            }
        }
        Ok(Self { grid, chol: cholesky_with_jitter(m)? })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn sample(&self, seed: u64, replica: u64) -> Vec<f64> {
        let mut rng = stream(seed, &[replica, 0xE4AC7]);
        let z = DVector::from_fn(self.grid.len(), |_, _| StandardNormal.sample(&mut rng));
        (&self.chol * z).iter().copied().collect()
    }

    pub fn sample_max(&self, seed: u64, replica: u64) -> f64 {
        self.sample(seed, replica).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Steinhaus-vs-Gaussian box probability comparison for one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseenReport {
    pub k: i32,
    pub delta_h: f64,
    pub steinhaus: EstimateCI,
    pub gaussian: f64,
    pub gap: f64,
}

/// `|P̂((𝒴_k(0), 𝒴_k(δ)) ∈ A×B) - P((𝒩_k, 𝒩'_k) ∈ A×B)|`.
pub fn berry_esseen_gap(
    partition: &PrimePartition,
    seed: u64,
    k: i32,
    box_a: (f64, f64),
    box_b: (f64, f64),
    delta_h: f64,
    m: u64,
) -> Result<BerryEsseenReport> {
    let sampler = SteinhausSampler::new(partition, &[0.0, delta_h], k..=k, DEFAULT_EXPLICIT_CUTOFF)?;
    let s2 = partition.sk2(k, crate::primes::MomentMode::Exact)?.s_k2;
    let rho = partition.rho_k(k, delta_h.abs(), crate::primes::MomentMode::Exact)?;
    check_psd(k, s2, rho)?;
    let sd = s2.sqrt();
    let gaussian = bvn_rectangle((box_a.0 / sd, box_a.1 / sd), (box_b.0 / sd, box_b.1 / sd), rho / s2);
    let inside = |x: f64, b: (f64, f64)| x > b.0 && x <= b.1;
    let hits: u64 = map_chunks(m, 1 << 12, |c, r| {
        let mut rng = stream(seed, &[k as u64, c]);
        let mut out = [0.0; 2];
        let mut n = 0u64;
        for _ in r {
            sampler.increments(&mut rng, &mut out);
            if inside(out[0], box_a) && inside(out[1], box_b) {
                n += 1;
            }
        }
        n
    })
    .into_iter()
    .sum();
    let steinhaus = EstimateCI::from_proportion(hits, m, seed);
    Ok(BerryEsseenReport { k, delta_h, steinhaus, gaussian, gap: (steinhaus.value - gaussian).abs() })
}

/// Monte-Carlo moments of Steinhaus block increments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncrementStats {
    pub k: i32,
    pub exact_variance: f64,
    pub mean: EstimateCI,
    pub variance: EstimateCI,
}

/// Sample variance of `𝒴_k(0)` for each block in `k_range`.
pub fn steinhaus_increment_stats(
    partition: &PrimePartition,
    k_range: RangeInclusive<i32>,
    seed: u64,
    m: u64,
) -> Result<Vec<IncrementStats>> {
    let sampler = SteinhausSampler::new(partition, &[0.0], k_range.clone(), DEFAULT_EXPLICIT_CUTOFF)?;
    let nk = sampler.len();
    let chunks: Vec<Vec<f64>> = map_chunks(m, 1 << 12, |c, r| {
        let mut rng = stream(seed, &[c]);
        let mut out = vec![0.0; nk];
        let mut rows = Vec::with_capacity((r.end - r.start) as usize * nk);
        for _ in r {
            sampler.increments(&mut rng, &mut out);
            rows.extend_from_slice(&out);
        }
        rows
    });
    let all: Vec<f64> = chunks.concat();
    k_range
        .enumerate()
        .map(|(b, k)| {
            let xs: Vec<f64> = all.iter().skip(b).step_by(nk).copied().collect();
            let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
            Ok(IncrementStats {
                k,
                exact_variance: partition.sk2(k, crate::primes::MomentMode::Exact)?.s_k2,
                mean: EstimateCI::from_samples(&xs, seed),
                variance: EstimateCI::from_samples(&sq, seed),
            })
        })
        .collect()
}

/// Exponential moment `E[exp(λ(𝒮_k - 𝒮_j))]` and the constant `C` with
/// `E = exp((k - j + C)/4)` at `λ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpMoment {
    pub j: i32,
    pub k: i32,
    pub lambda: f64,
    pub estimate: EstimateCI,
    pub measured_c: f64,
}

pub fn exponential_moment(
    partition: &PrimePartition,
    j: i32,
    k: i32,
    lambda: f64,
    seed: u64,
    m: u64,
) -> Result<ExpMoment> {
    let sampler = SteinhausSampler::new(partition, &[0.0], (j + 1)..=k, DEFAULT_EXPLICIT_CUTOFF)?;
    let nk = sampler.len();
    let vals: Vec<f64> = map_chunks(m, 1 << 12, |c, r| {
        let mut rng = stream(seed, &[c, 0xE7]);
        let mut out = vec![0.0; nk];
        r.map(|_| {
            sampler.increments(&mut rng, &mut out);
            (lambda * out.iter().sum::<f64>()).exp()
        })
        .collect::<Vec<f64>>()
    })
    .concat();
    let estimate = EstimateCI::from_samples(&vals, seed);
    let measured_c = 4.0 * estimate.value.ln() / (lambda * lambda) - (k - j) as f64;
    Ok(ExpMoment { j, k, lambda, estimate, measured_c })
}

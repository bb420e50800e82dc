//! Prime generation and the log-log block decomposition.
//!
//! Block `k` holds the primes with `e^{k-1} < log p <= e^k`; block 0 is `{2}`
//! and block 1 is `{3, 5, 7, 11, 13}`. Blocks below the sieve limit are
//! enumerated from a mod-30 wheel bitset. Blocks above it are handled by
//! prime-number-theorem integrals in the variable `u = log log t`.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::special::cosine_integral;

const WHEEL: [u64; 8] = [1, 7, 11, 13, 17, 19, 23, 29];
const NO_BIT: u8 = 0xFF;
const BIT_OF: [u8; 30] = {
    let mut t = [NO_BIT; 30];
    let mut i = 0;
    while i < 8 {
        t[WHEEL[i] as usize] = i as u8;
        i += 1;
    }
    t
};

/// Primes above 5 packed one byte per 30 integers.
#[derive(Debug, Clone)]
pub struct WheelBitset {
    limit: u64,
    bytes: Vec<u8>,
}

impl WheelBitset {
    fn with_limit(limit: u64) -> Self {
        Self { limit, bytes: vec![0u8; (limit / 30 + 1) as usize] }
    }

    #[inline]
    fn insert(&mut self, p: u64) {
        let b = BIT_OF[(p % 30) as usize];
        debug_assert!(b != NO_BIT);
        self.bytes[(p / 30) as usize] |= 1 << b;
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Visit primes in `(lo, hi]`, ascending.
    pub fn for_each_in<F: FnMut(u64)>(&self, lo: u64, hi: u64, mut f: F) {
        let hi = hi.min(self.limit);
        if hi <= lo {
            return;
        }
        for p in [2u64, 3, 5] {
            if p > lo && p <= hi {
                f(p);
            }
        }
        let first = (lo / 30) as usize;
        let last = (hi / 30) as usize;
        for idx in first..=last.min(self.bytes.len() - 1) {
            let mut byte = self.bytes[idx];
            let base = idx as u64 * 30;
            while byte != 0 {
                let b = byte.trailing_zeros() as usize;
                byte &= byte - 1;
                let p = base + WHEEL[b];
                if p > lo && p <= hi {
                    f(p);
                }
            }
        }
    }

    pub fn count_in(&self, lo: u64, hi: u64) -> u64 {
        let mut c = 0;
        self.for_each_in(lo, hi, |_| c += 1);
        c
    }
}

/// Segmented odd-only sieve of Eratosthenes into a wheel bitset.
pub fn sieve_wheel(limit: u64) -> Result<WheelBitset> {
    if limit < 2 {
        return Err(Error::EmptyRange(format!("sieve limit {limit} < 2")));
    }
    let mut out = WheelBitset::with_limit(limit);
    let root = (limit as f64).sqrt() as u64 + 1;
    let base = small_primes(root);
    const SEG: u64 = 1 << 18; // odd numbers per segment
    let mut buf = vec![true; SEG as usize];
    // segment covers odd numbers lo + 2i + 1 for i in [0, SEG)
    let mut lo = 0u64;
    while lo <= limit {
        buf.iter_mut().for_each(|b| *b = true);
        let hi = lo + 2 * SEG; // exclusive
        for &p in base.iter().skip(1) {
            let pp = p * p;
            if pp >= hi {
                break;
            }
            let mut start = if pp >= lo { pp } else { lo.div_ceil(p) * p };
            if start % 2 == 0 {
                start += p;
            }
            let mut i = ((start - lo - 1) / 2) as usize;
            let step = p as usize;
            while i < SEG as usize {
                buf[i] = false;
                i += step;
            }
        }
        for (i, &is_prime) in buf.iter().enumerate() {
            let n = lo + 2 * i as u64 + 1;
            if n > limit {
                break;
            }
            if is_prime && n >= 7 {
                out.insert(n);
            }
        }
        lo = hi;
    }
    Ok(out)
}

fn small_primes(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// All primes up to `limit`, ascending.
pub fn sieve_primes(limit: u64) -> Result<Vec<u64>> {
    let w = sieve_wheel(limit)?;
    let mut v = Vec::new();
    w.for_each_in(0, limit, |p| v.push(p));
    Ok(v)
}

/// Largest integer `m` with `ln m <= e^k`, saturating at `u64::MAX`.
pub fn block_edge(k: i32) -> u64 {
    let bound = E.powi(k);
    let guess = bound.exp();
    if !guess.is_finite() || guess >= 1.8e19 {
        return u64::MAX;
    }
    let mut m = guess.floor() as u64;
    while m > 1 && (m as f64).ln() > bound {
        m -= 1;
    }
    while ((m + 1) as f64).ln() <= bound {
        m += 1;
    }
    m
}

/// Whether `p` belongs to block `k`.
pub fn in_block(p: u64, k: i32) -> bool {
    let l = (p as f64).ln();
    l > E.powi(k - 1) && l <= E.powi(k)
}

/// How a block's sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Every prime of the block is below the sieve limit.
    Explicit,
    /// The block straddles the sieve limit.
    Partial,
    /// The block lies entirely above the sieve limit.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMode {
    Exact,
    Pnt,
}

/// Variance of a block increment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockMoments {
    pub k: i32,
    pub s_k2: f64,
    pub mode: MomentMode,
    /// Set when the block holds no primes.
    pub empty: bool,
    /// Bound on the part of the prime-square sum that was integrated rather
    /// than summed.
    pub squares_tail_bound: f64,
}

#[derive(Debug, Clone)]
enum Source {
    Wheel(Arc<WheelBitset>),
    Lists(Arc<BTreeMap<i32, Vec<u64>>>),
}

/// Primes grouped into log-log blocks. Immutable and cheap to clone.
#[derive(Debug, Clone)]
pub struct PrimePartition {
    sieve_limit: u64,
    source: Source,
}

impl PrimePartition {
    /// Sieve all primes up to `limit` and partition them.
    pub fn sieve(limit: u64) -> Result<Self> {
        let w = sieve_wheel(limit)?;
        Ok(Self { sieve_limit: limit, source: Source::Wheel(Arc::new(w)) })
    }

    /// Partition from explicit per-block lists. Blocks not listed are treated
    /// as unsieved.
    pub fn from_blocks(sieve_limit: u64, blocks: BTreeMap<i32, Vec<u64>>) -> Result<Self> {
        for (&k, list) in &blocks {
            if k < 0 {
                return Err(Error::Config(format!("negative block index {k}")));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!("block {k} is not strictly increasing")));
            }
            if let Some(&p) = list.iter().find(|&&p| !in_block(p, k) || p > sieve_limit) {
                return Err(Error::Config(format!("{p} does not belong to block {k}")));
            }
        }
        Ok(Self { sieve_limit, source: Source::Lists(Arc::new(blocks)) })
    }

    pub fn sieve_limit(&self) -> u64 {
        self.sieve_limit
    }

    /// Exclusive lower and inclusive upper integer edges of block `k`.
    pub fn edges(k: i32) -> (u64, u64) {
        (block_edge(k - 1), block_edge(k))
    }

    pub fn kind(&self, k: i32) -> BlockKind {
        if let Source::Lists(map) = &self.source {
            if map.contains_key(&k) {
                return BlockKind::Explicit;
            }
            return if block_edge(k - 1) >= self.sieve_limit { BlockKind::Analytic } else { BlockKind::Partial };
        }
        let (lo, hi) = Self::edges(k);
        if hi <= self.sieve_limit {
            BlockKind::Explicit
        } else if lo >= self.sieve_limit {
            BlockKind::Analytic
        } else {
            BlockKind::Partial
        }
    }

    /// Largest block index that is fully sieved.
    pub fn max_explicit_block(&self) -> i32 {
        let mut k = 0;
        while self.kind(k + 1) == BlockKind::Explicit {
            k += 1;
        }
        k
    }

    fn require_explicit(&self, k: i32) -> Result<()> {
        if k < 0 {
            return Err(Error::Domain(format!("block index {k} < 0")));
        }
        if self.kind(k) != BlockKind::Explicit {
            return Err(Error::BlockOutOfRange { block: k, needed_limit: block_edge(k) });
        }
        Ok(())
    }

    /// Visit the primes of an explicit block in ascending order.
    pub fn for_each_prime<F: FnMut(u64)>(&self, k: i32, f: F) -> Result<()> {
        self.require_explicit(k)?;
        self.visit_sieved(k, f);
        Ok(())
    }

    /// Visit whatever part of block `k` lies below the sieve limit.
    fn visit_sieved<F: FnMut(u64)>(&self, k: i32, mut f: F) {
        match &self.source {
            Source::Wheel(w) => {
                let (lo, hi) = Self::edges(k);
                w.for_each_in(lo, hi.min(self.sieve_limit), f);
            }
            Source::Lists(map) => {
                if let Some(list) = map.get(&k) {
                    list.iter().copied().for_each(&mut f);
                }
            }
        }
    }

    /// The primes of block `k`.
    pub fn block_primes(&self, k: i32) -> Result<Vec<u64>> {
        let mut v = Vec::new();
        self.for_each_prime(k, |p| v.push(p))?;
        Ok(v)
    }

    /// Explicit blocks concatenated in order.
    pub fn explicit_primes(&self) -> Vec<u64> {
        let mut v = Vec::new();
        for k in 0..=self.max_explicit_block() {
            self.visit_sieved(k, |p| v.push(p));
        }
        v
    }

    /// `s_k^2 = Σ 1/(2p) + 1/(8p^2)` over block `k`.
    pub fn sk2(&self, k: i32, mode: MomentMode) -> Result<BlockMoments> {
        match mode {
            MomentMode::Exact => {
                self.require_explicit(k)?;
                let mut acc = Neumaier::default();
                let mut count = 0u64;
                self.visit_sieved(k, |p| {
                    let pf = p as f64;
                    acc.add(0.5 / pf + 0.125 / (pf * pf));
                    count += 1;
                });
                Ok(BlockMoments { k, s_k2: acc.sum(), mode, empty: count == 0, squares_tail_bound: 0.0 })
            }
            MomentMode::Pnt => {
                if k < 1 {
                    return Err(Error::Domain("prime-number-theorem mode needs k >= 1".into()));
                }
                let (sq, bound) = self.squares_term(k, 0.0);
                Ok(BlockMoments { k, s_k2: 0.5 + sq, mode, empty: false, squares_tail_bound: bound })
            }
        }
    }

    /// `ρ_k(δ) = Σ cos(δ log p)/(2p) + cos(2δ log p)/(8p^2)` over block `k`.
    pub fn rho_k(&self, k: i32, delta_h: f64, mode: MomentMode) -> Result<f64> {
        if delta_h.is_nan() || delta_h < 0.0 {
            return Err(Error::Domain(format!("delta_h must be >= 0, got {delta_h}")));
        }
        match mode {
            MomentMode::Exact => {
                self.require_explicit(k)?;
                let mut acc = Neumaier::default();
                self.visit_sieved(k, |p| {
                    let pf = p as f64;
                    let l = delta_h * pf.ln();
                    acc.add((l).cos() * 0.5 / pf + (2.0 * l).cos() * 0.125 / (pf * pf));
                });
                Ok(acc.sum())
            }
            MomentMode::Pnt => {
                if k < 1 {
                    return Err(Error::Domain("prime-number-theorem mode needs k >= 1".into()));
                }
                Ok(pnt_cos_integral(k, delta_h) + self.squares_term(k, delta_h).0)
            }
        }
    }

    /// `ε_j`: `s_j^2 - ρ_j` below the branching scale `log(1/δ)`, `ρ_j` above.
    pub fn epsilon_j(&self, j: i32, delta_h: f64, mode: MomentMode) -> Result<f64> {
        if delta_h.is_nan() || delta_h <= 0.0 {
            return Err(Error::Domain("epsilon_j needs delta_h > 0".into()));
        }
        let rho = self.rho_k(j, delta_h, mode)?;
        if (j as f64) <= (1.0 / delta_h).ln() {
            Ok(self.sk2(j, mode)?.s_k2 - rho)
        } else {
            Ok(rho)
        }
    }

    /// Variance in exact mode where the block is sieved, otherwise from the
    /// prime number theorem.
    pub fn best_sk2(&self, k: i32) -> Result<f64> {
        let mode = if self.kind(k) == BlockKind::Explicit { MomentMode::Exact } else { MomentMode::Pnt };
        Ok(self.sk2(k, mode)?.s_k2)
    }

    /// Covariance counterpart of [`Self::best_sk2`].
    pub fn best_rho(&self, k: i32, delta_h: f64) -> Result<f64> {
        let mode = if self.kind(k) == BlockKind::Explicit { MomentMode::Exact } else { MomentMode::Pnt };
        self.rho_k(k, delta_h.abs(), mode)
    }

    /// Prime-square part `Σ cos(2δ log p)/(8p^2)`: summed over sieved primes,
    /// integrated with density `dt/log t` above the limit. Returns the value
    /// and a bound on the integrated part.
    fn squares_term(&self, k: i32, delta_h: f64) -> (f64, f64) {
        let mut acc = Neumaier::default();
        self.visit_sieved(k, |p| {
            let pf = p as f64;
            acc.add((2.0 * delta_h * pf.ln()).cos() * 0.125 / (pf * pf));
        });
        let (lo, _) = Self::edges(k);
        let w_lo = (lo.max(self.sieve_limit) as f64).ln().max(E.powi(k - 1));
        let w_hi = E.powi(k);
        if w_lo >= w_hi {
            return (acc.sum(), 0.0);
        }
        // t = e^w: ∫ cos(2δ log t) / (8 t^2 log t) dt = ∫ cos(2δw) e^{-w} / (8w) dw
        let g = GaussLegendre::new(16);
        let panels = ((w_hi - w_lo) * (1.0 + delta_h)).ceil() as usize + 4;
        let v: f64 = g.integrate_panels(w_lo, w_hi, panels, |w| (2.0 * delta_h * w).cos() * (-w).exp() / (8.0 * w));
        let bound: f64 = g.integrate_panels(w_lo, w_hi, panels, |w| (-w).exp() / (8.0 * w));
        (acc.sum() + v, bound)
    }

    /// Deviation of exact block variances from the asymptotic value, and a
    /// fitted rate `c` in `|s_k^2 - s_k^2(pnt)| ≈ C e^{-c √k}`.
    pub fn decay_report(&self) -> Result<DecayReport> {
        let mut rows = Vec::new();
        for k in 1..=self.max_explicit_block() {
            let exact = self.sk2(k, MomentMode::Exact)?.s_k2;
            let pnt = self.sk2(k, MomentMode::Pnt)?.s_k2;
            rows.push(DecayRow { k, exact, pnt, deviation: (exact - pnt).abs() });
        }
        let pts: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.deviation > 0.0).map(|r| ((r.k as f64).sqrt(), r.deviation.ln())).collect();
        let rate = if pts.len() >= 2 {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Some(-sxy / sxx)
        } else {
            None
        };
        Ok(DecayReport { rows, rate })
    }

    /// Write the explicit blocks to the binary cache format.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(b"ZXLB1");
        out.extend_from_slice(&self.sieve_limit.to_le_bytes());
        let mut ks: Vec<i32> = (0..=self.max_explicit_block()).collect();
        if let Source::Lists(map) = &self.source {
            ks = map.keys().copied().collect();
        }
        for k in ks {
            let mut primes = Vec::new();
            self.visit_sieved(k, |p| primes.push(p));
            put_varint(&mut out, zigzag(k as i64));
            put_varint(&mut out, primes.len() as u64);
            let mut prev = 0u64;
            for p in primes {
                put_varint(&mut out, p - prev);
                prev = p;
            }
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&out)?;
        Ok(())
    }

    /// Load a partition written by [`Self::write_cache`].
    pub fn read_cache(path: &Path) -> Result<Self> {
        let mut data = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut data)?;
        Self::decode_cache(&data)
    }

    fn decode_cache(data: &[u8]) -> Result<Self> {
        if data.len() < 13 || &data[..5] != b"ZXLB1" {
            return Err(Error::Cache("bad magic".into()));
        }
        let limit = u64::from_le_bytes(data[5..13].try_into().unwrap());
        let mut pos = 13;
        let mut wheel = WheelBitset::with_limit(limit.max(2));
        let mut blocks = BTreeMap::new();
        while pos < data.len() {
            let k = unzigzag(get_varint(data, &mut pos)?) as i32;
            let count = get_varint(data, &mut pos)?;
            let mut prev = 0u64;
            let mut list = Vec::with_capacity(count.min(1 << 20) as usize);
            for _ in 0..count {
                let p = prev + get_varint(data, &mut pos)?;
                if p <= prev && prev != 0 {
                    return Err(Error::Cache("non-increasing primes".into()));
                }
                if p > limit || !in_block(p, k) {
                    return Err(Error::Cache(format!("prime {p} outside block {k}")));
                }
                prev = p;
                list.push(p);
            }
            blocks.insert(k, list);
        }
        let contiguous = blocks.keys().copied().eq(0..blocks.len() as i32);
        if contiguous {
            for list in blocks.values() {
                for &p in list {
                    if p >= 7 {
                        wheel.insert(p);
                    }
                }
            }
            return Ok(Self { sieve_limit: limit, source: Source::Wheel(Arc::new(wheel)) });
        }
        Self::from_blocks(limit, blocks)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayRow {
    pub k: i32,
    pub exact: f64,
    pub pnt: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub rate: Option<f64>,
}

/// `½ ∫_{k-1}^{k} cos(δ e^u) du`, the prime-number-theorem covariance of
/// block `k`.
pub fn pnt_cos_integral(k: i32, delta_h: f64) -> f64 {
    if delta_h == 0.0 {
        return 0.5;
    }
    let u0 = (k - 1) as f64;
    let u1 = k as f64;
    let v0 = delta_h * u0.exp();
    let v1 = delta_h * u1.exp();
    let zeros = (v1 - v0) / PI;
    if zeros > 20_000.0 {
        // ∫ cos(v)/v dv between the endpoints
        return 0.5 * (cosine_integral(v1) - cosine_integral(v0));
    }
    // panel edges at the zeros of cos(δ e^u), refined to width <= 0.25 in u
    let mut edges = vec![u0];
    let first = ((v0 / PI) - 0.5).ceil().max(0.0) as u64;
    let mut j = first;
    loop {
        let v = (j as f64 + 0.5) * PI;
        if v >= v1 {
            break;
        }
        if v > v0 {
            edges.push((v / delta_h).ln());
        }
        j += 1;
    }
    edges.push(u1);
    let g = GaussLegendre::new(16);
    let mut acc = 0.0;
    for w in edges.windows(2) {
        let pieces = ((w[1] - w[0]) / 0.25).ceil().max(1.0) as usize;
        acc += g.integrate_panels(w[0], w[1], pieces, |u| (delta_h * u.exp()).cos());
    }
    0.5 * acc
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.c
    }
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(v: u64) -> i64 {
    ((v >> 1) as i64) ^ -((v & 1) as i64)
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn get_varint(data: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    let mut shift = 0;
    loop {
        let b = *data.get(*pos).ok_or_else(|| Error::Cache("truncated varint".into()))?;
        *pos += 1;
        if shift >= 64 {
            return Err(Error::Cache("varint overflow".into()));
        }
        v |= ((b & 0x7F) as u64) << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
        shift += 7;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn small_sieves() {
        assert_eq!(sieve_primes(10).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(sieve_primes(2).unwrap(), vec![2]);
        assert!(matches!(sieve_primes(1), Err(Error::EmptyRange(_))));
        let p = sieve_primes(100).unwrap();
        assert_eq!(p.len(), 25);
        assert_eq!(*p.last().unwrap(), 97);
    }

    #[test]
    fn sieve_matches_trial_division_across_segments() {
        let limit = 1_200_000;
        let p = sieve_primes(limit).unwrap();
        let oracle: Vec<u64> = (2..=limit).filter(|&n| trial_division(n)).collect();
        assert_eq!(p, oracle);
    }

    #[test]
    fn first_blocks() {
        let part = PrimePartition::sieve(2000).unwrap();
        assert_eq!(part.block_primes(0).unwrap(), vec![2]);
        assert_eq!(part.block_primes(1).unwrap(), vec![3, 5, 7, 11, 13]);
        assert!(!part.block_primes(1).unwrap().contains(&17));
        assert_eq!(part.kind(2), BlockKind::Explicit);
        assert_eq!(part.kind(3), BlockKind::Partial);
        assert_eq!(part.kind(4), BlockKind::Analytic);
        assert!(matches!(part.block_primes(3), Err(Error::BlockOutOfRange { block: 3, .. })));
    }

    #[test]
    fn block_edges_are_exact() {
        assert_eq!(block_edge(-1), 1);
        assert_eq!(block_edge(0), 2);
        assert_eq!(block_edge(1), 15);
        assert_eq!(block_edge(2), 1618);
        assert_eq!(block_edge(3), 528_491_311);
    }

    #[test]
    fn exact_variance_of_block_one() {
        let part = PrimePartition::sieve(100).unwrap();
        let oracle: f64 = [3.0f64, 5.0, 7.0, 11.0, 13.0].iter().map(|p| 0.5 / p + 0.125 / (p * p)).sum();
        let m = part.sk2(1, MomentMode::Exact).unwrap();
        assert!((m.s_k2 - oracle).abs() < 1e-15);
        assert!((m.s_k2 - 0.445_223_9).abs() < 1e-6);
        assert_eq!(part.rho_k(1, 0.0, MomentMode::Exact).unwrap(), m.s_k2);
    }

    #[test]
    fn rho_of_block_one_at_unit_shift() {
        let part = PrimePartition::sieve(100).unwrap();
        let oracle: f64 = [3.0f64, 5.0, 7.0, 11.0, 13.0]
            .iter()
            .map(|p| p.ln().cos() / (2.0 * p) + (2.0 * p.ln()).cos() / (8.0 * p * p))
            .sum();
        let v = part.rho_k(1, 1.0, MomentMode::Exact).unwrap();
        assert!((v - oracle).abs() < 1e-15);
        assert!((v - (-0.034_530_782_281_613_02)).abs() < 1e-14, "{v}");
    }

    #[test]
    fn empty_artificial_block() {
        let mut blocks = BTreeMap::new();
        blocks.insert(2, vec![]);
        let part = PrimePartition::from_blocks(2000, blocks).unwrap();
        let m = part.sk2(2, MomentMode::Exact).unwrap();
        assert_eq!(m.s_k2, 0.0);
        assert!(m.empty);
    }

    #[test]
    fn from_blocks_rejects_misplaced_primes() {
        let mut blocks = BTreeMap::new();
        blocks.insert(1, vec![3, 17]);
        assert!(PrimePartition::from_blocks(100, blocks).is_err());
    }

    #[test]
    fn pnt_variance_is_near_half() {
        let part = PrimePartition::sieve(100).unwrap();
        let m = part.sk2(6, MomentMode::Pnt).unwrap();
        assert!((m.s_k2 - 0.5).abs() < 0.05);
        assert!(part.sk2(0, MomentMode::Pnt).is_err());
    }

    #[test]
    fn pnt_covariance_matches_cosine_integral() {
        for &(k, d) in &[(2, 0.3), (5, 1.0), (8, 0.01), (6, 5.0)] {
            let u0 = (k - 1) as f64;
            let u1 = k as f64;
            let oracle = 0.5 * (cosine_integral(d * u1.exp()) - cosine_integral(d * u0.exp()));
            let v = pnt_cos_integral(k, d);
            assert!((v - oracle).abs() < 1e-11, "k={k} d={d}: {v} vs {oracle}");
        }
    }

    #[test]
    fn epsilon_branches() {
        let part = PrimePartition::sieve(2000).unwrap();
        let d = 0.05; // log(1/d) ≈ 3.0
        let e1 = part.epsilon_j(1, d, MomentMode::Exact).unwrap();
        let s = part.sk2(1, MomentMode::Exact).unwrap().s_k2;
        let r = part.rho_k(1, d, MomentMode::Exact).unwrap();
        assert_eq!(e1, s - r);
        let e5 = part.epsilon_j(5, d, MomentMode::Pnt).unwrap();
        assert_eq!(e5, part.rho_k(5, d, MomentMode::Pnt).unwrap());
        assert!(part.epsilon_j(1, 0.0, MomentMode::Exact).is_err());
        assert!(part.epsilon_j(1, 1e-6, MomentMode::Exact).unwrap().abs() < 1e-9);
    }

    #[test]
    fn cache_round_trip() {
        let part = PrimePartition::sieve(50_000).unwrap();
        let dir = std::env::temp_dir().join(format!("zxlb-cache-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.bin");
        part.write_cache(&path).unwrap();
        let back = PrimePartition::read_cache(&path).unwrap();
        assert_eq!(back.sieve_limit(), 50_000);
        assert_eq!(back.explicit_primes(), part.explicit_primes());
        assert_eq!(back.sk2(2, MomentMode::Exact).unwrap(), part.sk2(2, MomentMode::Exact).unwrap());
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'Y';
        assert!(PrimePartition::decode_cache(&bytes).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn varint_round_trip() {
        for v in [0u64, 1, 127, 128, 300, u64::MAX] {
            let mut out = Vec::new();
            put_varint(&mut out, v);
            let mut pos = 0;
            assert_eq!(get_varint(&out, &mut pos).unwrap(), v);
        }
        for v in [-3i64, 0, 5, i64::MIN] {
            assert_eq!(unzigzag(zigzag(v)), v);
        }
    }
}

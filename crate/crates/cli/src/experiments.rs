use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use num_complex::Complex64;
use serde::Serialize;

use crate::output::{json_document, Cell, Csv, Sink};
use crate::{BallotArgs, BarrierArgs, Command, Resolved, Status, TailSource};
use zxlb_core::ballot::{
    ballot_asymptotic_ratio, bridge_stay_positive_exact, walk_corridor_mc, Barrier, BridgeSpec, CurvedBallot,
    Monitoring,
};
use zxlb_core::barriers::{
    barrier_values, moment_report, recentred_maxima, surrogate_field, synthetic_tail_samples, tail_statistics,
    BarrierFamily, WalkConfig,
};
use zxlb_core::dirichlet::{partial_sums, smoothed_euler_product, Convention, EulerKernel};
use zxlb_core::models::{
    berry_esseen_gap, decoupling_check, exponential_moment, steinhaus_increment_stats, SteinhausSampler, MAX_GRID,
};
use zxlb_core::mollifier::{certify, ApproximationParams};
use zxlb_core::primes::{block_edge, MomentMode, PrimePartition};
use zxlb_core::zeta::{max_log_abs_zeta, recentering, zeta_eval};

pub struct Context {
    pub sink: Sink,
    pub sieve_cache: Option<PathBuf>,
}

pub const CACHE_ENV: &str = "ZXLB_CACHE_DIR";

impl Context {
    /// `--sieve-cache`, else `$ZXLB_CACHE_DIR/primes-<limit>.zxlb`.
    fn cache_path(&self, limit: u64) -> Option<PathBuf> {
        self.sieve_cache
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).map(|d| PathBuf::from(d).join(format!("primes-{limit}.zxlb"))))
    }

    /// Partition sieved to exactly `limit`, through the cache when one is set.
    fn partition(&self, limit: u64) -> Result<PrimePartition> {
        let Some(path) = self.cache_path(limit) else {
            return Ok(PrimePartition::sieve(limit)?);
        };
        if path.exists() {
            let cached = PrimePartition::read_cache(&path)?;
            if cached.sieve_limit() == limit {
                return Ok(cached);
            }
        }
        let fresh = PrimePartition::sieve(limit)?;
        write_cache(&fresh, &path)?;
        Ok(fresh)
    }
}

fn write_cache(p: &PrimePartition, path: &std::path::Path) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    p.write_cache(tmp.path())?;
    tmp.persist(path)?;
    Ok(())
}

pub fn execute(cfg: &Resolved, ctx: &Context) -> Result<Status> {
    match &cfg.command {
        Command::SieveCache(a) => sieve_cache(cfg, ctx, a.limit),
        Command::Walk(a) => {
            if a.k_max > 3 {
                bail!("k_max = {} needs primes beyond {}", a.k_max, block_edge(3));
            }
            let part = ctx.partition(block_edge(a.k_max.max(0)))?;
            let conv = match a.convention {
                BarrierFamily::Thm1 => Convention::Thm1 { n0: a.n0 },
                BarrierFamily::Thm3 => Convention::Thm3,
            };
            let mut csv = Csv::new(cfg, &["t", "h", "k", "S_k"])?;
            for &h in &a.h {
                let w = partial_sums(a.t, h, a.k_min, a.k_max, &part, conv)?;
                for (i, v) in w.values.iter().enumerate() {
                    csv.row(&[Cell::F(a.t), Cell::F(h), Cell::I((a.k_min + i as i32) as i64), Cell::F(*v)]);
                }
            }
            ctx.sink.write(&csv.into_bytes())?;
            Ok(Status::Ok)
        }
        Command::EulerCheck(a) => {
            #[derive(Serialize)]
            struct Record {
                t: f64,
                h: f64,
                #[serde(rename = "X")]
                x: f64,
                value_re: f64,
                value_im: f64,
                abs_err: f64,
                refinement_change: f64,
            }
            let x = a.x.unwrap_or(std::f64::consts::E.exp());
            let kernel = EulerKernel::new(a.kernel_order);
            let zeta = |s: Complex64| zeta_eval(s, 1e-8).map(|z| z.value);
            let records =
                a.t.iter()
                    .map(|&t| {
                        let v = smoothed_euler_product(t, a.h, x, &kernel, zeta, a.tol)?;
                        Ok(Record {
                            t,
                            h: a.h,
                            x,
                            value_re: v.value.re,
                            value_im: v.value.im,
                            abs_err: (v.value - 1.0).norm(),
                            refinement_change: v.refinement_change,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
            #[derive(Serialize)]
            struct Out {
                records: Vec<Record>,
            }
            let bad: Vec<f64> = records.iter().filter(|r| r.abs_err > 0.05).map(|r| r.t).collect();
            ctx.sink.write(&json_document(cfg, &Out { records })?)?;
            Ok(if bad.is_empty() { Status::Ok } else { Status::Violated(format!("|value - 1| > 0.05 at t = {bad:?}")) })
        }
        Command::ZetaMax(a) => {
            let mut csv = Csv::new(cfg, &["t", "h_star", "max_log_abs", "recentering"])?;
            for &t in &a.t {
                let step = a.step.unwrap_or(std::f64::consts::PI / t.max(3.0).ln());
                let m = max_log_abs_zeta(t, a.half_width, step, a.depth)?;
                csv.row(&[Cell::F(t), Cell::F(m.h_star), Cell::F(m.max_log_abs), Cell::F(recentering(t))]);
            }
            ctx.sink.write(&csv.into_bytes())?;
            Ok(Status::Ok)
        }
        Command::ModelSample(a) => {
            let part = ctx.partition(block_edge(a.k_max.clamp(0, 3)))?;
            let sampler = SteinhausSampler::new(&part, &a.h, 0..=a.k_max, a.cutoff)?;
            let mut csv = Csv::new(cfg, &["replica", "h", "k", "S_k"])?;
            for rep in 0..cfg.replicas {
                let s = sampler.sample(cfg.seed, rep);
                for (i, traj) in s.trajectories.iter().enumerate() {
                    for (j, v) in traj.iter().enumerate() {
                        csv.row(&[Cell::U(rep), Cell::F(s.h_set[i]), Cell::I((s.k_lo + j as i32) as i64), Cell::F(*v)]);
                    }
                }
            }
            ctx.sink.write(&csv.into_bytes())?;
            Ok(Status::Ok)
        }
        Command::ModelVerify(a) => model_verify(cfg, ctx, a.k_max, a.delta_h),
        Command::BarrierDump(w) => {
            let config = walk_config(w)?;
            let spec = barrier_values(&config)?;
            let mut csv = Csv::new(cfg, &["k", "L_k", "U_k"])?;
            for k in spec.k_lo..=spec.k_hi() {
                let (l, u) = spec.at(k).expect("in range");
                csv.row(&[Cell::I(k as i64), Cell::F(l), Cell::F(u)]);
            }
            ctx.sink.write(&csv.into_bytes())?;
            Ok(Status::Ok)
        }
        Command::Moments(m) => {
            if cfg.replicas < 1 {
                bail!("replicas must be ≥ 1");
            }
            let config = walk_config(&m.walk)?;
            let spec = barrier_values(&config)?;
            let points = (1.0 / config.grid_step).floor() + 1.0;
            let grid_max = m.grid_max.unwrap_or(MAX_GRID);
            if points > grid_max as f64 {
                bail!("grid of {points} points exceeds grid_max = {grid_max}");
            }
            let part = ctx.partition(m.sieve_limit)?;
            let field = config.field(|k| part.best_sk2(k))?;
            let seeds: Vec<u64> = (0..m.groups.max(1)).map(|g| cfg.seed.wrapping_add(g)).collect();
            let report = moment_report(&config, &spec, &field, cfg.replicas, &seeds)?;
            ctx.sink.write(&json_document(cfg, &report)?)?;
            let excess = report.pz_excess_se();
            Ok(if !report.degenerate && excess > 3.0 {
                Status::Violated(format!("pz_lower exceeds P(#G >= 1) by {excess:.2} combined SE"))
            } else {
                Status::Ok
            })
        }
        Command::Tail(t) => {
            let (samples, n) = match t.source {
                TailSource::Synthetic => (synthetic_tail_samples(cfg.seed, cfg.replicas), None),
                TailSource::Field => {
                    let n = t.n.unwrap_or(10);
                    let field = surrogate_field(n)?;
                    (recentred_maxima(&field, n, cfg.seed, cfg.replicas), Some(n as f64))
                }
            };
            let report = tail_statistics(&samples, n, &t.y_grid)?;
            let mut csv = Csv::new(cfg, &["y", "p_hat", "lo", "hi"])?;
            for r in &report.right {
                csv.row(&[Cell::F(r.y), Cell::F(r.p_hat), Cell::F(r.lo), Cell::F(r.hi)]);
            }
            let json = json_document(cfg, &report)?;
            match &ctx.sink {
                Sink::Stdout => {
                    ctx.sink.write(&csv.into_bytes())?;
                    eprint!("{}", String::from_utf8_lossy(&json));
                }
                file => {
                    file.write(&csv.into_bytes())?;
                    file.sibling("fit.json").write(&json)?;
                }
            }
            Ok(Status::Ok)
        }
        Command::Ballot(b) => ballot(cfg, ctx, b),
        Command::MollifierCertify(a) => {
            let params = ApproximationParams::new(a.delta, a.a)?;
            let cert = certify(params, &a.nu, &a.window)?;
            ctx.sink.write(&json_document(cfg, &cert)?)?;
            Ok(if cert.items_hold() {
                Status::Ok
            } else {
                Status::Violated("a sandwich item or coefficient bound failed".into())
            })
        }
    }
}

fn walk_config(w: &BarrierArgs) -> Result<WalkConfig> {
    let conv = w.convention.unwrap_or(BarrierFamily::Thm1);
    let y = w.y.ok_or_else(|| anyhow!("y is required (flag --y or config key y)"))?;
    Ok(match (w.big_t, w.n) {
        (Some(_), Some(_)) => bail!("give either T or n, not both"),
        (Some(t), None) => WalkConfig::from_height(conv, t, y)?,
        (None, Some(n)) => WalkConfig::new(conv, n, y)?,
        (None, None) => bail!("n or T is required"),
    })
}

fn sieve_cache(cfg: &Resolved, ctx: &Context, limit: u64) -> Result<Status> {
    let path = ctx.cache_path(limit).ok_or_else(|| anyhow!("no cache path: pass --sieve-cache or set {CACHE_ENV}"))?;
    let part = PrimePartition::sieve(limit)?;
    write_cache(&part, &path)?;
    #[derive(Serialize)]
    struct Block {
        k: i32,
        primes: usize,
        s_k2: f64,
    }
    #[derive(Serialize)]
    struct Out {
        path: String,
        sieve_limit: u64,
        blocks: Vec<Block>,
    }
    let blocks = (0..=part.max_explicit_block())
        .map(|k| Ok(Block { k, primes: part.block_primes(k)?.len(), s_k2: part.sk2(k, MomentMode::Exact)?.s_k2 }))
        .collect::<Result<Vec<_>>>()?;
    let out = Out { path: path.display().to_string(), sieve_limit: limit, blocks };
    ctx.sink.write(&json_document(cfg, &out)?)?;
    Ok(Status::Ok)
}

fn model_verify(cfg: &Resolved, ctx: &Context, k_max: i32, delta_h: f64) -> Result<Status> {
    if !(0..=3).contains(&k_max) {
        bail!("k_max must be in 0..=3");
    }
    let part = ctx.partition(block_edge(k_max))?;
    let m = cfg.replicas;
    let increments = steinhaus_increment_stats(&part, 0..=k_max, cfg.seed, m)?;
    let berry_esseen = (0..=k_max)
        .map(|k| berry_esseen_gap(&part, cfg.seed.wrapping_add(1), k, (0.0, 1.0), (-0.5, 0.5), delta_h, m))
        .collect::<zxlb_core::Result<Vec<_>>>()?;
    let k = k_max.max(1);
    let s2 = part.sk2(k, MomentMode::Exact)?.s_k2;
    let rho = part.rho_k(k, delta_h, MomentMode::Exact)?;
    let decoupling = decoupling_check(s2, rho, (0.0, 1.0), (0.0, 1.0), cfg.seed.wrapping_add(2), m)?;
    let exp_moment = exponential_moment(&part, 0, k_max, 1.0, cfg.seed.wrapping_add(3), m)?;
    #[derive(Serialize)]
    struct Out<'a> {
        increments: &'a [zxlb_core::models::IncrementStats],
        berry_esseen: Vec<zxlb_core::models::BerryEsseenReport>,
        decoupling: zxlb_core::models::DecouplingCheck,
        exponential_moment: zxlb_core::models::ExpMoment,
    }
    let out = Out { increments: &increments, berry_esseen, decoupling, exponential_moment: exp_moment };
    ctx.sink.write(&json_document(cfg, &out)?)?;
    let off: Vec<i32> = increments
        .iter()
        .filter(|s| (s.variance.value - s.exact_variance).abs() > 4.0 * s.variance.se)
        .map(|s| s.k)
        .collect();
    Ok(if off.is_empty() {
        Status::Ok
    } else {
        Status::Violated(format!("increment variance off by more than 4 SE at k = {off:?}"))
    })
}

fn ballot(cfg: &Resolved, ctx: &Context, b: &BallotArgs) -> Result<Status> {
    #[derive(Serialize)]
    struct Out {
        estimate: f64,
        se: f64,
        exact_reference: f64,
        ratio: f64,
        ratio_se: f64,
        monitoring: Monitoring,
        flags: Vec<String>,
    }
    let out = match (b.alpha, b.delta, b.y) {
        (Some(alpha), Some(delta), Some(y)) => {
            let curved = CurvedBallot { t: b.t, a: b.a, b: b.b, y, alpha, delta, variances: None, lower: b.lower };
            let r = ballot_asymptotic_ratio(&curved, cfg.seed, cfg.replicas)?;
            Out {
                estimate: r.estimate,
                se: r.se,
                exact_reference: r.exact_reference,
                ratio: r.ratio,
                ratio_se: r.ratio_se,
                monitoring: Monitoring::Discrete,
                flags: r.flags,
            }
        }
        (None, None, None) => {
            let spec = BridgeSpec::unit(b.t, b.a, b.b, Barrier::Scalar(0.0), Barrier::None);
            let est = walk_corridor_mc(&spec, cfg.seed, cfg.replicas, Monitoring::Continuous)?;
            let sigma = b.t as f64;
            let scale = sigma / (2.0 * b.a * b.b);
            Out {
                estimate: est.value,
                se: est.se,
                exact_reference: bridge_stay_positive_exact(b.a, b.b, sigma)?,
                ratio: est.value * scale,
                ratio_se: est.se * scale,
                monitoring: Monitoring::Continuous,
                flags: Vec::new(),
            }
        }
        _ => bail!("--alpha, --delta and --y go together"),
    };
    ctx.sink.write(&json_document(cfg, &out)?)?;
    Ok(Status::Ok)
}

//! `zxlb`: experiment runner. Every artifact embeds the resolved config, and
//! `zxlb replay <file>` reruns it.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use config::KeyValues;
use output::{Sink, CONFIG_PREFIX};
use zxlb_core::ballot::LowerShape;
use zxlb_core::barriers::BarrierFamily;

#[derive(Parser)]
#[command(name = "zxlb", version, about = "Prime-block walks, barrier moments and ballot estimates")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Top,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo replicas (default depends on the command).
    #[arg(long, global = true)]
    replicas: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat key=value file (keys T, n, y, convention, replicas, seed, grid_max).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Binary prime cache to read, or to write after sieving.
    #[arg(long, global = true)]
    sieve_cache: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Top {
    /// Run an experiment (the `run` word is optional).
    Run {
        #[command(subcommand)]
        command: Command,
    },
    /// Rerun the config embedded in an earlier output file.
    Replay { file: PathBuf },
    #[command(flatten)]
    Direct(Command),
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Sieve and write the binary prime cache.
    SieveCache(SieveCacheArgs),
    /// Partial sums S_k(t + h) from explicit primes (CSV t,h,k,S_k).
    Walk(WalkArgs),
    /// Smoothed Euler-product identity (JSON records).
    EulerCheck(EulerCheckArgs),
    /// Short-interval maximum of log|zeta| (CSV t,h_star,max_log_abs,recentering).
    ZetaMax(ZetaMaxArgs),
    /// Steinhaus trajectories (CSV replica,h,k,S_k).
    ModelSample(ModelSampleArgs),
    /// Monte-Carlo vs closed-form gaps of the random models (JSON).
    ModelVerify(ModelVerifyArgs),
    /// Barrier values (CSV k,L_k,U_k).
    BarrierDump(BarrierArgs),
    /// Good-set moments and the Paley-Zygmund ratio (JSON).
    Moments(MomentsArgs),
    /// Recentred-maximum tails (CSV y,p_hat,lo,hi and a JSON fit).
    Tail(TailArgs),
    /// Ballot probability for a pinned walk (JSON).
    Ballot(BallotArgs),
    /// Band-limited majorant/minorant certificate (JSON).
    MollifierCertify(MollifierArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SieveCacheArgs {
    #[arg(long, default_value_t = 600_000_000)]
    pub limit: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct WalkArgs {
    #[arg(long)]
    pub t: f64,
    /// Shifts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    pub h: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub k_min: i32,
    #[arg(long, default_value_t = 3)]
    pub k_max: i32,
    #[arg(long, default_value = "thm3")]
    pub convention: BarrierFamily,
    /// Last excluded block for the thm1 convention.
    #[arg(long, default_value_t = 0)]
    pub n0: i32,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct EulerCheckArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1000.0, 5000.0])]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub h: f64,
    /// Euler-product cutoff; e^e by default.
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub kernel_order: u32,
    /// Panel doubling stops once successive values agree to this.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ZetaMaxArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub half_width: f64,
    /// Coarse scan step; half the mean zero spacing by default.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 30)]
    pub depth: u32,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ModelSampleArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.01])]
    pub h: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub k_max: i32,
    /// Primes up to this get explicit phases.
    #[arg(long, default_value_t = zxlb_core::models::DEFAULT_EXPLICIT_CUTOFF)]
    pub cutoff: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ModelVerifyArgs {
    #[arg(long, default_value_t = 3)]
    pub k_max: i32,
    #[arg(long, default_value_t = 0.01)]
    pub delta_h: f64,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct BarrierArgs {
    /// Height T; n = floor(log log T).
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub big_t: Option<f64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long)]
    pub convention: Option<BarrierFamily>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MomentsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: BarrierArgs,
    /// Independent seed groups (seeds seed, seed+1, ...).
    #[arg(long, default_value_t = 1)]
    pub groups: u64,
    /// Largest grid accepted.
    #[arg(long)]
    pub grid_max: Option<usize>,
    /// Sieve limit for the block variances; larger blocks use the asymptotic form.
    #[arg(long, default_value_t = 2_000_000)]
    pub sieve_limit: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TailSource {
    /// Recentred maxima of the hierarchical field with n levels.
    Field,
    /// Exact draws from the law with survival 2e·y·e^{-2y}.
    Synthetic,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct TailArgs {
    #[arg(long, value_enum, default_value_t = TailSource::Field)]
    pub source: TailSource,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 3.75, 4.0])]
    pub y_grid: Vec<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BallotArgs {
    #[arg(long, default_value_t = 100)]
    pub t: usize,
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    #[arg(long, default_value_t = 2.0)]
    pub b: f64,
    /// With --delta and --y: curved barriers instead of a flat one at 0.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long, default_value = "rising")]
    pub lower: LowerShape,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MollifierArgs {
    #[arg(long, default_value_t = 4.0)]
    pub delta: f64,
    #[arg(long = "A", default_value_t = 3.0)]
    #[serde(rename = "A")]
    pub a: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16, 32])]
    pub nu: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5])]
    pub window: Vec<f64>,
}

/// Everything that determines an artifact's content.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Resolved {
    pub seed: u64,
    pub replicas: u64,
    #[serde(flatten)]
    pub command: Command,
}

pub const DEFAULT_SEED: u64 = 1;

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    /// An invariant check on the result failed.
    Violated(String),
}

fn default_replicas(c: &Command) -> u64 {
    match c {
        Command::Ballot(_) => 100_000,
        Command::ModelVerify(_) => 100_000,
        Command::Moments(_) => 1000,
        Command::Tail(_) => 20_000,
        Command::ModelSample(_) => 10,
        _ => 1,
    }
}

/// Merge config-file values under the command-line ones.
fn resolve(global: &Global, mut command: Command) -> Result<Resolved> {
    let kv = match &global.config {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::default(),
    };
    let fill_walk = |w: &mut BarrierArgs| -> Result<()> {
        w.big_t = w.big_t.or(kv.get("T")?);
        w.n = w.n.or(kv.get("n")?);
        w.y = w.y.or(kv.get("y")?);
        w.convention = w.convention.or(kv.get("convention")?);
        Ok(())
    };
    match &mut command {
        Command::BarrierDump(w) => {
            kv.restrict("barrier-dump", &["T", "n", "y", "convention"])?;
            fill_walk(w)?;
        }
        Command::Moments(m) => {
            kv.restrict("moments", &["T", "n", "y", "convention", "grid_max"])?;
            fill_walk(&mut m.walk)?;
            m.grid_max = m.grid_max.or(kv.get("grid_max")?);
        }
        Command::Tail(t) => {
            kv.restrict("tail", &["n"])?;
            t.n = t.n.or(kv.get("n")?);
        }
        _ => kv.restrict("this command", &[])?,
    }
    let seed = match global.seed {
        Some(s) => s,
        None => kv.get("seed")?.unwrap_or(DEFAULT_SEED),
    };
    let replicas = match global.replicas {
        Some(r) => r,
        None => kv.get("replicas")?.unwrap_or_else(|| default_replicas(&command)),
    };
    Ok(Resolved { seed, replicas, command })
}

/// Pull the embedded config out of a JSON or CSV artifact.
fn embedded_config(path: &std::path::Path) -> Result<Resolved> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(line) = text.lines().find(|l| l.starts_with(CONFIG_PREFIX)) {
        return Ok(serde_json::from_str(&line[CONFIG_PREFIX.len()..])?);
    }
    let doc: serde_json::Value = serde_json::from_str(&text).context("neither a CSV with a config line nor JSON")?;
    match doc.get("config") {
        Some(c) => Ok(serde_json::from_value(c.clone())?),
        None => bail!("{} has no embedded config", path.display()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violated(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Status> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let resolved = match cli.command {
        Top::Run { command } | Top::Direct(command) => resolve(&cli.global, command)?,
        Top::Replay { file } => {
            if cli.global.config.is_some() || cli.global.seed.is_some() || cli.global.replicas.is_some() {
                bail!("replay takes its config from the file; drop --config, --seed and --replicas");
            }
            embedded_config(&file)?
        }
    };
    let ctx =
        experiments::Context { sink: Sink::new(cli.global.out.clone()), sieve_cache: cli.global.sieve_cache.clone() };
    experiments::execute(&resolved, &ctx)
}

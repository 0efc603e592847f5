//! `mrtlab`: batch front end for the experiments. Every run writes its
//! tables (CSV for long numerics, JSON for structured reports) plus a
//! manifest with the config hash, seed, precision and per-table checksums,
//! so identical configurations reproduce identical bytes.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mrt_lab::archimedean::{
    correlation_uv, correlation_uv_surrogate, density_g, rotation_family_check, SarnakV,
};
use mrt_lab::expsum::{
    exp_sum_with_partials, kl_certificate, ExpSumSpec, PhaseKind, PrecisionMode,
};
use mrt_lab::furstenberg::{
    criterion_check, delta_distance, DeltaConfig, EmpiricalAverager, LogMixture, Weighting,
};
use mrt_lab::mrt::{MrtFunction, MrtParams, TPolicy};
use mrt_lab::polyfam::PhaseFunction;
use mrt_lab::prime_arith::{epsilon_t_bound, epsilon_t_empirical_max, k_t, sieve_with_budget};
use mrt_lab::seq::{PhaseSeq, SurrogatePower};
use mrt_lab::unipotent::{
    independence_report, sample_phases, strong_stationarity_check, CounterRng, MomentSpec,
    UnipotentMeasure,
};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "mrtlab", version, about = "multiplicative-function experiment runner")]
struct Cli {
    /// Seed recorded in every report and used by all samplers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Working precision in bits for escalated phase arithmetic.
    #[arg(long, global = true, default_value_t = 128)]
    precision: u32,
    /// Recorded in the manifest; reductions are order-deterministic anyway.
    #[arg(long, global = true, default_value_t = false)]
    reproducible: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Optional TOML config; a table named after the subcommand supplies
    /// its parameters when the flags are left at their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build stage parameters and the prime-value cache.
    Construct(ConstructArgs),
    /// Dump the exact polynomial family (P, Q, R, K, L, H) as JSON.
    Poly(PolyArgs),
    /// Quasi-genericity criterion table over (d, s) pairs.
    Criterion(CriterionArgs),
    /// Exponential sums with Kusmin-Landau certificates, as CSV.
    Expsum(ExpsumArgs),
    /// Emit sample paths of the unipotent measures as CSV.
    Sample(SampleArgs),
    /// Monte-Carlo independence report for consecutive coordinates.
    Independence(IndependenceArgs),
    /// Random dilation-invariance sweep of the exact moments.
    Stationarity(StationarityArgs),
    /// Truncated weak-* distance of an empirical window to the oracles.
    Delta(DeltaArgs),
    /// Rotation-family consistency report for n^i.
    Rotation(RotationArgs),
    /// Table of the limit density g on [0, 1).
    Density(DensityArgs),
    /// Correlation of u with the zero-entropy companion sequence.
    Sarnak(SarnakArgs),
    /// Density bounds for integers with many small prime factors.
    Epsilon(EpsilonArgs),
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct ConstructArgs {
    /// First threshold t_1.
    #[arg(long, default_value_t = 2)]
    t1: u64,
    /// Number of stages to build beyond the first.
    #[arg(long, default_value_t = 1)]
    extra_stages: u32,
    #[arg(long, default_value_t = 1_000_000)]
    search_cap: u64,
    /// Threshold policy: "square", "exponent:<a>" or "explicit:<t>".
    #[arg(long, default_value = "square")]
    policy: String,
    #[arg(long, default_value_t = 10_000_000)]
    sieve_limit: u64,
    #[arg(long, default_value_t = false)]
    aperiodic: bool,
}

impl Default for ConstructArgs {
    fn default() -> Self {
        ConstructArgs {
            t1: 2,
            extra_stages: 1,
            search_cap: 1_000_000,
            policy: "square".into(),
            sieve_limit: 10_000_000,
            aperiodic: false,
        }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct PolyArgs {
    #[arg(long, default_value_t = 5)]
    dmax: usize,
}

impl Default for PolyArgs {
    fn default() -> Self {
        PolyArgs { dmax: 5 }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct CriterionArgs {
    /// Comma-separated d values.
    #[arg(long, default_value = "0,1,2")]
    d_list: String,
    /// Comma-separated s values.
    #[arg(long, default_value = "1000000")]
    s_list: String,
    /// Window exponent; "mid" uses the admissible-window midpoint.
    #[arg(long, default_value = "mid")]
    beta: String,
    #[arg(long, default_value_t = 3)]
    ell_max: i64,
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
}

impl Default for CriterionArgs {
    fn default() -> Self {
        CriterionArgs {
            d_list: "0,1,2".into(),
            s_list: "1000000".into(),
            beta: "mid".into(),
            ell_max: 3,
            tol: 0.05,
        }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct ExpsumArgs {
    #[arg(long, default_value = "1,2")]
    d_list: String,
    #[arg(long, default_value = "100000,1000000")]
    s_list: String,
    #[arg(long, default_value = "1,2,3")]
    ell_list: String,
    /// Window exponent; "mid" per d.
    #[arg(long, default_value = "mid")]
    beta: String,
    /// Head exponent; defaults to (1/(d+1) + beta)/2.
    #[arg(long)]
    alpha: Option<f64>,
}

impl Default for ExpsumArgs {
    fn default() -> Self {
        ExpsumArgs {
            d_list: "1,2".into(),
            s_list: "100000,1000000".into(),
            ell_list: "1,2,3".into(),
            beta: "mid".into(),
            alpha: None,
        }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct SampleArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 64)]
    len: u64,
    #[arg(long, default_value_t = 8)]
    count: u64,
}

impl Default for SampleArgs {
    fn default() -> Self {
        SampleArgs { d: 2, len: 64, count: 8 }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct IndependenceArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Window of consecutive coordinates (must be <= d + 1).
    #[arg(long, default_value_t = 3)]
    window: usize,
    #[arg(long, default_value_t = 3)]
    max_exp: i64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0.02)]
    threshold: f64,
}

impl Default for IndependenceArgs {
    fn default() -> Self {
        IndependenceArgs {
            d: 2,
            window: 3,
            max_exp: 3,
            samples: 100_000,
            threshold: 0.02,
        }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct StationarityArgs {
    #[arg(long, default_value_t = 10_000)]
    cases: u64,
    #[arg(long, default_value_t = 3)]
    dmax: usize,
}

impl Default for StationarityArgs {
    fn default() -> Self {
        StationarityArgs { cases: 10_000, dmax: 3 }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct DeltaArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    /// Also compare against the logarithmic mixture with this D1.
    #[arg(long)]
    mixture_d1: Option<u64>,
}

impl Default for DeltaArgs {
    fn default() -> Self {
        DeltaArgs { d: 1, n: 100_000, mixture_d1: None }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct RotationArgs {
    #[arg(long, default_value = "100000,1000000")]
    n_grid: String,
    #[arg(long, default_value_t = 5)]
    k_max: i64,
}

impl Default for RotationArgs {
    fn default() -> Self {
        RotationArgs { n_grid: "100000,1000000".into(), k_max: 5 }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct DensityArgs {
    #[arg(long, default_value_t = 256)]
    points: u32,
}

impl Default for DensityArgs {
    fn default() -> Self {
        DensityArgs { points: 256 }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct SarnakArgs {
    /// Surrogate stage exponent for the large-scale run (0 disables it).
    #[arg(long, default_value_t = 1_000_000)]
    surrogate_s: u64,
}

impl Default for SarnakArgs {
    fn default() -> Self {
        SarnakArgs { surrogate_s: 1_000_000 }
    }
}

#[derive(Args, Serialize, Clone, serde::Deserialize)]
#[serde(default)]
struct EpsilonArgs {
    #[arg(long, default_value = "2,4,6,8,9,16")]
    t_list: String,
    #[arg(long, default_value_t = 100_000)]
    sieve_limit: u64,
}

impl Default for EpsilonArgs {
    fn default() -> Self {
        EpsilonArgs { t_list: "2,4,6,8,9,16".into(), sieve_limit: 100_000 }
    }
}

// ---------------------------------------------------------------------------
// Manifest and output plumbing.
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunManifest {
    artifact_version: String,
    command: String,
    config_hash: String,
    seed: u64,
    precision: u32,
    threads: usize,
    reproducible: bool,
    wall_ms: u128,
    tables: BTreeMap<String, String>,
}

struct Sink {
    dir: PathBuf,
    tables: BTreeMap<String, String>,
}

impl Sink {
    fn new(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            tables: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.tables
            .insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write(name, &buf)
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad list entry {t:?}: {e}"))
        })
        .collect()
}

fn window_midpoint(d: usize) -> f64 {
    if d == 0 {
        1.5
    } else {
        (1.0 / (d as f64 + 1.0) + 1.0 / d as f64) / 2.0
    }
}

fn exit_code(err: &mrt_lab::Error) -> i32 {
    use mrt_lab::Error::*;
    match err {
        Argument(_) | Domain(_) | State(_) | Invariant(_) | CertificateRefused(_) => 2,
        Resource(_) => 3,
        Precision(_) => 4,
        Io(_) => 5,
        SearchExhausted { .. } => 6,
    }
}

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    let started = Instant::now();
    match run(&cli, started) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<mrt_lab::Error>()
                .map(exit_code)
                .unwrap_or(1);
            std::process::exit(code);
        }
    }
}

/// Loads the subcommand's table from the `--config` file, if present.
fn from_config<T: for<'de> serde::Deserialize<'de>>(
    path: &Option<PathBuf>,
    section: &str,
) -> anyhow::Result<Option<T>> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path)
        .map_err(mrt_lab::Error::Io)
        .with_context(|| format!("reading config {}", path.display()))?;
    let value: toml::Table = toml::from_str(&text)?;
    match value.get(section) {
        Some(sec) => Ok(Some(sec.clone().try_into()?)),
        None => Ok(None),
    }
}

fn config_hash<T: Serialize>(command: &str, args: &T, cli: &Cli) -> String {
    let blob = serde_json::json!({
        "command": command,
        "args": args,
        "seed": cli.seed,
        "precision": cli.precision,
        "reproducible": cli.reproducible,
    });
    hex::encode(Sha256::digest(serde_json::to_vec(&blob).unwrap()))
}

fn finish<T: Serialize>(
    cli: &Cli,
    command: &str,
    args: &T,
    mut sink: Sink,
    started: Instant,
) -> anyhow::Result<()> {
    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config_hash: config_hash(command, args, cli),
        seed: cli.seed,
        precision: cli.precision,
        threads: cli.threads,
        reproducible: cli.reproducible,
        wall_ms: started.elapsed().as_millis(),
        tables: std::mem::take(&mut sink.tables),
    };
    let bytes = serde_json::to_vec_pretty(&manifest)?;
    std::fs::write(sink.dir.join("manifest.json"), bytes)?;
    println!("wrote {}", sink.dir.display());
    Ok(())
}

fn run(cli: &Cli, started: Instant) -> anyhow::Result<()> {
    match &cli.command {
        Command::Construct(a) => {
            let args = from_config(&cli.config, "construct")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let policy = match args.policy.as_str() {
                "square" => TPolicy::Square,
                other => {
                    if let Some(rest) = other.strip_prefix("exponent:") {
                        TPolicy::Exponent(rest.parse()?)
                    } else if let Some(rest) = other.strip_prefix("explicit:") {
                        TPolicy::Explicit(rest.parse()?)
                    } else {
                        anyhow::bail!("unknown policy {other:?}");
                    }
                }
            };
            let table = sieve_with_budget(args.sieve_limit, 4 << 30)?;
            let mut params = MrtParams::new_stage1(args.t1)?;
            params.aperiodic_mode = args.aperiodic;
            let mut f = MrtFunction::new_stage1(params, &table, None)?;
            for _ in 0..args.extra_stages {
                let s = f.find_next_s(args.search_cap)?;
                let t = mrt_lab::mrt::next_t(s, policy)?;
                f = f.extend_stage(&table, t, s)?;
                println!("accepted s = {s}, t = {t}");
            }
            sink.write("params.toml", toml::to_string_pretty(&f.params)?.as_bytes())?;
            f.save_cache(&sink.dir.join("uvals.bin"))?;
            let bytes = std::fs::read(sink.dir.join("uvals.bin"))?;
            let digest = hex::encode(Sha256::digest(&bytes));
            sink.tables.insert("uvals.bin".into(), digest);
            finish(cli, "construct", &args, sink, started)
        }
        Command::Poly(a) => {
            let args = from_config(&cli.config, "poly")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let dumps: Vec<_> = (0..=args.dmax)
                .map(mrt_lab::polyfam::dump)
                .collect::<mrt_lab::Result<_>>()?;
            sink.write_json("poly.json", &dumps)?;
            finish(cli, "poly", &args, sink, started)
        }
        Command::Criterion(a) => {
            let args = from_config(&cli.config, "criterion")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let d_list: Vec<usize> = parse_list(&args.d_list)?;
            let s_list: Vec<u64> = parse_list(&args.s_list)?;
            let mut rows = Vec::new();
            let mut csv = String::from("d,s,beta,n,hyp1_re,hyp1_im,hyp1_dev,hyp2_max,pass\n");
            for &d in &d_list {
                for &s in &s_list {
                    let beta = match args.beta.as_str() {
                        "mid" => window_midpoint(d),
                        v => v.parse()?,
                    };
                    let n = (s as f64).powf(beta).floor() as u64;
                    let rep = criterion_check(&SurrogatePower { s }, d, n, args.ell_max, args.tol)?;
                    csv.push_str(&format!(
                        "{d},{s},{beta},{n},{},{},{},{},{}\n",
                        rep.hyp1_re, rep.hyp1_im, rep.hyp1_deviation, rep.hyp2_max, rep.pass
                    ));
                    rows.push(rep);
                }
            }
            sink.write("criterion.csv", csv.as_bytes())?;
            sink.write_json("criterion.json", &rows)?;
            finish(cli, "criterion", &args, sink, started)
        }
        Command::Expsum(a) => {
            let args = from_config(&cli.config, "expsum")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let d_list: Vec<usize> = parse_list(&args.d_list)?;
            let s_list: Vec<u64> = parse_list(&args.s_list)?;
            let ell_list: Vec<i64> = parse_list(&args.ell_list)?;
            let mut csv = String::from(
                "d,ell,s,beta,n,sum_re,sum_im,err_bound,lambda1,kl_bound,max_partial\n",
            );
            for &d in &d_list {
                let pf = PhaseFunction::new(d)?;
                for &s in &s_list {
                    let beta = match args.beta.as_str() {
                        "mid" => window_midpoint(d),
                        v => v.parse::<f64>()?,
                    };
                    let n = (s as f64).powf(beta).floor() as u64;
                    for &ell in &ell_list {
                        let spec = ExpSumSpec {
                            phase: PhaseKind::Fd(&pf),
                            s,
                            ell,
                            a: 1,
                            b: n,
                            precision: cli.precision,
                            mode: PrecisionMode::Certified,
                        };
                        let (res, max_partial) = exp_sum_with_partials(&spec)?;
                        let alpha = args
                            .alpha
                            .unwrap_or_else(|| mrt_lab::expsum::default_alpha(d, beta));
                        let head = ((s as f64).powf(alpha).floor() as u64)
                            .max(pf.h.ceil() as u64)
                            .max(1);
                        let cert = kl_certificate(&pf, s, ell, head.min(n.saturating_sub(1)).max(1), n);
                        let (l1, bound) = match cert {
                            Ok(c) => (c.lambda1, c.bound),
                            Err(_) => (f64::NAN, f64::NAN),
                        };
                        csv.push_str(&format!(
                            "{d},{ell},{s},{beta},{n},{},{},{},{l1},{bound},{max_partial}\n",
                            res.mean.re, res.mean.im, res.err_bound
                        ));
                    }
                }
            }
            sink.write("expsum.csv", csv.as_bytes())?;
            finish(cli, "expsum", &args, sink, started)
        }
        Command::Sample(a) => {
            let args = from_config(&cli.config, "sample")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let rng = CounterRng::new(cli.seed);
            let mut csv = String::from("sample,n,phase_turns,re,im\n");
            for idx in 0..args.count {
                let phases = sample_phases(args.d, args.len, &rng, idx);
                for (n, ph) in phases.iter().enumerate() {
                    let z = ph.to_complex();
                    csv.push_str(&format!("{idx},{n},{},{},{}\n", ph.turns(), z.re, z.im));
                }
            }
            sink.write("samples.csv", csv.as_bytes())?;
            finish(cli, "sample", &args, sink, started)
        }
        Command::Independence(a) => {
            let args = from_config(&cli.config, "independence")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let rep = independence_report(
                args.d,
                args.window,
                args.max_exp,
                args.samples,
                cli.seed,
                args.threshold,
            )?;
            sink.write_json("independence.json", &rep)?;
            finish(cli, "independence", &args, sink, started)
        }
        Command::Stationarity(a) => {
            let args = from_config(&cli.config, "stationarity")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let rng = CounterRng::new(cli.seed);
            let mut failures = 0usize;
            for case in 0..args.cases {
                let d = rng.below(case, 0, args.dmax as u64 + 1) as usize;
                let k = 1 + rng.below(case, 1, 4);
                let spec = MomentSpec::new((0..k).map(|j| {
                    (
                        rng.below(case, 10 + j, 9),
                        rng.below(case, 20 + j, 7) as i64 - 3,
                    )
                }));
                let r = [2u64, 3, 5][rng.below(case, 2, 3) as usize];
                if !strong_stationarity_check(d, &spec, r) {
                    failures += 1;
                }
            }
            #[derive(Serialize)]
            struct StationarityReport {
                cases: u64,
                seed: u64,
                failures: usize,
                pass: bool,
            }
            sink.write_json(
                "stationarity.json",
                &StationarityReport {
                    cases: args.cases,
                    seed: cli.seed,
                    failures,
                    pass: failures == 0,
                },
            )?;
            finish(cli, "stationarity", &args, sink, started)
        }
        Command::Delta(a) => {
            let args = from_config(&cli.config, "delta")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let cfg = DeltaConfig::default();
            let rng = CounterRng::new(cli.seed);
            let phases = sample_phases(args.d, args.n + cfg.max_lag + 1, &rng, 0);
            let seq = PhaseSeq { phases };
            let oracle = UnipotentMeasure::new(args.d);
            #[derive(Serialize)]
            struct DeltaReport {
                d: usize,
                n: u64,
                seed: u64,
                cesaro: mrt_lab::furstenberg::DeltaResult,
                logarithmic: mrt_lab::furstenberg::DeltaResult,
                mixture: Option<mrt_lab::furstenberg::DeltaResult>,
            }
            let ces = EmpiricalAverager::new(&seq, args.n, Weighting::Cesaro)?;
            let log = EmpiricalAverager::new(&seq, args.n, Weighting::Logarithmic)?;
            let mixture = match args.mixture_d1 {
                Some(d1) => Some(delta_distance(&ces, &LogMixture::new(d1, None)?, &cfg)),
                None => None,
            };
            let rep = DeltaReport {
                d: args.d,
                n: args.n,
                seed: cli.seed,
                cesaro: delta_distance(&ces, &oracle, &cfg),
                logarithmic: delta_distance(&log, &oracle, &cfg),
                mixture,
            };
            sink.write_json("delta.json", &rep)?;
            finish(cli, "delta", &args, sink, started)
        }
        Command::Rotation(a) => {
            let args = from_config(&cli.config, "rotation")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let grid: Vec<u64> = parse_list(&args.n_grid)?;
            let rep = rotation_family_check(&grid, args.k_max)?;
            sink.write_json("rotation.json", &rep)?;
            finish(cli, "rotation", &args, sink, started)
        }
        Command::Density(a) => {
            let args = from_config(&cli.config, "density")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let mut csv = String::from("x,g\n");
            for i in 0..args.points {
                let x = i as f64 / args.points as f64;
                csv.push_str(&format!("{x},{}\n", density_g(x)));
            }
            sink.write("density.csv", csv.as_bytes())?;
            finish(cli, "density", &args, sink, started)
        }
        Command::Sarnak(a) => {
            let args = from_config(&cli.config, "sarnak")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            // toy stage, honest function
            let table = sieve_with_budget(1000, 1 << 20)?;
            let params = MrtParams::new_stage1(2)?;
            let f = MrtFunction::new_stage1(params, &table, None)?;
            let s2 = f.find_next_s(1000)?;
            let f = f.extend_stage(&table, s2 * s2, s2)?;
            let sv = SarnakV::new(f.params.clone())?;
            let toy = correlation_uv(&f.as_seq(&table), &sv, 1)?;
            let surrogate = if args.surrogate_s >= 2 {
                let mut p = f.params.clone();
                let s = args.surrogate_s;
                p.stages.push(mrt_lab::mrt::Stage {
                    s: Some(s),
                    t: s.checked_mul(s).context("surrogate s^2 overflows")?,
                });
                let sv_big = SarnakV::new(p)?;
                Some(correlation_uv_surrogate(&sv_big, 2)?)
            } else {
                None
            };
            #[derive(Serialize)]
            struct SarnakReport {
                toy: mrt_lab::archimedean::CorrelationReport,
                surrogate: Option<mrt_lab::archimedean::CorrelationReport>,
            }
            sink.write_json("sarnak.json", &SarnakReport { toy, surrogate })?;
            finish(cli, "sarnak", &args, sink, started)
        }
        Command::Epsilon(a) => {
            let args = from_config(&cli.config, "epsilon")?.unwrap_or_else(|| a.clone());
            let mut sink = Sink::new(&cli.out)?;
            let table = sieve_with_budget(args.sieve_limit, 4 << 30)?;
            let t_list: Vec<u64> = parse_list(&args.t_list)?;
            let grid: Vec<u64> = (1..)
                .map(|k| 10u64.pow(k))
                .take_while(|&n| n <= table.limit())
                .collect();
            let mut csv = String::from("t,k_t,bound,empirical_max\n");
            for &t in &t_list {
                let k = k_t(t, &table)?;
                let bound = epsilon_t_bound(t, &table, None)?;
                let emp = epsilon_t_empirical_max(t, &grid, &table)?;
                csv.push_str(&format!("{t},{k},{bound},{emp}\n"));
            }
            sink.write("epsilon.csv", csv.as_bytes())?;
            finish(cli, "epsilon", &args, sink, started)
        }
    }
}

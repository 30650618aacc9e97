//! The `wtot` command line.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error or infeasible
//! configuration, 3 a `--check` failed.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{simulate_attacks, AdvantageEstimate, AttackerId, SimulationReport};
use crate::bounds::{besbc_bounds, grid_lower_bound, OperatingPoint, RateBounds, RateConstants};
use crate::channel::ChannelParams;
use crate::error::{AnalysisError, ProtocolError};
use crate::protocol::{derive_dimensions, run_protocol, OtInputs, ProtocolConfig};
use crate::rng::trial_seed;

pub const SEED_ENV: &str = "OT_SEED";

#[derive(Debug, Parser)]
#[command(name = "wtot", version, about = "Wiretapped string OT over erasure broadcast channels")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Base seed; OT_SEED takes precedence. Drawn from the OS when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Exit with status 3 if the run's acceptance check fails.
    #[arg(long, global = true)]
    pub check: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Every rate bound for one channel.
    Bounds(BoundsArgs),
    /// Bounds over a grid of channels, one CSV/JSON row per channel.
    Sweep(SweepArgs),
    /// Run the protocol repeatedly and report correctness and aborts.
    Simulate(SimulateArgs),
    /// Score one attacker over many runs.
    Attack(AttackArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    #[arg(long, default_value_t = 0.5)]
    pub eps1: f64,
    #[arg(long, default_value_t = 0.9)]
    pub eps2: f64,
    #[arg(long, default_value_t = 0.4)]
    pub eps3: f64,
}

impl ChannelArgs {
    fn params(&self) -> Result<ChannelParams, CliError> {
        ChannelParams::new(self.eps1, self.eps2, self.eps3).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Also brute-force the general bound on a grid with this many steps per axis.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Inclusive range lo:hi, or a single value.
    #[arg(long, default_value = "0.1:0.9")]
    pub eps1: String,
    #[arg(long, default_value = "0.1:0.9")]
    pub eps2: String,
    #[arg(long, default_value = "0.1:0.9")]
    pub eps3: String,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,
    /// Rate as a fraction of the channel's upper bound.
    #[arg(long, default_value_t = 0.8)]
    pub rate_fraction: f64,
    #[arg(long, default_value_t = ProtocolConfig::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = ProtocolConfig::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = ProtocolConfig::DEFAULT_DELTA_BAR)]
    pub delta_bar: f64,
    #[arg(long, default_value_t = ProtocolConfig::DEFAULT_DELTA_TILDE)]
    pub delta_tilde: f64,
    #[arg(long, default_value_t = ProtocolConfig::DEFAULT_MAX_RESENDS)]
    pub max_resends: usize,
    /// Send K0 first and label by C alone, exposing C to a degraded Eve.
    #[arg(long)]
    pub ablate_order_mask: bool,
}

impl ProtocolArgs {
    fn config(&self) -> Result<ProtocolConfig, CliError> {
        let mut config = ProtocolConfig::at_fraction_of_capacity(self.n, self.rate_fraction, self.channel.params()?)
            .with_slacks(self.alpha, self.delta, self.delta_bar, self.delta_tilde)
            .with_max_resends(self.max_resends);
        if self.ablate_order_mask {
            config = config.without_order_mask();
        }
        derive_dimensions(&config).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Write the transcript of trial 0 as JSON lines.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AttackArgs {
    #[arg(long, value_enum)]
    pub attacker: AttackerId,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Protocol(ProtocolError::Infeasible(m)) => CliError::Usage(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Outcome of a successful command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub check_passed: bool,
}

const BOUNDS_SCHEMA: &str = "wtot.bounds/1";
const SWEEP_SCHEMA: &str = "wtot.sweep/1";
const SIMULATE_SCHEMA: &str = "wtot.simulate/1";
const ATTACK_SCHEMA: &str = "wtot.attack/1";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

#[derive(Debug, Serialize)]
struct BoundsReport {
    schema: &'static str,
    eps1: f64,
    eps2: f64,
    eps3: f64,
    upper: f64,
    lower_t2: Option<f64>,
    corollary: f64,
    general_lower: f64,
    gap: f64,
    argmax: OperatingPoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<GridCheck>,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct GridCheck {
    resolution: usize,
    rate: f64,
}

impl BoundsReport {
    fn new(p: &ChannelParams, b: &RateBounds, grid: Option<GridCheck>) -> Self {
        Self {
            schema: BOUNDS_SCHEMA,
            eps1: p.eps1,
            eps2: p.eps2,
            eps3: p.eps3,
            upper: b.upper,
            lower_t2: b.lower_t2,
            corollary: b.corollary,
            general_lower: b.general_lower,
            gap: b.gap(),
            argmax: b.argmax,
            grid,
        }
    }

    /// Bound ordering: corollary ≤ general ≤ upper, and the grid never beats the exact optimum.
    fn consistent(&self) -> bool {
        self.corollary <= self.general_lower + 1e-9
            && self.gap >= -1e-9
            && self.lower_t2.is_none_or(|l| l <= self.upper)
            && self.grid.is_none_or(|g| g.rate <= self.general_lower + 1e-9)
    }
}

#[derive(Debug, Serialize)]
struct SweepRow {
    eps1: f64,
    eps2: f64,
    eps3: f64,
    upper: f64,
    lower_t2: String,
    corollary: f64,
    general_lower: f64,
    gap: f64,
    schema: &'static str,
}

/// Grid values of an inclusive `lo:hi` range (or a single value) at `step`.
pub fn parse_range(text: &str, step: f64) -> Result<Vec<f64>, String> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(format!("step must be positive, got {step}"));
    }
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number {v:?} in range {text:?}"));
    let (lo, hi) = match text.split_once(':') {
        Some((lo, hi)) => (parse(lo)?, parse(hi)?),
        None => {
            let v = parse(text)?;
            (v, v)
        }
    };
    if hi < lo {
        return Err(format!("empty range {text:?}"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // Round to kill accumulated binary noise like 0.30000000000000004.
    Ok((0..count).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect())
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    schema: &'static str,
    seed: u64,
    n: usize,
    rate: f64,
    k: usize,
    achieved_rate: f64,
    case: u8,
    #[serde(flatten)]
    report: SimulationReport,
}

#[derive(Debug, Serialize)]
struct SimulateRow {
    schema: &'static str,
    seed: u64,
    n: usize,
    eps1: f64,
    eps2: f64,
    eps3: f64,
    rate: f64,
    k: usize,
    achieved_rate: f64,
    case: u8,
    trials: u64,
    completed: u64,
    decoding_errors: u64,
    order_bit_mismatches: u64,
    attempts: u64,
    aborts: u64,
    abort_rate: f64,
    chernoff_bound: f64,
    bob_audit_failures: u64,
    eve_audit_failures: u64,
    mean_transcript_bits: f64,
}

#[derive(Debug, Serialize)]
struct AttackReport {
    schema: &'static str,
    seed: u64,
    attacker: AttackerId,
    n: usize,
    eps1: f64,
    eps2: f64,
    eps3: f64,
    rate: f64,
    order_mask: bool,
    completed: u64,
    accuracy: f64,
    trials: u64,
    ci_halfwidth: f64,
    consistent_with_guessing: bool,
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn write_csv<T: Serialize>(out: &mut dyn Write, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> Result<u64, CliError> {
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not a 64-bit unsigned integer"))),
        None => Ok(flag.unwrap_or_else(rand::random)),
    }
}

/// Runs a parsed command, writing the report to `out`.
pub fn execute(cli: &Cli, env_seed: Option<&str>, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Bounds(args) => {
            let p = args.channel.params()?;
            let b = besbc_bounds(&p).map_err(|e| CliError::Runtime(e.to_string()))?;
            let grid = match args.grid {
                Some(resolution) => {
                    let g = grid_lower_bound(&RateConstants::besbc(&p), p.eps1, resolution)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    Some(GridCheck { resolution, rate: g.rate })
                }
                None => None,
            };
            let report = BoundsReport::new(&p, &b, grid);
            let ok = report.consistent();
            match cli.format {
                Format::Json => write_json(out, &report)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(&mut *out);
                    w.write_record([
                        "eps1", "eps2", "eps3", "upper", "lower_t2", "corollary", "general_lower", "gap", "gamma1",
                        "gamma2", "tau1", "tau2", "schema",
                    ])?;
                    let a = report.argmax;
                    w.write_record([
                        p.eps1.to_string(),
                        p.eps2.to_string(),
                        p.eps3.to_string(),
                        b.upper.to_string(),
                        fmt_opt(b.lower_t2),
                        b.corollary.to_string(),
                        b.general_lower.to_string(),
                        b.gap().to_string(),
                        a.gamma1.to_string(),
                        a.gamma2.to_string(),
                        a.tau1.to_string(),
                        a.tau2.to_string(),
                        BOUNDS_SCHEMA.to_string(),
                    ])?;
                    w.flush()?;
                }
            }
            Ok(Outcome { check_passed: ok })
        }
        Command::Sweep(args) => {
            let axes = [&args.eps1, &args.eps2, &args.eps3]
                .map(|r| parse_range(r, args.step).map_err(CliError::Usage));
            let [e1s, e2s, e3s] = axes;
            let (e1s, e2s, e3s) = (e1s?, e2s?, e3s?);
            let mut rows = Vec::with_capacity(e1s.len() * e2s.len() * e3s.len());
            let mut ok = true;
            for &e1 in &e1s {
                for &e2 in &e2s {
                    for &e3 in &e3s {
                        let p = ChannelParams::new(e1, e2, e3).map_err(|e| CliError::Usage(e.to_string()))?;
                        let b = besbc_bounds(&p).map_err(|e| CliError::Runtime(e.to_string()))?;
                        ok &= BoundsReport::new(&p, &b, None).consistent();
                        rows.push(SweepRow {
                            eps1: e1,
                            eps2: e2,
                            eps3: e3,
                            upper: b.upper,
                            lower_t2: fmt_opt(b.lower_t2),
                            corollary: b.corollary,
                            general_lower: b.general_lower,
                            gap: b.gap(),
                            schema: SWEEP_SCHEMA,
                        });
                    }
                }
            }
            match cli.format {
                Format::Csv => write_csv(out, &rows)?,
                Format::Json => write_json(out, &serde_json::json!({ "schema": SWEEP_SCHEMA, "rows": rows }))?,
            }
            Ok(Outcome { check_passed: ok })
        }
        Command::Simulate(args) => {
            let seed = resolve_seed(cli.seed, env_seed)?;
            let config = args.protocol.config()?;
            let dims = derive_dimensions(&config).map_err(|e| CliError::Usage(e.to_string()))?;
            let report = simulate_attacks(&config, args.trials, &[], seed)?;
            if let (Some(path), true) = (&args.transcript, args.trials > 0) {
                let cfg = config.with_seed(trial_seed(seed, 0));
                let inputs = OtInputs::for_config(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
                let run = run_protocol(&cfg, &inputs).map_err(|e| CliError::Runtime(e.to_string()))?;
                File::create(path)?.write_all(run.transcript.to_jsonl().as_bytes())?;
            }
            let ok = report.decoding_errors == 0
                && report.order_bit_mismatches == 0
                && report.bob_audit_failures == 0
                && report.completed == report.trials;
            let achieved_rate = dims.k as f64 / config.n as f64;
            match cli.format {
                Format::Json => write_json(
                    out,
                    &SimulateReport {
                        schema: SIMULATE_SCHEMA,
                        seed,
                        n: config.n,
                        rate: config.rate,
                        k: dims.k,
                        achieved_rate,
                        case: dims.case.id(),
                        report,
                    },
                )?,
                Format::Csv => write_csv(
                    out,
                    &[SimulateRow {
                        schema: SIMULATE_SCHEMA,
                        seed,
                        n: config.n,
                        eps1: config.channel.eps1,
                        eps2: config.channel.eps2,
                        eps3: config.channel.eps3,
                        rate: config.rate,
                        k: dims.k,
                        achieved_rate,
                        case: dims.case.id(),
                        trials: report.trials,
                        completed: report.completed,
                        decoding_errors: report.decoding_errors,
                        order_bit_mismatches: report.order_bit_mismatches,
                        attempts: report.aborts.attempts,
                        aborts: report.aborts.aborts,
                        abort_rate: report.aborts.rate(),
                        chernoff_bound: report.chernoff_bound,
                        bob_audit_failures: report.bob_audit_failures,
                        eve_audit_failures: report.eve_audit_failures,
                        mean_transcript_bits: report.mean_transcript_bits,
                    }],
                )?,
            }
            Ok(Outcome { check_passed: ok })
        }
        Command::Attack(args) => {
            let seed = resolve_seed(cli.seed, env_seed)?;
            let config = args.protocol.config()?;
            let report = simulate_attacks(&config, args.trials, &[args.attacker], seed)?;
            let estimate = match report.attacks.first() {
                Some(&(_, e)) => e,
                None => return Err(CliError::Runtime("no run completed".into())),
            };
            let AdvantageEstimate { accuracy, trials, ci_halfwidth } = estimate;
            let row = AttackReport {
                schema: ATTACK_SCHEMA,
                seed,
                attacker: args.attacker,
                n: config.n,
                eps1: config.channel.eps1,
                eps2: config.channel.eps2,
                eps3: config.channel.eps3,
                rate: config.rate,
                order_mask: config.order_mask,
                completed: report.completed,
                accuracy,
                trials,
                ci_halfwidth,
                consistent_with_guessing: estimate.consistent_with_guessing(),
            };
            match cli.format {
                Format::Json => write_json(out, &row)?,
                Format::Csv => write_csv(out, &[&row])?,
            }
            Ok(Outcome {
                check_passed: estimate.consistent_with_guessing(),
            })
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let result = match &cli.output {
        Some(path) => File::create(path)
            .map_err(CliError::from)
            .and_then(|mut f| execute(&cli, env_seed.as_deref(), &mut f)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            execute(&cli, env_seed.as_deref(), &mut lock)
        }
    };
    match result {
        Ok(outcome) if cli.check && !outcome.check_passed => {
            eprintln!("check failed");
            3
        }
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

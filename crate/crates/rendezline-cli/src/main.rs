//! `rendezline` command line: single traced trials, seeded Monte Carlo
//! sweeps, closed-form bound tables, and the end-to-end verification suite.
//!
//! Exit codes: 0 on success, 1 on any argument or runtime error, 2 when
//! `verify` finds a failing criterion.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rendezline::acceptance;
use rendezline::analysis::{
    async_meet_grid, competitive_ratio_bound, lemma1_grid, stage_bounds_async, stage_bounds_sync,
    GridReport,
};
use rendezline::engine::{run_trial_traced, ExplicitFlips, SeededDelays};
use rendezline::harness::{run_sweep, HarnessMode, SweepSpec};
use rendezline::model::{EpsilonMode, GaussianNoise, Mode, SimConfig, DEFAULT_NOISE};
use rendezline::output::{
    rows_to_csv, to_json, OutputRow, SweepConfig, SweepDocument, TrialDocument,
};
use rendezline::parse::{parse_config_file, parse_f64_values, parse_flips_args, parse_u32_values};

/// Overrides every `--seed` flag (and config-file seed) when set. Accepts
/// decimal or `0x`-prefixed hex.
const SEED_ENV: &str = "RENDEZLINE_SEED";

#[derive(Parser)]
#[command(
    name = "rendezline",
    version,
    about = "Multi-robot rendezvous search on the line: simulate, sweep, bound"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trial and emit its full event timeline as JSON
    Trial(TrialArgs),
    /// Run a seeded Monte Carlo sweep over a parameter grid
    Sweep(SweepArgs),
    /// Print stage and competitive-ratio bounds plus the merge-predicate grids
    Bounds(BoundsArgs),
    /// Run the acceptance suite; one PASS/FAIL line per criterion
    Verify,
}

#[derive(Args)]
struct TrialArgs {
    /// Variant: sync, async or async-noise
    #[arg(long, value_parser = parse_harness_mode)]
    mode: HarnessMode,
    /// Number of robots (at least 2)
    #[arg(long)]
    n: u32,
    /// Half the initial spacing between neighbors; must exceed r
    #[arg(long)]
    d: f64,
    /// Expansion radius of the excursion sequence (greater than 1)
    #[arg(long)]
    r: f64,
    /// Forced coin strings `ROBOT:HTH...`; unlisted robots flip seeded
    /// coins, and running past the end of a string is an error
    #[arg(long, value_name = "ROBOT:FLIPS", num_args = 1..)]
    flips: Vec<String>,
    /// Trial seed [default: 0]
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Abort the trial past this round index [default: derived from n, d, r]
    #[arg(long)]
    max_rounds: Option<u32>,
    /// Give each robot a private uniform offset in its expansion exponents
    #[arg(long)]
    epsilon: bool,
    /// Write the JSON document here instead of stdout
    #[arg(long, value_name = "PATH")]
    out_file: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// `key = value` file supplying any of the flags below; explicit flags win
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Comma-separated variants: sync, async, async-noise
    #[arg(long)]
    mode: Option<String>,
    /// Robot counts: values and inclusive ranges, e.g. `4,8` or `4..16..2`
    #[arg(long)]
    n: Option<String>,
    /// Half-spacing values, same syntax with fractional steps allowed
    #[arg(long)]
    d: Option<String>,
    /// Expansion radii, e.g. `1.17,1.26`
    #[arg(long)]
    r: Option<String>,
    /// Trials per cell [default: 1000]
    #[arg(long)]
    trials: Option<u32>,
    /// Base seed; cells and trials salt it independently [default: 0]
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Cap on simulation worker threads [default: all cores]
    #[arg(long)]
    jobs: Option<usize>,
    /// Give each robot a private uniform offset in its expansion exponents
    #[arg(long)]
    epsilon: bool,
    /// Mean of the expansion-length noise used by async-noise cells
    /// [default: -1.843]
    #[arg(long)]
    noise_mu: Option<f64>,
    /// Spread of the expansion-length noise [default: 0.372]
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Table format: csv or json [default: csv]
    #[arg(long, value_parser = parse_out_format)]
    out: Option<OutFormat>,
    /// Write the table here instead of stdout
    #[arg(long, value_name = "PATH")]
    out_file: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Variant the bounds apply to: sync or async
    #[arg(long, value_parser = parse_engine_mode)]
    mode: Mode,
    /// Number of robots
    #[arg(long)]
    n: u32,
    /// Integer exponent of the decomposition d = r^(k+delta)
    #[arg(long)]
    k: u32,
    /// Expansion radius; must lie in (1, sqrt(2))
    #[arg(long)]
    r: f64,
    /// Skip the merge-predicate grid sweeps (n in 4..=16, k in 1..=10)
    #[arg(long)]
    no_grids: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OutFormat {
    Csv,
    Json,
}

impl FromStr for OutFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutFormat::Csv),
            "json" => Ok(OutFormat::Json),
            other => Err(format!("unknown output format {other:?}, expected csv or json")),
        }
    }
}

fn parse_harness_mode(text: &str) -> Result<HarnessMode, String> {
    text.parse()
}

fn parse_engine_mode(text: &str) -> Result<Mode, String> {
    match text {
        "sync" => Ok(Mode::Sync),
        "async" => Ok(Mode::Async),
        other => Err(format!("unknown mode {other:?}, expected sync or async")),
    }
}

fn parse_out_format(text: &str) -> Result<OutFormat, String> {
    text.parse()
}

/// Decimal or `0x`-prefixed hex, e.g. `7` or `0xA11CE`.
fn parse_seed(text: &str) -> Result<u64> {
    let t = text.trim();
    match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    }
    .map_err(|_| anyhow!("cannot parse {text:?} as a 64-bit seed"))
}

/// `RENDEZLINE_SEED` beats `--seed`, which beats the config file, which
/// defaults to 0.
fn resolve_seed(flag: Option<u64>, file_seed: Option<u64>) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => parse_seed(&raw).with_context(|| format!("{SEED_ENV}={raw}")),
        Err(std::env::VarError::NotPresent) => Ok(flag.or(file_seed).unwrap_or(0)),
        Err(e) => Err(anyhow!("{SEED_ENV}: {e}")),
    }
}

/// Keys a sweep config file may set; anything else is a typo.
const SWEEP_KEYS: &[&str] = &[
    "mode", "n", "d", "r", "trials", "seed", "jobs", "epsilon", "noise-mu", "noise-sigma", "out",
];

fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let map = parse_config_file(&text).with_context(|| format!("parsing {}", path.display()))?;
    for key in map.keys() {
        if !SWEEP_KEYS.contains(&key.as_str()) {
            bail!(
                "{}: unknown key {key:?} (expected one of: {})",
                path.display(),
                SWEEP_KEYS.join(", ")
            );
        }
    }
    Ok(map)
}

/// A typed value from the config file, with the key in any error.
fn file_value<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    file.get(key)
        .map(|raw| raw.parse::<T>().map_err(|e| anyhow!("config key {key} = {raw:?}: {e}")))
        .transpose()
}

/// The merged setting: explicit flag, else config file, else default.
fn merged<T: FromStr>(
    flag: Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T>
where
    T::Err: Display,
{
    Ok(match flag {
        Some(v) => v,
        None => file_value(file, key)?.unwrap_or(default),
    })
}

fn build_sweep_spec(args: &SweepArgs) -> Result<(SweepSpec, OutFormat)> {
    let file = match &args.config {
        Some(path) => load_config_file(path)?,
        None => BTreeMap::new(),
    };
    let text_of = |flag: &Option<String>, key: &str| -> Result<String> {
        flag.clone()
            .or_else(|| file.get(key).cloned())
            .ok_or_else(|| anyhow!("--{key} is required (flag or config file)"))
    };

    let modes = text_of(&args.mode, "mode")?
        .split(',')
        .map(|m| m.trim().parse::<HarnessMode>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| anyhow!(e))?;
    let n_values = parse_u32_values(&text_of(&args.n, "n")?).context("--n")?;
    let d_values = parse_f64_values(&text_of(&args.d, "d")?).context("--d")?;
    let r_values = parse_f64_values(&text_of(&args.r, "r")?).context("--r")?;

    let file_seed = file.get("seed").map(|raw| parse_seed(raw)).transpose()?;
    let epsilon = args.epsilon || file_value(&file, "epsilon")?.unwrap_or(false);
    let jobs = match args.jobs {
        Some(v) => Some(v),
        None => file_value(&file, "jobs")?,
    };
    let noise = GaussianNoise {
        mu: merged(args.noise_mu, &file, "noise-mu", DEFAULT_NOISE.mu)?,
        sigma: merged(args.noise_sigma, &file, "noise-sigma", DEFAULT_NOISE.sigma)?,
    };
    let out = merged(args.out, &file, "out", OutFormat::Csv)?;

    let spec = SweepSpec {
        modes,
        n_values,
        d_values,
        r_values,
        trials_per_cell: merged(args.trials, &file, "trials", 1000)?,
        base_seed: resolve_seed(args.seed, file_seed)?,
        epsilon_mode: if epsilon { EpsilonMode::PerRobotUniform } else { EpsilonMode::Off },
        noise,
        jobs,
    };
    spec.validate()?;
    Ok((spec, out))
}

/// Writes to the file when given, stdout otherwise; the bytes are identical
/// either way, so files and pipes can be diffed interchangeably.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn cmd_trial(args: TrialArgs) -> Result<ExitCode> {
    let mut config = SimConfig::new(args.mode.engine_mode(), args.n, args.d, args.r)?;
    config.seed = resolve_seed(args.seed, None)?;
    if args.epsilon {
        config.epsilon_mode = EpsilonMode::PerRobotUniform;
    }
    if args.mode == HarnessMode::AsyncNoise {
        config.noise = Some(DEFAULT_NOISE);
    }
    if let Some(cap) = args.max_rounds {
        config.max_rounds = cap;
    }
    config.validate()?;

    let forced = parse_flips_args(&args.flips)?;
    let mut flips = ExplicitFlips::with_fallback(forced, config.seed);
    let mut delays = SeededDelays::new(config.seed, &config);
    let (result, timeline) = run_trial_traced(&config, &mut flips, &mut delays)?;
    emit(args.out_file.as_deref(), &to_json(&TrialDocument { config, result, timeline }))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let (spec, out) = build_sweep_spec(&args)?;
    let rows = run_sweep(&spec)?;
    let text = match out {
        OutFormat::Csv => rows_to_csv(&rows.iter().map(OutputRow::from).collect::<Vec<_>>()),
        OutFormat::Json => to_json(&SweepDocument { config: SweepConfig::from(&spec), rows }),
    };
    emit(args.out_file.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bounds(args: BoundsArgs) -> Result<ExitCode> {
    let BoundsArgs { mode, n, k, r, no_grids } = args;
    let stages = match mode {
        Mode::Sync => stage_bounds_sync(n, k, r),
        Mode::Async => stage_bounds_async(n, k, r),
    }?;
    // The ratio bound takes d at the worst decomposition offset, r^k; the
    // result is independent of that choice.
    let ratio = competitive_ratio_bound(mode, n, r.powi(k as i32), r)?;

    let line = |label: &str, value: &dyn Display| println!("{label:<12} {value}");
    line("mode", &match mode {
        Mode::Sync => "sync",
        Mode::Async => "async",
    });
    line("n", &n);
    line("k", &k);
    line("r", &r);
    line("stage1", &sig(stages.stage1));
    line("stage2", &sig(stages.stage2));
    line("stage3", &sig(stages.stage3));
    line("total", &sig(stages.total()));
    line("ratio_bound", &sig(ratio));
    if !no_grids {
        print_grid("reach_grid", &lemma1_grid(r, 4..=16, 1..=10));
        print_grid("meet_grid", &async_meet_grid(r, 4..=16, 1..=10, 6));
    }
    Ok(ExitCode::SUCCESS)
}

/// Nine significant digits, matching the CSV convention.
fn sig(x: f64) -> String {
    format!("{x:.8e}")
}

fn print_grid(label: &str, report: &GridReport) {
    if report.all_hold() {
        println!("{label:<12} {} cases, all hold", report.cases);
    } else {
        println!("{label:<12} {} cases, {} FAILED", report.cases, report.failures.len());
        for failure in report.failures.iter().take(10) {
            println!("    {failure:?}");
        }
        if report.failures.len() > 10 {
            println!("    ... and {} more", report.failures.len() - 10);
        }
    }
}

fn cmd_verify() -> Result<ExitCode> {
    let results = acceptance::run_all();
    let failed = results.iter().filter(|r| !r.pass).count();
    for line in &results {
        println!("{line}");
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here too; only genuine parse errors
            // print to stderr and exit 1.
            let code = if err.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Trial(args) => cmd_trial(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Verify => cmd_verify(),
    };
    outcome.unwrap_or_else(|err| {
        eprintln!("error: {err:#}");
        ExitCode::FAILURE
    })
}

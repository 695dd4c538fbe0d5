//! Subcommand handlers. Each returns its stdout text; files are written as
//! a side effect.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rti_core::amplitudes::{
    amplitude_at, detuning, CouplingConstant, Sign, TransitionParams, DEFAULT_ALPHA,
};
use rti_core::causet::ExportFormat;
use rti_core::classifier::{classify, threshold_count, Thresholds, DEFAULT_DELTA_MICRO, DEFAULT_EPS_MACRO};
use rti_core::count::Count;
use rti_core::engine::{
    run_ensemble_with, run_trajectory, EnsembleOptions, EnsembleResult, Scenario, StopRule, DEFAULT_SEED,
};
use serde_json::json;

use crate::builtin::builtin;
use crate::error::CliError;
use crate::scenario_file::parse_scenario_file;

pub const SEED_ENV: &str = "RTI_SIM_SEED";

/// A scenario plus the seed its source pinned, if any.
struct Loaded {
    scenario: Scenario,
    file_seed: Option<u64>,
}

fn load(source: &str) -> Result<Loaded, CliError> {
    if let Some(found) = builtin(source) {
        return found.map(|scenario| Loaded { scenario, file_seed: None });
    }
    let bytes = fs::read(source).map_err(|e| CliError::io(source, e))?;
    let parsed = parse_scenario_file(&bytes)?;
    Ok(Loaded { scenario: parsed.scenario, file_seed: parsed.file_seed })
}

/// `--seed`, then the file, then the environment, then the default.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>, env: Option<&str>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match env {
        Some(raw) => raw
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("{SEED_ENV}={raw:?} is not a nonnegative integer"))),
        None => Ok(DEFAULT_SEED),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputKind {
    Csv,
    Json,
    Dot,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file path or built-in name.
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Which of stats.json, detections.csv and causet.dot to write.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "csv,json,dot")]
    pub format: Vec<OutputKind>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn detections_csv(result: &EnsembleResult) -> String {
    let mut csv = String::from("run,tick,channel,absorber_id,is_null\n");
    for run in &result.runs {
        let mut rows: Vec<(u64, bool, &str, &str)> = run
            .transactions
            .iter()
            .map(|t| (t.tick, false, t.channel.as_str(), t.winner.as_str()))
            .chain(run.nulls.iter().map(|n| (n.tick, true, n.channel.as_str(), n.absorber.as_str())))
            .collect();
        rows.sort_by_key(|r| (r.0, r.1));
        for (tick, is_null, channel, absorber) in rows {
            let _ = writeln!(csv, "{},{tick},{channel},{absorber},{is_null}", run.run);
        }
    }
    csv
}

fn summary_table(result: &EnsembleResult) -> String {
    let s = &result.stats;
    let mut out = String::new();
    let _ = writeln!(out, "runs: {}  seed: {}  transactions: {}", s.runs, s.seed, s.transactions);
    let _ = writeln!(out, "{:<12} {:>10} {:>10}", "channel", "count", "frequency");
    for (channel, count) in &s.channel_counts {
        let _ = writeln!(out, "{:<12} {:>10} {:>10.6}", channel, count, s.channel_frequencies[channel]);
    }
    let _ = writeln!(out, "{:<12} {:>10} {:>10}", "absorber", "count", "frequency");
    for (id, count) in &s.absorber_counts {
        let _ = writeln!(out, "{:<12} {:>10} {:>10.6}", id, count, s.absorber_frequencies[id]);
    }
    let _ = writeln!(out, "no detection: {} ({:.6})", s.no_detection, s.no_detection_frequency());
    match s.mean_ticks_to_transaction {
        Some(m) => {
            let _ = writeln!(out, "mean ticks to transaction: {m:.6}");
        }
        None => out.push_str("mean ticks to transaction: n/a\n"),
    }
    out
}

pub fn run(args: &RunArgs, env_seed: Option<&str>) -> Result<String, CliError> {
    if args.runs == 0 {
        return Err(CliError::Invalid("--runs must be at least 1".into()));
    }
    if args.threads == Some(0) {
        return Err(CliError::Invalid("--threads must be at least 1".into()));
    }
    let Loaded { scenario, file_seed } = load(&args.scenario)?;
    let scenario = scenario.with_seed(resolve_seed(args.seed, file_seed, env_seed)?);
    let result = run_ensemble_with(&scenario, args.runs, EnsembleOptions { threads: args.threads })
        .map_err(|e| CliError::Invalid(e.to_string()))?;

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    if args.format.contains(&OutputKind::Json) {
        let mut text = serde_json::to_string_pretty(&result.stats).expect("stats serialize");
        text.push('\n');
        write_file(&args.out.join("stats.json"), text.as_bytes())?;
    }
    if args.format.contains(&OutputKind::Csv) {
        write_file(&args.out.join("detections.csv"), detections_csv(&result).as_bytes())?;
    }
    if args.format.contains(&OutputKind::Dot) {
        let first = run_trajectory(&scenario, 0, StopRule::FirstTransaction)
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        write_file(&args.out.join("causet.dot"), &first.causet.export(ExportFormat::Dot))?;
    }
    Ok(summary_table(&result))
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Constituent count: digits or scientific notation such as 1e23.
    #[arg(long)]
    pub n: String,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_EPS_MACRO)]
    pub eps_macro: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA_MICRO)]
    pub delta_micro: f64,
    /// Also report the smallest count whose response probability reaches this.
    #[arg(long)]
    pub target: Option<f64>,
}

pub fn classify_cmd(args: &ClassifyArgs) -> Result<String, CliError> {
    let n: Count = args.n.parse().map_err(|e| CliError::Invalid(format!("--n: {e}")))?;
    let alpha = CouplingConstant::new(args.alpha).map_err(|e| CliError::Invalid(format!("--alpha: {e}")))?;
    let thresholds =
        Thresholds::new(args.eps_macro, args.delta_micro).map_err(|e| CliError::Invalid(e.to_string()))?;
    let c = classify(n, alpha, thresholds);
    let mut out = json!({
        "n": n,
        "alpha": alpha.value(),
        "class": c.class,
        "prob_cw": c.prob_cw,
        "prob_no_cw": c.prob_no_cw,
        "log10_prob_no_cw": c.log10_prob_no_cw,
    });
    if let Some(target) = args.target {
        let count = threshold_count(alpha, target).map_err(|e| CliError::Invalid(e.to_string()))?;
        out["target"] = json!(target);
        out["threshold_count"] = json!(count);
    }
    Ok(format!("{out}\n"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Absorption,
    Emission,
}

#[derive(Debug, Args)]
pub struct AmplitudeArgs {
    /// Matrix element M.
    #[arg(long)]
    pub m: f64,
    /// Interaction time τ.
    #[arg(long)]
    pub tau: f64,
    /// Detuning Δ, instead of the energy/frequency set.
    #[arg(long, conflicts_with_all = ["e_initial", "e_final", "omega", "sign"])]
    pub detuning: Option<f64>,
    #[arg(long, requires_all = ["e_final", "omega", "sign"])]
    pub e_initial: Option<f64>,
    #[arg(long, requires = "e_initial")]
    pub e_final: Option<f64>,
    #[arg(long, requires = "e_initial")]
    pub omega: Option<f64>,
    #[arg(long, value_enum, requires = "e_initial")]
    pub sign: Option<SignArg>,
    /// Sample this many evenly spaced τ in [0, tau] and emit tau,prob CSV.
    #[arg(long)]
    pub sweep: Option<usize>,
    /// Write the sweep CSV here instead of stdout.
    #[arg(long, requires = "sweep")]
    pub out: Option<PathBuf>,
}

pub fn amplitude_cmd(args: &AmplitudeArgs) -> Result<String, CliError> {
    let finite = |name: &str, x: f64| {
        if x.is_finite() {
            Ok(x)
        } else {
            Err(CliError::Invalid(format!("--{name} must be finite")))
        }
    };
    let m = finite("m", args.m)?;
    let tau = finite("tau", args.tau)?;
    if tau < 0.0 {
        return Err(CliError::Invalid("--tau must be nonnegative".into()));
    }
    let delta = match (args.detuning, args.e_initial) {
        (Some(d), _) => finite("detuning", d)?,
        (None, Some(e_initial)) => {
            let sign = match args.sign.expect("clap enforces --sign") {
                SignArg::Absorption => Sign::Absorption,
                SignArg::Emission => Sign::Emission,
            };
            let params = TransitionParams {
                matrix_element: m,
                e_initial: finite("e-initial", e_initial)?,
                e_final: finite("e-final", args.e_final.expect("clap enforces --e-final"))?,
                omega: finite("omega", args.omega.expect("clap enforces --omega"))?,
                sign,
                tau,
            };
            detuning(&params)
        }
        (None, None) => return Err(CliError::Invalid("give --detuning or --e-initial/--e-final/--omega/--sign".into())),
    };

    if let Some(points) = args.sweep {
        if points < 2 {
            return Err(CliError::Invalid("--sweep needs at least 2 points".into()));
        }
        let mut csv = String::from("tau,prob\n");
        for i in 0..points {
            let t = tau * i as f64 / (points - 1) as f64;
            let _ = writeln!(csv, "{t},{}", amplitude_at(m, delta, t).norm_sqr().min(1.0));
        }
        return match &args.out {
            Some(path) => {
                write_file(path, csv.as_bytes())?;
                Ok(String::new())
            }
            None => Ok(csv),
        };
    }

    let c = amplitude_at(m, delta, tau);
    let raw = c.norm_sqr();
    let out = json!({
        "detuning": delta,
        "re": c.re,
        "im": c.im,
        "prob": raw.min(1.0),
        "unclamped": raw,
        "breakdown": raw > 1.0,
    });
    Ok(format!("{out}\n"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CausetFormat {
    Dot,
    Json,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Which ensemble run to replay.
    #[arg(long, default_value_t = 0)]
    pub run: u64,
    #[arg(long, value_enum, default_value = "dot")]
    pub format: CausetFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep going past the first transaction until nothing can happen.
    #[arg(long = "continue")]
    pub exhaust: bool,
}

pub fn export_causet(args: &ExportArgs, env_seed: Option<&str>) -> Result<Vec<u8>, CliError> {
    let Loaded { scenario, file_seed } = load(&args.scenario)?;
    let scenario = scenario.with_seed(resolve_seed(args.seed, file_seed, env_seed)?);
    let stop = if args.exhaust { StopRule::Exhaustion } else { StopRule::FirstTransaction };
    let trajectory = run_trajectory(&scenario, args.run, stop).map_err(|e| CliError::Invalid(e.to_string()))?;
    let format = match args.format {
        CausetFormat::Dot => ExportFormat::Dot,
        CausetFormat::Json => ExportFormat::Json,
    };
    let bytes = trajectory.causet.export(format);
    match &args.out {
        Some(path) => {
            write_file(path, &bytes)?;
            Ok(Vec::new())
        }
        None => Ok(bytes),
    }
}

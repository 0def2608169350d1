//! `persec`: single rounds, parameter sweeps, feasibility tables and
//! transcript replay for the per-element secure aggregation simulator.

mod output;

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use persec_core::config::{run_sweep, ConfigError, ExperimentConfig, SweepAxis, SweepBlock, OUT_DIR_ENV};
use persec_core::harness::{
    attack_rows, metric_rows, GroupChoice, RunSummary, Schedule, Simulation, Transcript,
    TRANSCRIPT_MAGIC,
};
use persec_core::params::{sweep_parameter_space, ThresholdRule};

const EXIT_INVALID: u8 = 1;
const EXIT_ABORTED: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(name = "persec", version, about = "Per-element secure aggregation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more seeded rounds and write metrics, summaries and transcripts.
    Run(RunArgs),
    /// Run every value of one axis and write a single CSV table.
    Sweep(SweepArgs),
    /// Tabulate the share-counting inequalities over a decryptor-count range.
    TheoremSweep(TheoremArgs),
    /// Re-execute a transcript (or a JSON summary) and diff the result.
    Replay(ReplayArgs),
}

/// Flags that override fields of the config file.
#[derive(Args, Default)]
struct Overrides {
    /// TOML experiment config; defaults apply when omitted.
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    clients: Option<usize>,
    #[arg(long)]
    decryptors: Option<usize>,
    #[arg(long)]
    vector_len: Option<usize>,
    #[arg(long)]
    mask_rate: Option<f64>,
    #[arg(long)]
    sparsity: Option<f64>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    delta_d: Option<f64>,
    #[arg(long)]
    eta_d: Option<f64>,
    /// Master seed of the first run.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<u64>,
    /// canonical, parallel or shuffled:SEED.
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<Schedule>,
    #[arg(long, value_parser = parse_group)]
    group: Option<GroupChoice>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Write a replayable transcript per run.
    #[arg(long)]
    transcript: bool,
    /// Write one attack row per scope index.
    #[arg(long)]
    attack_rows: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    axis: Option<SweepAxis>,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
}

#[derive(Args)]
struct TheoremArgs {
    config: Option<PathBuf>,
    #[arg(long)]
    d_min: Option<usize>,
    #[arg(long)]
    d_max: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, value_parser = parse_rule)]
    rule: Option<ThresholdRule>,
    /// CSV destination; `-` for stdout. Defaults to `<out dir>/theorem.csv`.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Transcript file, or a JSON run summary.
    input: PathBuf,
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<Schedule>,
}

fn parse_schedule(s: &str) -> Result<Schedule, String> {
    match s {
        "canonical" => Ok(Schedule::Canonical),
        "parallel" => Ok(Schedule::Parallel),
        _ => s
            .strip_prefix("shuffled:")
            .and_then(|seed| seed.parse().ok())
            .map(|seed| Schedule::Shuffled { seed })
            .ok_or_else(|| format!("unknown schedule `{s}` (canonical, parallel, shuffled:SEED)")),
    }
}

fn parse_group(s: &str) -> Result<GroupChoice, String> {
    match s {
        "ristretto255" => Ok(GroupChoice::Ristretto255),
        "modp64" => Ok(GroupChoice::Modp64),
        _ => Err(format!("unknown group `{s}` (ristretto255, modp64)")),
    }
}

fn parse_rule(s: &str) -> Result<ThresholdRule, String> {
    match s {
        "floor-ceil" => Ok(ThresholdRule::FloorCeil),
        "ceil-floor" => Ok(ThresholdRule::CeilFloor),
        _ => Err(format!("unknown rule `{s}` (floor-ceil, ceil-floor)")),
    }
}

/// A failure with its exit code; the message goes to stderr.
struct Failure(u8, String);

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure(EXIT_INVALID, format!("invalid config: {e}"))
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure(EXIT_INVALID, format!("{}: {e}", path.display()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Failure + '_ {
    move |e| Failure(EXIT_INVALID, format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            ExperimentConfig::from_toml_str(&text).map_err(|e| Failure(EXIT_INVALID, format!("{}: {e}", p.display())))
        }
    }
}

impl Overrides {
    fn apply(&self) -> Result<ExperimentConfig, Failure> {
        let mut c = load_config(self.config.as_deref())?;
        if let Some(v) = &self.out {
            c.output.dir = Some(v.clone());
        }
        let set = |slot: &mut usize, v: Option<usize>| v.into_iter().for_each(|v| *slot = v);
        set(&mut c.workload.clients, self.clients);
        set(&mut c.params.decryptors, self.decryptors);
        set(&mut c.workload.vector_len, self.vector_len);
        set(&mut c.params.t, self.t);
        let setf = |slot: &mut f64, v: Option<f64>| v.into_iter().for_each(|v| *slot = v);
        setf(&mut c.workload.mask_rate, self.mask_rate);
        setf(&mut c.workload.model.sparsity, self.sparsity);
        setf(&mut c.params.delta_d, self.delta_d);
        setf(&mut c.params.eta_d, self.eta_d);
        if let Some(v) = self.seed {
            c.seeds.master = v;
        }
        if let Some(v) = self.runs {
            c.seeds.runs = v;
        }
        if let Some(v) = self.schedule {
            c.execution.schedule = v;
        }
        if let Some(v) = self.group {
            c.execution.group = v;
        }
        Ok(c)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf, Failure> {
    let dir = cfg.output.resolved_dir();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    Ok(dir)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = args.overrides.apply()?;
    cfg.output.transcript |= args.transcript;
    cfg.output.attack_rows |= args.attack_rows;
    cfg.validate()?;
    let dir = out_dir(&cfg)?;
    let mut metrics = Vec::new();
    let mut attacks = Vec::new();
    let mut aborted = Vec::new();
    for run in 0..cfg.seeds.runs {
        let spec = cfg.run_spec(run);
        let out = Simulation::run(&spec).map_err(|e| Failure(EXIT_INVALID, format!("run {run}: {e}")))?;
        metrics.extend(metric_rows(run, &out.result));
        if cfg.output.attack_rows {
            attacks.extend(attack_rows(run, &out.result));
        }
        let transcript = out.transcript();
        if cfg.output.transcript {
            let path = dir.join(format!("transcript-{run}.bin"));
            fs::write(&path, transcript.to_bytes()).map_err(io_err(&path))?;
        }
        let summary = RunSummary::new(&spec, &out.result, &transcript);
        let path = dir.join(format!("summary-{run}.json"));
        serde_json::to_writer_pretty(create(&path)?, &summary)
            .map_err(|e| Failure(EXIT_INVALID, format!("{}: {e}", path.display())))?;
        match &out.result.outcome {
            Ok(_) => println!(
                "run {run}: completed, {}/{} scope indices revealed, oracle match {}, violations {}",
                summary.revealed_in_scope, summary.scope_len, summary.oracle_match, summary.violations
            ),
            Err(a) => {
                println!("run {run}: aborted in {}: {}", a.phase, a.cause);
                aborted.push(format!("run {run} aborted in {}: {}", a.phase, a.cause));
            }
        }
    }
    let path = dir.join("metrics.csv");
    output::write_metrics(create(&path)?, &metrics).map_err(csv_err(&path))?;
    if cfg.output.attack_rows {
        let path = dir.join("attack.csv");
        output::write_attacks(create(&path)?, &attacks).map_err(csv_err(&path))?;
    }
    if aborted.is_empty() {
        Ok(())
    } else {
        Err(Failure(EXIT_ABORTED, aborted.join("\n")))
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut cfg = args.overrides.apply()?;
    let sweep = match (args.axis, args.values, cfg.sweep.take()) {
        (Some(axis), Some(values), _) => SweepBlock { axis, values },
        (axis, values, Some(block)) => {
            SweepBlock { axis: axis.unwrap_or(block.axis), values: values.unwrap_or(block.values) }
        }
        _ => return Err(ConfigError { path: "sweep".into(), message: "needs an axis and values".into() }.into()),
    };
    cfg.sweep = Some(sweep.clone());
    cfg.validate()?;
    let dir = out_dir(&cfg)?;
    let points = run_sweep(&cfg, &sweep);
    let path = dir.join(format!("sweep-{}.csv", sweep.axis.name()));
    output::write_sweep(create(&path)?, &points).map_err(csv_err(&path))?;
    let failed = points.iter().filter(|p| p.status != "completed").count();
    println!("{} points written to {} ({failed} failed)", points.len(), path.display());
    Ok(())
}

fn cmd_theorem(args: TheoremArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args.config.as_deref())?;
    let th = &mut cfg.theorem;
    th.d_min = args.d_min.unwrap_or(th.d_min);
    th.d_max = args.d_max.unwrap_or(th.d_max);
    th.step = args.step.unwrap_or(th.step);
    th.rule = args.rule.unwrap_or(th.rule);
    if !(th.step > 0.0) {
        return Err(ConfigError { path: "theorem.step".into(), message: "must be positive".into() }.into());
    }
    let rows = sweep_parameter_space(th.d_min..=th.d_max, th.step, th.rule);
    let bad = rows.iter().filter(|r| r.is_counterexample()).count();
    match args.output.as_deref() {
        Some(p) if p == Path::new("-") => output::write_theorem(io::stdout().lock(), &rows).map_err(csv_err(p))?,
        other => {
            if let Some(v) = args.out {
                cfg.output.dir = Some(v);
            }
            let path = match other {
                Some(p) => p.to_path_buf(),
                None => out_dir(&cfg)?.join("theorem.csv"),
            };
            output::write_theorem(create(&path)?, &rows).map_err(csv_err(&path))?;
            println!("{} rows written to {}", rows.len(), path.display());
        }
    }
    eprintln!("{} rows, {bad} fail a share-counting inequality", rows.len());
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<(), Failure> {
    let bytes = fs::read(&args.input).map_err(io_err(&args.input))?;
    let invalid = |e: String| Failure(EXIT_INVALID, format!("{}: {e}", args.input.display()));
    if bytes.starts_with(TRANSCRIPT_MAGIC) {
        let original = Transcript::from_bytes(&bytes).map_err(|e| invalid(e.to_string()))?;
        let (out, same) = Simulation::replay(&bytes, args.schedule).map_err(|e| invalid(e.to_string()))?;
        let records = &out.result.records;
        if same {
            println!("identical: {} messages, {} bytes", records.len(), out.transcript().total_bytes());
            return Ok(());
        }
        let first = original.records.iter().zip(records).position(|(a, b)| a != b);
        let msg = match first {
            Some(i) => format!("transcripts diverge at message {i} ({} phase)", original.records[i].phase),
            None => format!("message counts differ: {} recorded, {} replayed", original.records.len(), records.len()),
        };
        return Err(Failure(EXIT_MISMATCH, msg));
    }
    let recorded: RunSummary = serde_json::from_slice(&bytes).map_err(|e| invalid(e.to_string()))?;
    let mut spec = recorded.spec.clone();
    if let Some(s) = args.schedule {
        spec.schedule = s;
    }
    let out = Simulation::run(&spec).map_err(|e| invalid(e.to_string()))?;
    // Hash under the recorded spec so a schedule override is not a difference.
    let transcript = Transcript::new(&recorded.spec, out.result.records.clone());
    let again = RunSummary::new(&recorded.spec, &out.result, &transcript);
    let diffs: Vec<&str> = [
        ("status", recorded.status == again.status),
        ("transcript", recorded.transcript_sha256 == again.transcript_sha256),
        ("aggregate", recorded.aggregate_sha256 == again.aggregate_sha256),
        ("revealed", recorded.revealed_in_scope == again.revealed_in_scope),
    ]
    .into_iter()
    .filter_map(|(name, same)| (!same).then_some(name))
    .collect();
    if diffs.is_empty() {
        println!("identical: transcript {}", again.transcript_sha256);
        Ok(())
    } else {
        Err(Failure(EXIT_MISMATCH, format!("summary mismatch in {}", diffs.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::TheoremSweep(a) => cmd_theorem(a),
        Command::Replay(a) => cmd_replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

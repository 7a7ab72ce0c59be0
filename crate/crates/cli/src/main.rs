use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{ArgGroup, Args, CommandFactory, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

use manifest::Artifacts;

#[derive(Debug, Parser)]
#[command(name = "ecosim", version, about = "Generate, analyze and simulate multi-platform hate ecosystems")]
struct Cli {
    /// Seed for every random stream in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Where to write the run manifest. Defaults to `<out>/manifest.json`
    /// for generate, `<out>.manifest.json` for export-gexf, otherwise
    /// `<json>.manifest.json`, or stderr when the report goes to stdout.
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,
    /// Suppress the human-readable summary.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory from a JSON config.
    Generate(GenerateArgs),
    /// Load a dataset directory and check its integrity.
    Validate(ValidateArgs),
    /// Compute one network metric on a dataset.
    Analyze(AnalyzeArgs),
    /// Per-individual join pathways and their length histogram.
    Pathways(PathwaysArgs),
    /// Hate-vs-moderator attrition: analytic outcome plus numeric check.
    Attrition(AttritionArgs),
    /// Run the moderation simulator on a dataset.
    Simulate(SimulateArgs),
    /// Export a snapshot as GEXF (or CSV edge list).
    ExportGexf(ExportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Validate(_) => "validate",
            Command::Analyze(_) => "analyze",
            Command::Pathways(_) => "pathways",
            Command::Attrition(_) => "attrition",
            Command::Simulate(_) => "simulate",
            Command::ExportGexf(_) => "export-gexf",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Ci,
    Full,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
struct GenerateArgs {
    /// Generator config (JSON).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Use a shipped config instead of a file.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Components,
    Reach,
    Growth,
    Connectivity,
    Bypass,
    Shock,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    dir: PathBuf,
    #[arg(long, value_enum)]
    metric: Metric,
    /// Snapshot time in unix seconds; defaults to the end of the dataset.
    #[arg(long, value_name = "T", allow_hyphen_values = true)]
    at: Option<i64>,
    /// Bin width in seconds (growth: default one day; shock: default one hour).
    #[arg(long, value_name = "SECONDS")]
    bin: Option<i64>,
    /// Bypass return window in days.
    #[arg(long, default_value_t = 7.0)]
    window_days: f64,
    /// Shock event time in unix seconds.
    #[arg(long, value_name = "T", allow_hyphen_values = true)]
    event_t: Option<i64>,
    /// Shock post category (antisemitic, islamophobic, other).
    #[arg(long)]
    category: Option<String>,
    #[arg(long, default_value_t = 24)]
    pre_bins: usize,
    #[arg(long, default_value_t = 24)]
    post_bins: usize,
    /// Sample times for the CSV time series of components and reach.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Bypass motifs listed in the JSON report (the count is always complete).
    #[arg(long, default_value_t = 100)]
    limit: usize,
    /// Also dump a CSV time series here.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PathwaysArgs {
    dir: PathBuf,
    #[arg(long, default_value_t = 180.0)]
    horizon_days: f64,
    /// Inclusive lower bin edges, starting at 1 (default: powers of two).
    #[arg(long, value_delimiter = ',', value_name = "N,N,...")]
    edges: Option<Vec<usize>>,
    /// Per-individual timeline CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LawArg {
    Square,
    Linear,
    Ambush,
}

#[derive(Debug, Args)]
#[allow(non_snake_case)]
struct AttritionArgs {
    #[arg(long, value_enum)]
    law: LawArg,
    /// Moderator efficiency.
    #[arg(long = "m", required_unless_present = "sweep_ratios")]
    m: Option<f64>,
    /// Hate efficiency.
    #[arg(long = "h")]
    h: f64,
    /// Initial hate activity.
    #[arg(long = "H0", required_unless_present = "sweep_ratios")]
    H0: Option<f64>,
    /// Initial moderator activity.
    #[arg(long = "M0")]
    M0: f64,
    /// Integration step (default: 1e-3 of the characteristic time).
    #[arg(long)]
    dt: Option<f64>,
    /// Integration horizon (default: 1e5 characteristic times).
    #[arg(long = "T")]
    T: Option<f64>,
    /// Sweep moderator/hate efficiency ratios instead of one scenario.
    #[arg(long, value_delimiter = ',', requires = "sweep_sizes", value_name = "R,R,...")]
    sweep_ratios: Option<Vec<f64>>,
    /// Hate/moderator initial size ratios for the sweep.
    #[arg(long, value_delimiter = ',', requires = "sweep_ratios", value_name = "S,S,...")]
    sweep_sizes: Option<Vec<f64>>,
    /// Trajectory CSV, or the grid CSV in sweep mode.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Majors,
    Adaptive,
    /// Both policies over a range of seeds.
    Compare,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    dir: PathBuf,
    #[arg(long, value_enum)]
    policy: PolicyArg,
    /// Removals per tick.
    #[arg(long)]
    budget: usize,
    #[arg(long)]
    ticks: u32,
    /// Chance that a removed community respawns on another platform.
    #[arg(long)]
    bypass_probability: f64,
    /// Respawn delay bound, and how long a respawn counts as fresh, in ticks.
    #[arg(long)]
    relink_window: u32,
    #[arg(long, default_value_t = 0)]
    detection_delay: u32,
    /// Number of largest platforms the majors policy covers.
    #[arg(long, default_value_t = ecosim_core::modsim::DEFAULT_MAJOR_PLATFORMS, conflicts_with = "platforms")]
    majors: usize,
    /// Explicit platform list for the majors policy.
    #[arg(long, value_delimiter = ',')]
    platforms: Option<Vec<String>>,
    /// Seeds used by --policy compare, counted up from --seed.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Per-tick trace CSV (per-seed residuals for compare).
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    Gexf,
    Csv,
}

#[derive(Debug, Args)]
struct ExportArgs {
    dir: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[arg(long, value_name = "T", allow_hyphen_values = true)]
    at: Option<i64>,
    /// Collapse to platform supernodes plus mainstream and news sinks.
    #[arg(long)]
    aggregate: bool,
    #[arg(long, value_enum, default_value_t = ExportFormat::Gexf)]
    format: ExportFormat,
}

/// A bad combination of arguments that clap cannot express.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// What a command hands back for reporting.
struct Done {
    report: serde_json::Value,
    /// Effective parameters, hashed into the manifest.
    params: serde_json::Value,
    dataset: Option<PathBuf>,
    seeds: Vec<u64>,
    summary: String,
    default_manifest: Option<PathBuf>,
}

fn execute(cli: &Cli, arts: &mut Artifacts) -> Result<Done> {
    let seed = cli.seed;
    match &cli.command {
        Command::Generate(a) => commands::generate(a, seed, arts),
        Command::Validate(a) => commands::validate(a),
        Command::Analyze(a) => commands::analyze(a, arts),
        Command::Pathways(a) => commands::pathways(a, arts),
        Command::Attrition(a) => commands::attrition(a, arts),
        Command::Simulate(a) => commands::simulate(a, seed.unwrap_or(0), arts),
        Command::ExportGexf(a) => commands::export(a, arts),
    }
}

fn finish(cli: &Cli, argv: Vec<String>, started: Instant) -> Result<()> {
    let mut arts = Artifacts::default();
    let done = execute(cli, &mut arts)?;
    let mut report = serde_json::to_string_pretty(&done.report)?;
    report.push('\n');
    match &cli.json {
        Some(path) => arts.write(path, report.as_bytes())?,
        None => {
            arts.record("stdout".into(), report.as_bytes());
            std::io::stdout().write_all(report.as_bytes())?;
        }
    }
    let dataset_hash = done.dataset.as_deref().map(manifest::dataset_hash).transpose()?;
    let m = manifest::build(
        argv,
        cli.command.name(),
        manifest::config_hash(&done.params),
        dataset_hash,
        done.seeds,
        arts.outputs.clone(),
        started.elapsed().as_secs_f64(),
    );
    let text = serde_json::to_string_pretty(&m)? + "\n";
    let target = cli
        .manifest
        .clone()
        .or(done.default_manifest)
        .or_else(|| cli.json.as_ref().map(|p| sibling(p, "manifest.json")));
    match target {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
        }
        None => eprint!("{text}"),
    }
    if !cli.quiet && cli.json.is_some() {
        eprintln!("{}", done.summary);
    }
    Ok(())
}

fn sibling(path: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        // clap exits 2 on usage errors and 0 for --help/--version.
        Err(e) => e.exit(),
    };
    let started = Instant::now();
    match finish(&cli, argv, started) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(u) = e.downcast_ref::<UsageError>() {
                eprintln!("error: {u}\n");
                let mut cmd = Cli::command();
                if let Some(sub) = cmd.find_subcommand_mut(cli.command.name()) {
                    let _ = sub.clone().bin_name(format!("ecosim {}", cli.command.name())).write_help(&mut std::io::stderr());
                }
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rmtl_core::contrasts::ContrastFamily;
use rmtl_core::inference::Method;
use rmtl_core::io::{analyze, ingest_csv, AnalysisRequest, ContrastChoice};
use rmtl_core::simulation::{preset, run_study, StudyConfig, StudyReport, PRESETS};

const EXIT_INPUT: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

/// Restricted mean time lost analyses for competing risks data.
#[derive(Parser)]
#[command(name = "rmtl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate RMTLs from a `group,time,status` CSV file and test contrasts.
    Analyze(AnalyzeArgs),
    /// Run a simulation study from a TOML config or a built-in preset.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Restriction horizon.
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Resampling iterations (permutations or Monte-Carlo draws).
    #[arg(long = "B", default_value_t = 1999)]
    resamples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// asymptotic, permutation, multiple, asymptotic-bonf or permutation-bonf.
    #[arg(long, default_value = "multiple")]
    method: String,
    /// dunnett, tukey, 2x2 or file:PATH.
    #[arg(long, default_value = "dunnett")]
    contrast: String,
    /// One hypothesis per contrast row and event type.
    #[arg(long)]
    per_event: bool,
    /// Comma-separated event types to test (implies --per-event).
    #[arg(long, value_delimiter = ',')]
    causes: Option<Vec<usize>>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to json with --out and table otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Directory receiving report.json and report.csv.
    #[arg(long)]
    out: PathBuf,
    /// Override the number of replications.
    #[arg(long)]
    replications: Option<usize>,
    /// Override the resampling iterations per analysis.
    #[arg(long = "B")]
    resamples: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn contrast_choice(arg: &str) -> anyhow::Result<ContrastChoice> {
    if let Some(path) = arg.strip_prefix("file:") {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read contrast file {path}"))?;
        return Ok(ContrastChoice::Custom(text));
    }
    Ok(ContrastChoice::Family(arg.parse::<ContrastFamily>()?))
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let request = AnalysisRequest {
        tau: args.tau,
        alpha: args.alpha,
        method: args.method.parse::<Method>()?,
        contrast: contrast_choice(&args.contrast)?,
        per_event: args.per_event || args.causes.is_some(),
        causes: args.causes,
        resamples: args.resamples,
        seed: args.seed,
    };
    let dataset = ingest_csv(&args.input)?;
    let report = analyze(&request, &dataset)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let format = args
        .format
        .unwrap_or(if args.out.is_some() { Format::Json } else { Format::Table });
    let text = match format {
        Format::Json => report.to_json()? + "\n",
        Format::Table => report.to_table(),
    };
    write_output(args.out.as_deref(), &text)
}

fn summary_table(report: &StudyReport) -> String {
    let mut out = format!(
        "scenario {}   alpha {}   band [{:.4}, {:.4}]   replications {}\n",
        report.scenario, report.alpha, report.band.lower, report.band.upper, report.metadata.replications
    );
    out.push_str(&format!("  {:<18} {:>10} {:>8} {:>8}\n", "method", "any-reject", "FWER", "in band"));
    for m in &report.methods {
        let fwer = m.fwer.map_or("-".to_string(), |f| format!("{f:.4}"));
        let band = m.fwer_within_band.map_or("-", |b| if b { "yes" } else { "no" });
        out.push_str(&format!("  {:<18} {:>10.4} {:>8} {:>8}\n", m.method.name(), m.any_rejection_rate, fwer, band));
    }
    out
}

fn run_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            StudyConfig::from_toml(&text)?
        }
        (None, Some(name)) => match preset(name) {
            Some(c) => c,
            None => bail!(rmtl_core::Error::Input(format!(
                "unknown preset `{name}` (available: {})",
                PRESETS.join(", ")
            ))),
        },
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    if let Some(r) = args.replications {
        config.scenario.replications = r;
    }
    if let Some(b) = args.resamples {
        config.scenario.resamples = b;
    }
    if let Some(s) = args.seed {
        config.scenario.master_seed = s;
    }
    config.scenario.validate()?;
    let report = run_study(&config)?;
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    fs::write(args.out.join("report.json"), report.to_json()? + "\n")?;
    let csv = fs::File::create(args.out.join("report.csv"))?;
    report.write_csv(csv)?;
    print!("{}", summary_table(&report));
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<rmtl_core::Error>() {
        Some(e) if !e.is_input_error() => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Simulate(args) => run_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

//! `slipt-lab`: parameter sweeps, transient runs and the validation battery
//! for multi-junction photovoltaic optical receivers.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use config::{RunConfig, KEY_HELP};
use output::{Format, Sink, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] slipt_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 configuration, 2 solver, 3 validation.
    fn exit_code(&self) -> u8 {
        use slipt_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(E::Config(_) | E::Domain(_) | E::ModelMismatch { .. }) => 1,
            CliError::Solver(_) | CliError::Core(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "slipt-lab", version, about, after_long_help = KEY_HELP)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Config file of `key = value` lines (see --help for keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one key; repeatable, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output file; stdout when absent. A `<out>.meta.json` sidecar is
    /// written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// Monte Carlo seed; overrides the `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "SLIPT_LAB_JOBS", global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Harvested power against transmit power for every model and the
    /// circuit oracle.
    EhCurve,
    /// Output span theta over the peak-power grid.
    Sensitivity,
    /// Achievable-rate lower bounds of the optimal and uniform inputs.
    Rate,
    /// Analytic and Monte Carlo OOK bit-error rates.
    Ber,
    /// Optimal and uniform input cdfs at peak power info.a_sq_w.
    Cdf,
    /// Rate-power regions over the energy-signal power grid.
    Tradeoff,
    /// Time-domain simulation of the filter network.
    Transient {
        /// Slot table (k, r_k); defaults to `<stem>.slots.<ext>` next to --out.
        #[arg(long)]
        slots: Option<PathBuf>,
    },
    /// Runs the acceptance battery; exit code 3 if any criterion fails.
    Validate,
    /// Prints the fully resolved configuration.
    Config,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::EhCurve => "eh-curve",
            Command::Sensitivity => "sensitivity",
            Command::Rate => "rate",
            Command::Ber => "ber",
            Command::Cdf => "cdf",
            Command::Tradeoff => "tradeoff",
            Command::Transient { .. } => "transient",
            Command::Validate => "validate",
            Command::Config => "config",
        }
    }
}

fn load_config(args: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    for s in &args.set {
        cfg.apply_override(s)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn metadata(
    command: &str,
    cfg: &RunConfig,
    format: Format,
    table: Option<&Table>,
    report: &commands::Report,
) -> Result<Value, CliError> {
    let config: Map<String, Value> = cfg
        .to_pairs()
        .into_iter()
        .map(|(k, v)| (k, Value::String(v)))
        .collect();
    let mut receivers = Map::new();
    let mut counts: Vec<usize> = cfg.sweep.junctions.clone();
    counts.push(cfg.transient.junctions);
    counts.sort_unstable();
    counts.dedup();
    for n in counts {
        let rx = cfg.receiver(n)?;
        receivers.insert(n.to_string(), serde_json::to_value(&rx).map_err(std::io::Error::other)?);
    }
    let mut meta = json!({
        "tool": "slipt-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "format": match format { Format::Csv => "csv", Format::Json => "json" },
        "rate_units": "nats per channel use (achievable-rate lower bound)",
        "config": config,
        "receivers": receivers,
        "models": report.models.iter().collect::<Vec<_>>(),
        "warnings": report.warnings.iter().collect::<Vec<_>>(),
        "checks": report.checks,
    });
    if let Some(t) = table {
        meta["columns"] = json!(t.columns);
        meta["rows"] = json!(t.rows.len());
    }
    for (k, v) in &report.extra {
        meta[k] = v.clone();
    }
    Ok(meta)
}

fn warn(report: &commands::Report) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let args = &cli.global;
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(args)?;
    let sink = Sink {
        out: args.out.clone(),
        format: args.format,
    };
    let name = cli.command.name();

    let tabular = |f: fn(&RunConfig) -> Result<(Table, commands::Report), CliError>| {
        let (table, report) = f(&cfg)?;
        sink.emit(&table)?;
        sink.write_sidecar(&metadata(name, &cfg, sink.format, Some(&table), &report)?)?;
        warn(&report);
        Ok::<_, CliError>((table, report))
    };

    match &cli.command {
        Command::EhCurve => {
            let (table, report) = tabular(commands::eh_curve)?;
            commands::require_some_rows(&table, &report)?;
        }
        Command::Sensitivity => {
            tabular(commands::sensitivity)?;
        }
        Command::Rate => {
            tabular(commands::rate)?;
        }
        Command::Ber => {
            tabular(commands::ber)?;
        }
        Command::Cdf => {
            tabular(commands::cdf)?;
        }
        Command::Tradeoff => {
            tabular(commands::tradeoff)?;
        }
        Command::Transient { slots } => {
            let (trace, _rx, mut report) = commands::transient(&cfg)?;
            let slot_path = slots
                .clone()
                .or_else(|| args.out.as_deref().map(commands::default_slots_path));
            let slot_sink = slot_path.map(|p| Sink {
                out: Some(p),
                format: sink.format,
            });
            commands::write_transient(&trace, &sink, slot_sink.as_ref())?;
            if let Some(s) = &slot_sink {
                report.extra.insert(
                    "slots_file".into(),
                    json!(s.out.as_ref().map(|p| p.display().to_string())),
                );
            }
            let waves = commands::waveform_table(&trace);
            sink.write_sidecar(&metadata(name, &cfg, sink.format, Some(&waves), &report)?)?;
            warn(&report);
        }
        Command::Validate => {
            let (table, report, passed) = commands::validate(&cfg)?;
            sink.emit(&table)?;
            sink.write_sidecar(&metadata(name, &cfg, sink.format, Some(&table), &report)?)?;
            warn(&report);
            if !passed {
                let failed = report.checks["failed_criteria"].clone();
                return Err(CliError::Validation(format!("failed criteria: {failed}")));
            }
        }
        Command::Config => {
            let mut w = sink.open()?;
            use std::io::Write;
            w.write_all(cfg.serialize().as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slipt-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

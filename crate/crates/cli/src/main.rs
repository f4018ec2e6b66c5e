use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod svg;

use commands::RunError;
use config::{Command, RunConfig};

#[derive(Parser)]
#[command(name = "cvrep", version, about = "Rate sweeps for CV repeater links with quantum scissors")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rate vs total distance for each layout, with capacity and optimized M.
    RateDistance(Flags),
    /// Hub placement heatmaps over one or more square sides.
    Placement(Flags),
    /// One pair evaluation with diagnostics, as JSON.
    Single(Flags),
    /// Oracle, normalization, physicality and Gaussian self-checks.
    Validate(Flags),
}

#[derive(Args)]
struct Flags {
    /// key = value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (directory for placement; "-" for stdout).
    #[arg(long)]
    out: Option<String>,
    /// Square sides, comma separated.
    #[arg(long)]
    scale_km: Option<String>,
    /// Total distances, comma separated (single: total, or d1,d2).
    #[arg(long)]
    distances_km: Option<String>,
    /// Layouts, comma separated, or "all".
    #[arg(long)]
    orientation: Option<String>,
    #[arg(long)]
    grid_n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// numeric[:g_max=..], fixed:<g> or power[:a=..,b=..,cap=..]
    #[arg(long)]
    gain_policy: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<String>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
    /// Any other setting, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn resolve(command: Command, flags: &Flags) -> Result<RunConfig, config::ConfigError> {
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config::ConfigError(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_file(&text)?;
    }
    for kv in &flags.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| config::ConfigError(format!("--set expects key=value, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    let overrides = [
        ("out", &flags.out),
        ("scales_km", &flags.scale_km),
        ("distances_km", &flags.distances_km),
        ("orientation", &flags.orientation),
        ("grid_n", &flags.grid_n),
        ("m", &flags.m),
        ("gain_policy", &flags.gain_policy),
        ("threads", &flags.threads),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    if flags.svg {
        cfg.svg = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Cmd::RateDistance(f) => (Command::RateDistance, f),
        Cmd::Placement(f) => (Command::Placement, f),
        Cmd::Single(f) => (Command::Single, f),
        Cmd::Validate(f) => (Command::Validate, f),
    };
    let cfg = match resolve(command, flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cvrep: config error: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
            eprintln!("cvrep: cannot set thread count: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match command {
        Command::RateDistance => commands::rate_distance(&cfg),
        Command::Placement => commands::placement(&cfg),
        Command::Single => commands::single(&cfg),
        Command::Validate => match commands::validate(&cfg) {
            Ok(true) => Ok(()),
            Ok(false) => Err(RunError::Failed("one or more validation suites failed".into())),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(m)) => {
            eprintln!("cvrep: config error: {m}");
            ExitCode::from(2)
        }
        Err(RunError::Failed(m)) => {
            eprintln!("cvrep: {m}");
            ExitCode::from(1)
        }
    }
}

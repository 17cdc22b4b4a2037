use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use spectrace_cli::{commands, exit_code, RunConfig, UsageError, EXIT_USAGE};
use tracing_subscriber::EnvFilter;

#[derive(Parser, Debug)]
#[command(
    name = "spectrace",
    version,
    about = "Trace specification sections to source code"
)]
struct Cli {
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    /// Emit logs as JSON lines on stderr.
    #[arg(long, global = true)]
    json_logs: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan the repository, extract symbols and write structure docs.
    Index {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the hierarchical pipeline.
    Map {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a retrieval baseline (grep or hybrid).
    Baseline {
        #[arg(long)]
        config: PathBuf,
        /// `grep` or `hybrid`.
        #[arg(long)]
        method: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score run records against ground truth.
    Eval {
        /// Expected folders, files and symbols per section (JSON).
        #[arg(long)]
        ground_truth: PathBuf,
        /// Reports go to <OUT>/eval.
        #[arg(long)]
        out: PathBuf,
        /// Run record JSON files.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

fn init_logging(quiet: bool, json: bool) {
    let default = if quiet { "warn" } else { "info" };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    let builder = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr);
    if json {
        builder.json().init();
    } else {
        builder.init();
    }
}

fn load_config(path: &Path, out: Option<PathBuf>, needs_spec: bool) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = out {
        cfg.output_dir = std::env::current_dir()
            .context("no working directory")?
            .join(out);
    }
    Ok(cfg.effective(needs_spec)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Index { config, out } => {
            let cfg = load_config(&config, out, false)?;
            let report = commands::cmd_index(&cfg)?;
            println!(
                "{}",
                cfg.output_dir
                    .join(commands::INDEX_DIR)
                    .join(commands::INDEX_REPORT)
                    .display()
            );
            if report.cache.corrupt > 0 {
                tracing::warn!(
                    count = report.cache.corrupt,
                    "corrupted structure docs were regenerated"
                );
            }
        }
        Command::Map { config, out } => {
            let cfg = load_config(&config, out, true)?;
            let (_, path) = commands::cmd_map(&cfg)?;
            println!("{}", path.display());
        }
        Command::Baseline {
            config,
            method,
            out,
        } => {
            if spectrace::baselines::BaselineMethod::parse(&method).is_none() {
                return Err(UsageError(format!(
                    "unknown baseline method `{method}` (grep|hybrid)"
                ))
                .into());
            }
            let cfg = load_config(&config, out, true)?;
            let (_, path) = commands::cmd_baseline(&cfg, &method)?;
            println!("{}", path.display());
        }
        Command::Eval {
            ground_truth,
            out,
            runs,
        } => {
            let report = commands::cmd_eval(&runs, &ground_truth, &out)?;
            println!("{}", report.to_markdown());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    init_logging(cli.quiet, cli.json_logs);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!("{e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

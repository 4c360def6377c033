//! Command-line front end for the critspec engine.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "critspec", version, about = "Qubit decoherence near critical points of two-dimensional magnets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, env = "CRITSPEC_THREADS")]
    pub threads: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Tabulate the noise spectral density N(ω).
    Spectrum,
    /// Phase variance and coherence against τ.
    Decohere,
    /// Long-form phase variance over a (d, τ, T, λ) grid.
    Sweep,
    /// Fit scaling exponents to a sweep file.
    Collapse,
    /// Compare Monte Carlo field traces with discrete-mode quadrature.
    Oracle,
    /// Echo time of a real material in SI units.
    #[command(name = "estimate-t2")]
    EstimateT2,
}

/// Text of the main output plus any side files.
#[derive(Debug, Default)]
pub struct Output {
    pub main: String,
    pub extra: Vec<(PathBuf, String)>,
}

/// Runs one command inside a pool of the requested size.
pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let loaded = config::Loaded::read(path)?;
    let ctx = commands::Context { loaded: &loaded, seed: cli.seed.unwrap_or(loaded.config.seed), out: cli.out.as_deref() };
    let go = || match cli.command {
        Command::Spectrum => commands::spectrum::run(&ctx),
        Command::Decohere => commands::decohere::run(&ctx),
        Command::Sweep => commands::sweep::run(&ctx),
        Command::Collapse => commands::collapse::run(&ctx),
        Command::Oracle => commands::oracle::run(&ctx),
        Command::EstimateT2 => commands::estimate::run(&ctx),
    };
    match cli.threads {
        Some(0) => Err(CliError::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes the outputs: the main text to `--out` or standard output.
pub fn emit(cli: &Cli, output: &Output) -> Result<(), CliError> {
    match &cli.out {
        Some(p) => write_file(p, &output.main)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(output.main.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        }
    }
    for (p, text) in &output.extra {
        write_file(p, text)?;
    }
    Ok(())
}

/// Parses arguments, runs and writes; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli).and_then(|o| emit(&cli, &o)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("critspec: {e}");
            e.exit_code()
        }
    }
}

//! Batch front end: scenario documents in, CSV or JSON tables out.

pub mod config;
pub mod error;
pub mod oscillator;
pub mod scenario;
pub mod table;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{OutputKind, ScenarioConfig};
pub use error::CliError;
pub use scenario::Scenario;
pub use table::{Format, Table};

#[derive(Debug, Parser)]
#[command(name = "metaphase", version, about = "Relative phases of Gaussian states under metaplectic isotopies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Largest accepted oracle residual.
    #[arg(long, global = true, default_value_t = scenario::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase table on the grid; oracle columns when the config lists `oracle`.
    Phase { config: PathBuf },
    /// Conley-Zehnder index of every prefix path.
    CzIndex { config: PathBuf },
    /// Admissibility report for the configured state.
    ValidateState { config: PathBuf },
    /// Phase table with Fock-oracle columns; fails when a residual exceeds --tol.
    OracleCheck { config: PathBuf },
    /// Harmonic oscillator branch table.
    Table {
        #[arg(long)]
        omega: f64,
        #[arg(long = "k-max")]
        k_max: usize,
    },
}

fn load(path: &Path) -> Result<Scenario, CliError> {
    Scenario::build(&ScenarioConfig::from_path(path)?)
}

fn emit(table: &Table, cli: &Cli) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(&mut w, cli.format)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(&mut lock, cli.format)?;
        }
    }
    Ok(())
}

fn oracle_run(cfg: &ScenarioConfig, cli: &Cli) -> Result<(), CliError> {
    if !(cli.tol > 0.0) {
        return Err(CliError::Config(format!("--tol {} must be positive", cli.tol)));
    }
    let sc = Scenario::build(cfg)?;
    let cutoff = cfg.oracle.and_then(|o| o.cutoff);
    let (table, summary) = scenario::phase_table(&sc, Some(cutoff))?;
    emit(&table, cli)?;
    scenario::check_residual(summary, cli.tol)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Phase { config } => {
            let cfg = ScenarioConfig::from_path(config)?;
            if cfg.wants(OutputKind::Oracle) {
                return oracle_run(&cfg, cli);
            }
            let (table, _) = scenario::phase_table(&Scenario::build(&cfg)?, None)?;
            emit(&table, cli)
        }
        Command::OracleCheck { config } => oracle_run(&ScenarioConfig::from_path(config)?, cli),
        Command::CzIndex { config } => emit(&scenario::cz_table(&load(config)?)?, cli),
        Command::ValidateState { config } => {
            let sc = load(config)?;
            emit(&scenario::validate_table(&sc)?, cli)?;
            sc.check_admissible()
        }
        Command::Table { omega, k_max } => emit(&oscillator::harmonic_table(*omega, *k_max)?, cli),
    }
}

/// Caps the worker pool when `METAPHASE_THREADS` is set.
pub fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("METAPHASE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("METAPHASE_THREADS = {v:?} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

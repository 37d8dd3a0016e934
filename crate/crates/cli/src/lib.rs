//! Command-line driver: reads one TOML instance file, runs a computation,
//! and writes CSV/JSON outputs plus a manifest that reproduces them.

pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod manifest;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use config::{Config, Loaded};
pub use error::{CliError, Result};
pub use export::Format;
pub use manifest::RunManifest;

use export::OutputSet;
use manifest::MANIFEST_FILE;

#[derive(Debug, Parser)]
#[command(name = "mislearn", version, about = "Equilibria and learning under a dogmatic misbelief about ability")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibria and the belief map.
    Solve(RunArgs),
    /// Vector field of the limiting ODE.
    Phase(RunArgs),
    /// Monte Carlo learning runs.
    Learn(RunArgs),
    /// Color-blind and color-sighted assessment for several groups.
    Multigroup(RunArgs),
    /// Comparative statics and the first-order misspecification benchmark.
    Compare(RunArgs),
    /// Two-group disparity report.
    Disparity(RunArgs),
    /// Grid check of the regularity assumptions.
    Check(RunArgs),
    /// Re-run a manifest and verify that every output matches.
    Replay {
        manifest: PathBuf,
        #[arg(long, env = "MISLEARN_OUT_DIR", default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// TOML instance file.
    pub config: PathBuf,
    #[command(flatten)]
    pub flags: Flags,
    #[arg(long, env = "MISLEARN_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
}

/// Flags that influence outputs; recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, clap::Args)]
pub struct Flags {
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid resolution: ψ̃ curve points, phase grid side, or assumption grid side.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Solve,
    Phase,
    Learn,
    Multigroup,
    Compare,
    Disparity,
    Check,
}

/// Runs `kind` into `out_dir` and writes the manifest. Invariant violations
/// are reported after all files are written.
pub fn run(kind: CommandKind, loaded: &Loaded, flags: &Flags, out_dir: &Path) -> Result<(RunManifest, Vec<String>)> {
    let mut out = OutputSet::create(out_dir, flags.format)?;
    let outcome = commands::execute(kind, loaded, flags, &mut out)?;
    let manifest = RunManifest::new(kind, &loaded.source, flags.clone(), outcome.seeds, out.records.clone());
    out.write(MANIFEST_FILE, &manifest.to_bytes()?)?;
    if !outcome.violations.is_empty() {
        return Err(CliError::Invariant(outcome.violations.join("; ")));
    }
    Ok((manifest, outcome.summary))
}

pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<(RunManifest, Vec<String>)> {
    let original = RunManifest::read(manifest_path)?;
    let loaded = Loaded::parse(format!("{} (embedded config)", manifest_path.display()), original.config.clone())?;
    let (again, mut summary) = run(original.command, &loaded, &original.flags, out_dir)?;
    let bad = original.mismatches(&again);
    if !bad.is_empty() {
        return Err(CliError::Invariant(format!("replay differs in {}", bad.join(", "))));
    }
    summary.push(format!("replayed {} outputs, all identical", again.outputs.len()));
    Ok((again, summary))
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Replay { manifest, out_dir } => replay(&manifest, &out_dir),
        cmd => {
            let (kind, args) = match cmd {
                Command::Solve(a) => (CommandKind::Solve, a),
                Command::Phase(a) => (CommandKind::Phase, a),
                Command::Learn(a) => (CommandKind::Learn, a),
                Command::Multigroup(a) => (CommandKind::Multigroup, a),
                Command::Compare(a) => (CommandKind::Compare, a),
                Command::Disparity(a) => (CommandKind::Disparity, a),
                Command::Check(a) => (CommandKind::Check, a),
                Command::Replay { .. } => unreachable!(),
            };
            Loaded::read(&args.config).and_then(|l| run(kind, &l, &args.flags, &args.out_dir))
        }
    };
    match result {
        Ok((_, summary)) => {
            for line in summary {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! `torgrad`: gradient tables, verification suites and single-shot checks.
//!
//! Exit codes: 0 success, 1 configuration error, 2 verification failure.

use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use torgrad::lognorm::DEFAULT_EXACT_CAP;
use torgrad::pipeline::{self, ExperimentConfig, Suite};

#[derive(Parser)]
#[command(name = "torgrad", version, about = "Betti and torsion gradient bounds at finite levels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Homology table along a quotient chain, with optional embedding bounds.
    Gradient {
        #[arg(long)]
        config: PathBuf,
        /// CSV path; a JSON table is written next to it. Overrides the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Seeded property suite, or `all`.
    Verify {
        suite: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Identity and norm checks of the Rokhlin resolution of ℤ at ℤ/M.
    Rokhlin {
        #[arg(long)]
        modulus: usize,
        #[arg(long)]
        tile: usize,
        /// Also print the complex and the comparison maps.
        #[arg(long)]
        embedding: bool,
    },
    /// lognorm of a morphism given as JSON.
    Lognorm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "atoms")]
        strategy: String,
        /// Atom cap of the exact search.
        #[arg(long, env = "TORGRAD_EXACT_CAP", default_value_t = DEFAULT_EXACT_CAP)]
        cap: usize,
    },
    /// Strictifies a one-atom perturbation of the ℤ resolution at ℤ/M.
    StrictifyDemo {
        #[arg(long, default_value_t = 8)]
        modulus: usize,
        #[arg(long, default_value_t = 3)]
        point: usize,
    },
}

enum Outcome {
    Ok,
    Failed,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes to stdout; a closed pipe (`| head`) ends output quietly.
fn emit(s: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(s.as_bytes()) {
        Err(e) if e.kind() == ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    emit(&format!("{}\n", serde_json::to_string_pretty(v)?))
}

fn verdict(ok: bool) -> Outcome {
    if ok {
        Outcome::Ok
    } else {
        Outcome::Failed
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Gradient { config, output } => {
            let cfg = ExperimentConfig::from_json(&read(&config)?)?;
            let table = pipeline::run_gradient(&cfg)?;
            let csv = table.to_csv();
            match output.or_else(|| cfg.output.as_ref().map(PathBuf::from)) {
                Some(path) => {
                    std::fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
                    let json_path = path.with_extension("json");
                    std::fs::write(&json_path, serde_json::to_string_pretty(&table.to_json())?)
                        .with_context(|| format!("writing {}", json_path.display()))?;
                }
                None => emit(&csv)?,
            }
            Ok(verdict(table.all_pass()))
        }
        Command::Verify { suite, trials, seed } => {
            let suites: Vec<Suite> = if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse()?] };
            let mut ok = true;
            for s in suites {
                let t = trials.unwrap_or(s.default_trials());
                let rep = pipeline::run_verify(s, seed, t);
                let notes: Vec<String> = rep.notes.iter().map(|(k, v)| format!(" {k}={v}")).collect();
                emit(&format!(
                    "{:<10} {} {}/{} passed (seed {}){}\n",
                    serde_json::to_value(s)?.as_str().unwrap_or("?"),
                    if rep.ok() { "PASS" } else { "FAIL" },
                    rep.passed,
                    rep.trials,
                    seed,
                    notes.concat()
                ))?;
                for f in &rep.failures {
                    emit(&format!("{}\n", serde_json::to_string(f)?))?;
                }
                ok &= rep.ok();
            }
            Ok(verdict(ok))
        }
        Command::Rokhlin { modulus, tile, embedding } => {
            let (ok, v) = pipeline::rokhlin_report(modulus, tile, embedding)?;
            print_json(&v)?;
            Ok(verdict(ok))
        }
        Command::Lognorm { input, strategy, cap } => {
            let f = pipeline::load_morphism(&read(&input)?)?;
            print_json(&pipeline::lognorm_report(&f, &strategy, cap)?)?;
            Ok(Outcome::Ok)
        }
        Command::StrictifyDemo { modulus, point } => {
            let (ok, v) = pipeline::strictify_demo(modulus, point)?;
            print_json(&v)?;
            Ok(verdict(ok))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

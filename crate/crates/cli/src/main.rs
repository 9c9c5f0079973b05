mod commands;
mod manifest;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use polylab::enumerate::BUDGET_ENV;
use polylab::Error;

use commands::Command;
use manifest::{compare, result_digest, write_artifacts, RunManifest};
use output::Output;

const EXIT_FAILURE: u8 = 1;
const EXIT_PRECONDITION: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "polylab", version, about = "Lattice trees, animals and walk surrogates")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Enumeration cap; overrides the POLYLAB_BUDGET environment variable.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Directory for manifest.json, result.json and table.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    action: Action,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Action {
    #[command(flatten)]
    Run(Command),
    /// Re-run a manifest and compare with its recorded output digest.
    Replay { manifest: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_PRECONDITION,
    }
}

fn print(output: &Output, format: Format) -> std::io::Result<()> {
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    match format {
        Format::Text => {
            for (k, v) in &output.summary {
                writeln!(w, "{k} = {v}")?;
            }
            if let Some(table) = &output.table {
                writeln!(w)?;
                table.write_csv(&mut w).map_err(std::io::Error::other)?;
            }
        }
        Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&output.result)?)?,
        Format::Csv => match &output.table {
            Some(t) => t.write_csv(&mut w),
            None => output.summary_table().write_csv(&mut w),
        }
        .map_err(std::io::Error::other)?,
    }
    Ok(())
}

/// Checks a replayed result against the recorded digest, falling back to the
/// `result.json` stored beside the manifest for results with a tolerance.
fn verify_replay(old: &RunManifest, manifest_path: &Path, output: &Output) -> ExitCode {
    let digest = result_digest(&output.result);
    if old.output_digest == digest {
        eprintln!("replay: identical output ({digest})");
        return ExitCode::SUCCESS;
    }
    let stored = manifest_path.with_file_name("result.json");
    let expected = std::fs::read_to_string(&stored)
        .ok()
        .and_then(|text| serde_json::from_str::<serde_json::Value>(&text).ok())
        .and_then(|v| v.get("result").cloned());
    match expected {
        Some(expected) => match compare(&expected, &output.result, old.tolerance, "result") {
            None => {
                eprintln!("replay: output within tolerance {} of {}", old.tolerance, stored.display());
                ExitCode::SUCCESS
            }
            Some(diff) => {
                eprintln!("replay: output differs at {diff}");
                ExitCode::from(EXIT_FAILURE)
            }
        },
        None => {
            eprintln!("replay: output digest {digest} differs from recorded {}", old.output_digest);
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn execute(command: &Command, threads: usize) -> Result<(Output, f64), Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let output = pool.install(|| command.run())?;
    Ok((output, start.elapsed().as_secs_f64()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let (command, recorded, replay_path) = match cli.action {
        Action::Run(command) => (command, None, None),
        Action::Replay { manifest } => match RunManifest::load(&manifest) {
            Ok(m) => (m.command.clone(), Some(m), Some(manifest)),
            Err(e) => {
                eprintln!("error: cannot load {}: {e}", manifest.display());
                return ExitCode::from(EXIT_PRECONDITION);
            }
        },
    };
    let budget = cli.budget.or(recorded.as_ref().and_then(|m| m.budget));
    if let Some(b) = budget {
        std::env::set_var(BUDGET_ENV, b.to_string());
    }
    let threads = cli
        .threads
        .or(recorded.as_ref().map(|m| m.threads))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        eprintln!("error: --threads must be positive");
        return ExitCode::from(EXIT_PRECONDITION);
    }

    let (output, wall) = match execute(&command, threads) {
        Ok(done) => done,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let manifest = RunManifest::new(&command, threads, budget, wall, &output);
    if let Err(e) = print(&output, cli.format) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_FAILURE);
    }
    if let Some(dir) = &cli.out {
        if let Err(e) = write_artifacts(dir, &manifest, &output) {
            eprintln!("error: cannot write artifacts to {}: {e}", dir.display());
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    if let Some((old, path)) = recorded.zip(replay_path) {
        return verify_replay(&old, &path, &output);
    }
    ExitCode::SUCCESS
}

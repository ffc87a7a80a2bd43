use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use susy_fgkls_cli::{parse_config, run_check_suite, run_scenario, ScenarioConfig};

/// Overrides the default output directory.
const OUT_ENV: &str = "SUSY_FGKLS_OUT";
const DEFAULT_OUT: &str = "susy-fgkls-out";

#[derive(Parser)]
#[command(name = "susy-fgkls", version, about = "Supersymmetric partners of FGKLS (Lindblad) dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files; several files run concurrently.
    Run {
        /// Scenario file (repeatable).
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
        /// Parent directory for per-scenario output; overrides `output.dir`
        /// and the SUSY_FGKLS_OUT environment variable.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant battery.
    Check {
        /// Only run cases whose name contains this substring.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { configs, out } => run(&configs, out),
        Command::Check { filter, inject_fault } => check(filter.as_deref(), inject_fault),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn check(filter: Option<&str>, inject_fault: bool) -> Result<bool> {
    let start = Instant::now();
    let report = run_check_suite(filter, inject_fault);
    print!("{}", report.render());
    let failures = report.failures().count();
    eprintln!("{} invariants, {failures} failed, {:.1} s", report.entries.len(), start.elapsed().as_secs_f64());
    if report.entries.is_empty() {
        bail!("no check case matches the filter");
    }
    Ok(report.passed())
}

fn output_dir(config: &ScenarioConfig, file: &Path, out: Option<&Path>) -> PathBuf {
    let name = config
        .name
        .clone()
        .unwrap_or_else(|| file.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned()));
    match (out, &config.output_dir) {
        (Some(base), _) => base.join(name),
        (None, Some(dir)) => dir.clone(),
        (None, None) => std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from).join(name),
    }
}

fn load(file: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    parse_config(&text).with_context(|| format!("invalid configuration {}", file.display()))
}

fn run(files: &[PathBuf], out: Option<PathBuf>) -> Result<bool> {
    let mut jobs = Vec::with_capacity(files.len());
    for file in files {
        let config = load(file)?;
        let dir = output_dir(&config, file, out.as_deref());
        if jobs.iter().any(|(_, _, d): &(&PathBuf, ScenarioConfig, PathBuf)| *d == dir) {
            bail!("two scenarios would write to {}", dir.display());
        }
        jobs.push((file, config, dir));
    }
    let results: Vec<Result<bool>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(file, config, dir)| {
                scope.spawn(move || -> Result<(bool, Vec<String>)> {
                    let outcome = run_scenario(config, dir).with_context(|| format!("running {}", file.display()))?;
                    Ok((outcome.passed(), outcome.report.failures().map(|e| e.name.clone()).collect::<Vec<_>>()))
                })
            })
            .collect();
        handles
            .into_iter()
            .zip(&jobs)
            .map(|(h, (file, _, dir))| {
                let (passed, failures): (bool, Vec<String>) = h.join().expect("scenario worker panicked")?;
                let verdict = if passed { "PASS" } else { "FAIL" };
                println!("{verdict} {} -> {}", file.display(), dir.display());
                for name in failures {
                    println!("  failed: {name}");
                }
                Ok(passed)
            })
            .collect()
    });
    let mut all = true;
    for r in results {
        match r {
            Ok(passed) => all &= passed,
            Err(e) => {
                eprintln!("error: {e:#}");
                all = false;
            }
        }
    }
    Ok(all)
}

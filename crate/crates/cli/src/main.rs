use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use cubelab_cli::{list_checks, parse_config, run, run_suite, suite_csv, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Experiment runner for cube structures in dynamics.
#[derive(Parser)]
#[command(name = "cubelab", version, about)]
struct Cli {
    /// Print every identity the runner can test and exit.
    #[arg(long)]
    list_checks: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Config file (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the report output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the main tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Gowers box norms on Z/N (two exact routes and an empirical one).
    Gowers(RunArgs),
    /// Nonconventional averages with the rotation limit prediction.
    Avg(RunArgs),
    /// Cube sampling and membership checks.
    Cubes(RunArgs),
    /// Regionally proximal classes of a finite system.
    Nrp(RunArgs),
    /// Nilcycle extraction and verification.
    #[command(subcommand)]
    Nilcycle(NilcycleCommand),
    /// Model probes.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Base-vertex determinism of model cubes.
    QCheck(RunArgs),
    /// Run a manifest of configs and aggregate the verdicts.
    Suite {
        /// Manifest (TOML `runs = [...]` or JSON `{"runs": [...]}`).
        #[arg(long)]
        config: PathBuf,
        /// Aggregate JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand, Clone)]
enum NilcycleCommand {
    /// Extract the nilcycle of an extension from lifted-cube statistics.
    Extract(RunArgs),
    /// Verify the four nilcycle identities against an extension.
    Verify(RunArgs),
}

#[derive(Subcommand, Clone)]
enum ModelCommand {
    /// Continuity modulus of the action under the bundle pseudometric
    /// versus the naive product metric.
    Probe(RunArgs),
}

fn load(args: &RunArgs, expected: &str) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = parse_config(&text)?;
    if config.experiment != expected {
        anyhow::bail!(
            "config error: experiment `{}` does not match subcommand `{expected}`",
            config.experiment
        );
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    if let Some(samples) = args.samples {
        config.samples = Some(samples);
    }
    if let Some(tol) = args.tol {
        config.tol = Some(tol);
    }
    Ok(config)
}

fn execute(args: &RunArgs, expected: &str) -> ExitCode {
    let config = match load(args, expected) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(report) => {
            match serde_json::to_string_pretty(&report) {
                Ok(json) => println!("{json}"),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_checks {
        for (name, identity) in list_checks() {
            println!("{name:42} {identity}");
        }
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: missing subcommand (try --help)");
        return ExitCode::from(2);
    };
    match command {
        Command::Gowers(a) => execute(&a, "gowers"),
        Command::Avg(a) => execute(&a, "avg"),
        Command::Cubes(a) => execute(&a, "cubes"),
        Command::Nrp(a) => execute(&a, "nrp"),
        Command::Nilcycle(NilcycleCommand::Extract(a)) => execute(&a, "nilcycle-extract"),
        Command::Nilcycle(NilcycleCommand::Verify(a)) => execute(&a, "nilcycle-verify"),
        Command::Model(ModelCommand::Probe(a)) => execute(&a, "model-probe"),
        Command::QCheck(a) => execute(&a, "q-check"),
        Command::Suite { config, out, csv } => match run_suite(&config) {
            Ok(report) => {
                let json = match serde_json::to_string_pretty(&report) {
                    Ok(j) => j,
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        return ExitCode::from(2);
                    }
                };
                if let Some(out) = out {
                    if let Err(e) = std::fs::write(&out, &json) {
                        eprintln!("error: {e:#}");
                        return ExitCode::from(2);
                    }
                } else {
                    println!("{json}");
                }
                if let Some(csv_path) = csv {
                    if let Err(e) = std::fs::write(&csv_path, suite_csv(&report)) {
                        eprintln!("error: {e:#}");
                        return ExitCode::from(2);
                    }
                }
                for entry in &report.runs {
                    println!(
                        "{} {} ({})",
                        if entry.pass { "PASS" } else { "FAIL" },
                        entry.config.display(),
                        entry.experiment
                    );
                }
                if report.all_pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}

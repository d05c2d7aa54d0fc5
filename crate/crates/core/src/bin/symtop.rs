//! Experiment runner: executes a configured verification or simulation task
//! and writes deterministic JSON/CSV artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use symtop::config::{ExperimentConfig, TaskKind};
use symtop::runner::execute;
use symtop::verify::{run_suite, Suite};

#[derive(Parser)]
#[command(name = "symtop", version, about = "Controllability verification toolkit for symmetric-top molecules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Fast,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the quantum controllability condition block by block.
    VerifyQuantum(TaskArgs),
    /// Sample classical states and certify Lie-bracket ranks.
    VerifyClassical(TaskArgs),
    /// Integrate a classical trajectory and export it as CSV.
    Simulate(TaskArgs),
    /// Check restricted controllability inside a fixed-k subspace.
    RestrictedSk(TaskArgs),
    /// Run the three-wave-mixing population-transfer demonstration.
    ThreeWave(TaskArgs),
    /// List the spectral gaps of a block with their classifications.
    ResonanceReport(TaskArgs),
    /// Run the acceptance suite and print a pass/fail table.
    ReproduceAll {
        /// fast skips the long j=1 closure; full runs everything.
        #[arg(value_enum)]
        suite: SuiteArg,
    },
}

#[derive(clap::Args)]
struct TaskArgs {
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the report and CSV traces.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads() {
    if let Ok(n) = std::env::var("SYMTOP_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run_task(task: TaskKind, args: &TaskArgs) -> Result<(), String> {
    let mut config =
        ExperimentConfig::from_file(&args.config).map_err(|e| e.to_string())?;
    if config.task != task {
        return Err(format!(
            "config task {:?} does not match the invoked subcommand",
            config.task
        ));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let artifacts = execute(&config).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
    let report_path = out_dir.join("report.json");
    std::fs::write(&report_path, artifacts.report.to_json()).map_err(|e| e.to_string())?;
    for (name, contents) in &artifacts.files {
        std::fs::write(out_dir.join(name), contents).map_err(|e| e.to_string())?;
    }
    println!("wrote {}", report_path.display());
    Ok(())
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::VerifyQuantum(a) => run_task(TaskKind::VerifyQuantum, a),
        Command::VerifyClassical(a) => run_task(TaskKind::VerifyClassical, a),
        Command::Simulate(a) => run_task(TaskKind::Simulate, a),
        Command::RestrictedSk(a) => run_task(TaskKind::RestrictedSk, a),
        Command::ThreeWave(a) => run_task(TaskKind::ThreeWave, a),
        Command::ResonanceReport(a) => run_task(TaskKind::ResonanceReport, a),
        Command::ReproduceAll { suite } => {
            let suite = match suite {
                SuiteArg::Fast => Suite::Fast,
                SuiteArg::Full => Suite::Full,
            };
            let results = run_suite(suite);
            let mut all_passed = true;
            for r in &results {
                let status = if r.passed { "PASS" } else { "FAIL" };
                println!("[{status}] criterion {:2}: {} — {} ({:.1}s)", r.id, r.name, r.detail, r.seconds);
                all_passed &= r.passed;
            }
            if all_passed {
                Ok(())
            } else {
                Err("one or more acceptance criteria failed".to_string())
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

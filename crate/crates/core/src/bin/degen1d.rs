//! Command-line driver: classify coefficients, run verification scenarios,
//! sweep parameter grids, and dump assembled matrices.
//!
//! Exit codes: 0 = all assertions pass, 1 = an assertion failed,
//! 2 = configuration or parse error.

use clap::{Parser, Subcommand};
use degen1d::report::sweep_csv;
use degen1d::scenario::{dump_matrix_artifact, run_scenario, sweep_scenario, Scenario, Tolerances};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "degen1d",
    version,
    about = "Degenerate 1-D divergence-form operators: classification and semigroup verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Scenario file (key = value format).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for the report and artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed overriding the scenario's `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Tolerance overrides file (key = value).
    #[arg(long)]
    tol_overrides: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classification only: trichotomy case, deficiency indices, extension menu.
    Classify(CommonArgs),
    /// Full verification run of the scenario's requested analyses.
    Run(CommonArgs),
    /// Parameter sweep over the scenario's grid block.
    Sweep(CommonArgs),
    /// Assemble the operator and dump it in coordinate format.
    DumpMatrix(CommonArgs),
}

fn load(args: &CommonArgs) -> Result<(Scenario, Tolerances), degen1d::Error> {
    let mut scenario = Scenario::from_file(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let mut tol = Tolerances::default();
    if let Some(path) = &args.tol_overrides {
        let text = std::fs::read_to_string(path)?;
        tol.apply_overrides(&text)?;
    }
    if let Some(n) = args.threads {
        // a failed pool build means one was already installed; keep going
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok((scenario, tol))
}

fn write_artifacts(
    out: &Option<PathBuf>,
    artifacts: &[degen1d::scenario::Artifact],
) -> std::io::Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        for a in artifacts {
            std::fs::write(dir.join(&a.name), &a.bytes)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, mode) = match &cli.command {
        Command::Classify(a) => (a, "classify"),
        Command::Run(a) => (a, "run"),
        Command::Sweep(a) => (a, "sweep"),
        Command::DumpMatrix(a) => (a, "dump-matrix"),
    };
    let (mut scenario, tol) = match load(common) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };

    match mode {
        "classify" => {
            scenario.analyses.clear();
            scenario
                .analyses
                .insert(degen1d::scenario::Analysis::Classify);
            let (report, artifacts) = run_scenario(&scenario, &tol);
            if let Err(e) = write_artifacts(&common.out, &artifacts) {
                eprintln!("write error: {e}");
                return ExitCode::from(2);
            }
            println!("{}", report.to_json());
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        "run" => {
            let (report, artifacts) = run_scenario(&scenario, &tol);
            if let Err(e) = write_artifacts(&common.out, &artifacts) {
                eprintln!("write error: {e}");
                return ExitCode::from(2);
            }
            for a in &report.assertions {
                println!(
                    "{} {} ({})",
                    if a.pass { "PASS" } else { "FAIL" },
                    a.name,
                    a.detail
                );
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        "sweep" => match sweep_scenario(&scenario, &tol) {
            Ok(rows) => {
                let csv = sweep_csv(&rows);
                if let Some(dir) = &common.out {
                    if let Err(e) = std::fs::create_dir_all(dir)
                        .and_then(|_| std::fs::write(dir.join("sweep.csv"), &csv))
                    {
                        eprintln!("write error: {e}");
                        return ExitCode::from(2);
                    }
                }
                print!("{csv}");
                if rows.iter().all(|r| r.error.is_none()) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("configuration error: {e}");
                ExitCode::from(2)
            }
        },
        "dump-matrix" => match dump_matrix_artifact(&scenario) {
            Ok(artifact) => {
                if let Some(dir) = &common.out {
                    if let Err(e) = std::fs::create_dir_all(dir)
                        .and_then(|_| std::fs::write(dir.join(&artifact.name), &artifact.bytes))
                    {
                        eprintln!("write error: {e}");
                        return ExitCode::from(2);
                    }
                } else {
                    print!("{}", String::from_utf8_lossy(&artifact.bytes));
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("configuration error: {e}");
                ExitCode::from(2)
            }
        },
        _ => unreachable!(),
    }
}

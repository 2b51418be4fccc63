//! `fockbench` command-line runner.
//!
//! Exit codes: 0 when every check passes, 2 when some check fails (the
//! report is still written), 1 for configuration and internal errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fockbench::experiments::{list_suites, run, ExperimentConfig, Suite};

#[derive(Parser)]
#[command(name = "fockbench", version, about = "Verification suites for truncated Fock-space operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite and write report.json plus CSV tables.
    Run(RunArgs),
    /// Print the suites and the formulas each one checks.
    ListSuites,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML configuration; without it the suite defaults are used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Suite name, overriding the config.
    #[arg(long)]
    suite: Option<String>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Multiplies every numeric tolerance.
    #[arg(long)]
    tolerance_scale: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListSuites => {
            for (suite, anchors) in list_suites() {
                println!("{suite}");
                for a in anchors {
                    println!("    {a}");
                }
            }
            println!("full\n    every suite above, in order");
            ExitCode::SUCCESS
        }
        Command::Run(args) => match execute(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}

fn execute(args: RunArgs) -> fockbench::Result<bool> {
    let mut cfg = match (&args.config, &args.suite) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::for_suite(Suite::parse(name)?),
        (None, None) => return Err(fockbench::Error::Config("pass --config or --suite".into())),
    };
    if let Some(name) = &args.suite {
        cfg.suite = Suite::parse(name)?;
    }
    if let Some(dir) = args.out {
        cfg.output.dir = dir;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(x) = args.tolerance_scale {
        cfg.tolerances.scale = x;
    }
    cfg.validate()?;
    if let Some(j) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| fockbench::Error::Config(format!("thread pool: {e}")))?;
    }
    let out = run(&cfg)?;
    let path = out.write(&cfg.output.dir)?;
    let s = &out.report.summary;
    for suite in &out.report.suites {
        for c in suite.checks.iter().filter(|c| !c.passed) {
            eprintln!("FAIL {} {}", suite.suite, c.name);
        }
    }
    println!("{} checks, {} passed, {} failed; report at {}", s.checks, s.passed, s.failed, path.display());
    Ok(s.all_passed)
}

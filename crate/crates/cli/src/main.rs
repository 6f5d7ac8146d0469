use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nsstab::experiment::{check_clf, run_benchmarks, run_case_study, ExperimentConfig, SEED_ENV};
use nsstab::Error;

#[derive(Parser)]
#[command(name = "nsstab", version, about = "Sample-and-hold stabilization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Accuracy sweep of the configured closed loop.
    CaseStudy {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Benchmark matrix with practical-stability verdicts.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Decay and semiconcavity diagnostics of a CLF.
    CheckClf {
        #[arg(long)]
        system: String,
        #[arg(long)]
        clf: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Sampling seed; `NSSTAB_SEED` takes precedence.
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    // anything wrong with the config (labels, dimensions, syntax) is a config error
    ExperimentConfig::load(path).map_err(|e| Failure::Config(e.to_string()))
}

fn jobs_arg(jobs: Option<usize>) -> Result<Option<usize>, Failure> {
    match jobs {
        Some(0) => Err(Failure::Config("--jobs must be at least 1".into())),
        j => Ok(j),
    }
}

fn case_study(config: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> Result<(), Failure> {
    let cfg = load(config)?;
    let jobs = jobs_arg(jobs)?;
    let out = out.unwrap_or_else(|| cfg.out_dir.clone());
    let start = Instant::now();
    let rows = run_case_study(&cfg, &out, jobs)?;
    println!(
        "{:>10} {:>14} {:>14} {:>14} {:>7} {:>9} {:>10}",
        "accuracy", "final |x|", "min V", "final V", "blowup", "unstable", "wall [s]"
    );
    for r in &rows {
        println!(
            "{:>10.0e} {:>14.6e} {:>14.6e} {:>14.6e} {:>7} {:>9} {:>10.2}",
            r.accuracy,
            r.final_norm,
            r.min_clf,
            r.final_clf,
            r.blowup,
            r.unstable,
            r.wall_time.as_secs_f64()
        );
    }
    println!("wrote {} ({:.2} s)", out.display(), start.elapsed().as_secs_f64());
    Ok(())
}

fn bench(config: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> Result<(), Failure> {
    let cfg = load(config)?;
    let jobs = jobs_arg(jobs)?;
    let out = out.unwrap_or_else(|| cfg.out_dir.clone());
    let start = Instant::now();
    let rows = run_benchmarks(&cfg, &out, jobs)?;
    println!(
        "{:<16} {:<14} {:<13} {:<16} {:>5} {:>10} {:>12}",
        "cell", "system", "controller", "clf", "pass", "entered", "final |x|"
    );
    for r in &rows {
        let entered = r.entered_at.map_or_else(|| "-".to_string(), |t| format!("{t:.3}"));
        println!(
            "{:<16} {:<14} {:<13} {:<16} {:>5} {:>10} {:>12.4e}",
            r.name, r.system, r.controller, r.clf, r.pass, entered, r.final_norm
        );
        for w in &r.warnings {
            println!("  warning: {w}");
        }
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    println!(
        "{passed} of {} cells pass; wrote {} ({:.2} s)",
        rows.len(),
        out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn clf_report(system: &str, clf: &str, samples: usize, seed: u64) -> Result<(), Failure> {
    let seed = match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("{SEED_ENV}=`{s}` is not an unsigned integer")))?,
        Err(_) => seed,
    };
    let report = check_clf(system, clf, samples, seed).map_err(|e| match e {
        Error::InvalidInput(m) => Failure::Config(m),
        e => e.into(),
    })?;
    println!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::CaseStudy { config, out, jobs } => case_study(&config, out, jobs),
        Command::Bench { config, out, jobs } => bench(&config, out, jobs),
        Command::CheckClf {
            system,
            clf,
            samples,
            seed,
        } => clf_report(&system, &clf, samples, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("nsstab: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("nsstab: {m}");
            ExitCode::from(1)
        }
    }
}

//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for numerical or
//! physicality failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hyperpurify::experiment::{self, rows_to_csv, ExperimentConfig, SweepRow, BUILTIN_NAMES};
use hyperpurify::fixture::{ingest_path, EXPERIMENTAL_TOL};
use hyperpurify::Error;

#[derive(Parser)]
#[command(name = "hyperpurify", version, about = "Hyperentanglement purification simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Built-in config name or path to a JSON config
    #[arg(long, default_value = "identity")]
    config: String,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and emit its report (default format json)
    Run(RunArgs),
    /// Run every point of the config's sweep grid (default format csv)
    Sweep(RunArgs),
    /// Check matrix files for physicality
    ValidateFixture {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, default_value_t = EXPERIMENTAL_TOL)]
        tol: f64,
    },
    /// List built-in config names
    Configs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run(args) => {
            let config = load(&args)?;
            let report = experiment::run(&config)?;
            let text = match args.format.unwrap_or(Format::Json) {
                Format::Json => report.to_json()?,
                Format::Csv => rows_to_csv(&[SweepRow::from_report(None, &report)?])?,
            };
            emit(&text, args.out.as_ref())
        }
        Command::Sweep(args) => {
            let config = load(&args)?;
            let result = experiment::sweep(&config)?;
            let text = match args.format.unwrap_or(Format::Csv) {
                Format::Json => result.to_json()?,
                Format::Csv => result.to_csv()?,
            };
            emit(&text, args.out.as_ref())
        }
        Command::ValidateFixture { paths, tol } => {
            let mut failed = 0;
            for path in &paths {
                match ingest_path::<f64>(path, tol) {
                    Ok(ing) => println!(
                        "{}: ok (hermiticity defect {:.3e}, min eigenvalue {})",
                        path.display(),
                        ing.hermiticity_defect,
                        ing.raw_report
                            .min_eigenvalue
                            .map_or_else(|| "n/a".to_string(), |l| format!("{l:.3e}"))
                    ),
                    Err(e) if e.is_config_error() => return Err(e),
                    Err(e) => {
                        println!("{}: FAILED {e}", path.display());
                        failed += 1;
                    }
                }
            }
            if failed > 0 {
                return Err(Error::Invalid(format!(
                    "{failed} of {} fixture(s) failed validation",
                    paths.len()
                )));
            }
            Ok(())
        }
        Command::Configs => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::resolve(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

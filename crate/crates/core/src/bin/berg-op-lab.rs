use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use berg_op_lab::config::{parse_config_with, Format, Overrides, Task};
use berg_op_lab::run::{run_report, ERROR_EXIT};
use berg_op_lab::{Error, Result};

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "BERG_OP_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "berg-op-lab", version, about = "Compactness, boundedness and Schatten diagnostics for differences of weighted composition operators")]
struct Cli {
    /// norms, schatten, carleson, criteria, lattice or hardy.
    task: Task,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Report file; defaults to the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv.
    #[arg(long)]
    format: Option<Format>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| Error::Config(format!("{THREADS_VAR} must be a positive integer, got '{v}'")))?;
    if n == 0 {
        return Err(Error::Config(format!("{THREADS_VAR} must be a positive integer, got '{v}'")));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))
}

fn main_inner(cli: Cli) -> Result<i32> {
    configure_threads()?;
    let text = std::fs::read_to_string(&cli.config).map_err(|e| Error::Io(format!("{}: {e}", cli.config.display())))?;
    let overrides = Overrides { task: Some(cli.task), out: cli.out, format: cli.format, seed: cli.seed };
    let cfg = parse_config_with(&text, &overrides).map_err(|e| Error::Config(format!("{}: {e}", cli.config.display())))?;
    let (report, status) = run_report(&cfg)?;
    print!("{}", report.summary());
    println!("report written to {}", cfg.output_path().display());
    Ok(status.code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("berg-op-lab: {e}");
            ExitCode::from(ERROR_EXIT as u8)
        }
    }
}

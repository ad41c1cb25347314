use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowibp_cli::{
    default_seed, emit_report, exit, load_config, run_suite, CliError, Experiment, OutputFormat, RunOptions, Status,
};

#[derive(Parser)]
#[command(
    name = "flowibp",
    version,
    about = "Monte Carlo checks of gradient formulas and integration by parts for stochastic flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config file.
    Run {
        config: PathBuf,
        /// Worker threads per experiment (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Report path; `-` for stdout. Overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `format` in the config.
        #[arg(long)]
        format: Option<OutputFormat>,
        /// Write wall_ms = 0 for byte-reproducible reports.
        #[arg(long)]
        omit_timing: bool,
        /// Scale every right-hand side (harness self-test).
        #[arg(long, hide = true)]
        corrupt_rhs: Option<f64>,
    },
    /// Print the experiment registry.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<26} {}", e.name(), e.description());
            }
            exit::PASS
        }
        Command::Run { config, jobs, out, format, omit_timing, corrupt_rhs } => {
            match run(config, jobs, out, format, RunOptions { omit_timing, corrupt_rhs }) {
                Ok(code) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    };
    ExitCode::from(code as u8)
}

fn run(
    config: PathBuf,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    options: RunOptions,
) -> Result<i32, CliError> {
    let file = load_config(&config, default_seed()?)?;
    for warning in file.experiments.iter().flat_map(|e| &e.warnings) {
        eprintln!("warning: {warning}");
    }
    let outcome = run_suite(&file.experiments, jobs, &options, |row| {
        let detail = match (&row.status, &row.message) {
            (Status::Error, Some(m)) => format!(" ({m})"),
            _ => String::new(),
        };
        eprintln!("{:<5} {} z={:.3} {}ms{detail}", row.status.as_str(), row.experiment, row.z, row.wall_ms);
    })?;
    let format = format.or(file.format).unwrap_or(OutputFormat::Csv);
    let out = out.or(file.output.map(|p| config.parent().unwrap_or(".".as_ref()).join(p)));
    emit_report(&outcome.rows, format, out.as_deref())?;
    Ok(outcome.exit_code())
}

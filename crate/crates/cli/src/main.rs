use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rotor_cli::commands::{self, wigner::WignerArgs, Globals};
use rotor_cli::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "cavity-rotor",
    version,
    about = "Cavity-shaped spinor rotor simulator"
)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ensembles.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Resolve parameters and drives; write a calibration report and an
    /// explicit config.
    Calibrate,
    /// Evolve the configured protocol.
    Run,
    /// Numerical self-checks at the configured resolution.
    Validate,
    /// Wigner map of a saved state.
    Wigner {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 121)]
        n_theta: usize,
        #[arg(long, default_value_t = 121)]
        n_l: usize,
        /// Half-width in standard deviations.
        #[arg(long, default_value_t = 5.0)]
        extent: f64,
        #[arg(long, default_value = "state")]
        label: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let g = Globals {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        workers: cli.workers,
        strict: cli.strict,
    };
    if g.workers == Some(0) {
        return fail(&g, CliError::Config("--workers must be at least 1".into()));
    }
    let result = match &cli.command {
        Command::Calibrate => commands::calibrate::run(&g),
        Command::Run => commands::run::run(&g),
        Command::Validate => commands::validate::run(&g),
        Command::Wigner {
            state,
            n_theta,
            n_l,
            extent,
            label,
        } => commands::wigner::run(
            &g,
            &WignerArgs {
                state: state.clone(),
                n_theta: *n_theta,
                n_l: *n_l,
                extent: *extent,
                label: label.clone(),
            },
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&g, e),
    }
}

/// Reports the error on stderr as JSON and, when an output directory is
/// known, as `error.json` there too.
fn fail(g: &Globals, e: CliError) -> ExitCode {
    let report = e.report();
    let text = serde_json::to_string_pretty(&report).unwrap_or_else(|_| e.to_string());
    eprintln!("{text}");
    if let Some(dir) = &g.out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), format!("{text}\n"));
        }
    }
    ExitCode::from(report.exit_code)
}

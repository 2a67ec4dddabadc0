use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nvgate::experiments::{self, config::Format, ScenarioConfig};
use nvgate::results::ScanResult;
use nvgate::Error;

#[derive(Parser)]
#[command(
    name = "nvgate",
    version,
    about = "Electron-mediated nuclear gate scenarios"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent and the config names none.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 gives the serial reference execution.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Polarization (or electron) spectrum against tau.
    Spectrum,
    /// Calibrate the delays of a direct gate.
    Calibrate,
    /// Simulate one gate with the configured errors and spectators.
    Simulate,
    /// Infidelity over detuning and amplitude errors.
    ScanErrors,
    /// Infidelity against the frequency of an intruder spin.
    ScanIntruder,
    /// Direct against sequential gate.
    Compare,
    /// First-order error derivatives against sequence length.
    DiagnoseErrors,
}

#[derive(ValueEnum, Clone, Copy)]
enum OutFormat {
    Csv,
    Json,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::CalibrationFailure { .. } | Error::NoSolution(_) => 3,
        _ => 4,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let cfg = ScenarioConfig::load(path)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let result: ScanResult = match cli.verb {
        Verb::Spectrum => experiments::run_spectrum(&cfg)?,
        Verb::Calibrate => experiments::run_calibrate_report(&cfg)?,
        Verb::Simulate => experiments::run_simulate(&cfg)?,
        Verb::ScanErrors => experiments::run_error_scan(&cfg)?,
        Verb::ScanIntruder => experiments::run_third_spin_scan(&cfg)?,
        Verb::Compare => experiments::run_comparison(&cfg)?,
        Verb::DiagnoseErrors => experiments::run_error_diagnostics(&cfg)?,
    };
    let format = match cli.format {
        Some(OutFormat::Csv) => Format::Csv,
        Some(OutFormat::Json) => Format::Json,
        None => cfg.output.format,
    };
    let text = match format {
        Format::Csv => result.to_csv(),
        Format::Json => result.to_json(),
    };
    match cli.out.as_ref().or(cfg.output.path.as_ref()) {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nvgate: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

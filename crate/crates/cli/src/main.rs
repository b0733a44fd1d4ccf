use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coherent_ft_cli::{run, CliError, Mode, ScenarioConfig};

/// Coherent-energy fluctuation scenarios: exact TPM statistics, emulated
/// photon counting, fluctuation-theorem sweeps and energy ledgers.
///
/// Log verbosity follows RUST_LOG (e.g. RUST_LOG=info).
#[derive(Parser)]
#[command(name = "coherent-ft", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `sampling.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact coherent-energy distribution over a beta grid.
    Tpm(Common),
    /// Emulated photon counts with bootstrap error bars.
    Sample(Common),
    /// <exp(-beta C)> over a beta grid, exact or emulated.
    Ift(Common),
    /// Forward/backward log-ratios against beta C.
    Dft(Common),
    /// Mean coherent energy over a (theta, beta) grid.
    Arrow(Common),
    /// Work/heat/coherent-energy ledger of a trajectory file.
    Decompose(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Tpm(c) => (Mode::TpmExact, c),
        Command::Sample(c) => (Mode::TpmSample, c),
        Command::Ift(c) => (Mode::IftSweep, c),
        Command::Dft(c) => (Mode::DftSweep, c),
        Command::Arrow(c) => (Mode::ArrowSweep, c),
        Command::Decompose(c) => (Mode::Decompose, c),
    };
    let result = ScenarioConfig::load(&common.config)
        .and_then(|cfg| run(&cfg, mode, common.seed, common.out.as_deref()));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    let report = serde_json::to_string(&e.report()).expect("report serializes");
    eprintln!("{report}");
    ExitCode::from(e.exit_code() as u8)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lab::commands::{self, Format, Run};
use lab::config::{parse_config, LabConfig};

#[derive(Parser, Debug)]
#[command(name = "lab", version, about = "Simulate, price and verify the Lévy-field credit model")]
struct Cli {
    /// TOML configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `[experiment] seed`.
    #[arg(long, global = true, env = "LAB_SEED")]
    seed: Option<u64>,
    /// Worker threads for path simulation; all cores when omitted.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Density, survival and intensity curves of a few paths at the pricing date.
    Simulate,
    /// Pre-default bond prices per path.
    Price,
    /// Solve one pricing kernel on the state grid.
    Pide,
    /// Price distribution, its density estimate and the configured sweeps.
    Experiment {
        #[arg(value_enum, default_value_t = Preset::Section7)]
        preset: Preset,
    },
    /// Kernel density estimate of a column of numbers.
    Kde {
        #[arg(long)]
        input: PathBuf,
        /// Column to read; the last one when omitted.
        #[arg(long)]
        column: Option<String>,
    },
    /// Run the oracle checks and write a pass/fail report.
    Verify,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Section7,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = match &cli.config {
        Some(path) => parse_config(path)?,
        None => LabConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.experiment.seed = seed;
    }
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let run = Run::new(config, cli.out, cli.format)?;
    match cli.command {
        Command::Simulate => commands::simulate(&run),
        Command::Price => commands::price(&run),
        Command::Pide => commands::pide(&run),
        Command::Experiment { preset: Preset::Section7 } => commands::experiment(&run),
        Command::Kde { input, column } => commands::kde(&run, &input, column.as_deref()),
        Command::Verify => commands::verify(&run),
    }
}

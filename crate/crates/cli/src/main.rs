use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use irfs_cli::config::{ExperimentConfig, OutputFormat};
use irfs_cli::error::CliError;
use irfs_cli::{presets, runner};

#[derive(Parser)]
#[command(
    name = "irfs",
    about = "Simulation and verification lab for iterated random function systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker pool size for check fan-out and replica ensembles.
    #[arg(long, global = true)]
    parallel: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a built-in preset name.
    Run {
        /// Path to a TOML experiment config, or a preset name.
        config: String,
        /// Override the noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format override: json or csv.
        #[arg(long)]
        format: Option<String>,
    },
    /// List the built-in experiment presets.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.parallel {
        // Only effective once per process; later calls are ignored.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::List => {
            for preset in presets::PRESETS {
                println!("{:<20} {}", preset.name, preset.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            seed,
            out,
            format,
        } => match execute(&config, seed, out, format) {
            Ok(code) => ExitCode::from(code as u8),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}

fn execute(
    config_arg: &str,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<String>,
) -> Result<i32, CliError> {
    let mut config: ExperimentConfig = if let Some(preset) = presets::find(config_arg) {
        ExperimentConfig::from_toml(preset.toml)?
    } else {
        let text = std::fs::read_to_string(config_arg)
            .map_err(|e| CliError::Io(format!("cannot read {config_arg}: {e}")))?;
        ExperimentConfig::from_toml(&text)?
    };
    if let Some(seed) = seed {
        config.noise.seed = seed;
    }
    if let Some(format) = format {
        config.output.format = match format.as_str() {
            "json" => OutputFormat::Json,
            "csv" => OutputFormat::Csv,
            other => {
                return Err(CliError::Config(format!(
                    "unknown format \"{other}\"; use json or csv"
                )))
            }
        };
    }

    let report = runner::run_experiment(&config)?;
    let rendered = match config.output.format {
        OutputFormat::Json => report.to_json()?,
        OutputFormat::Csv => report.to_csv()?,
    };
    let path = out.or_else(|| config.output.path.as_ref().map(PathBuf::from));
    match path {
        Some(path) => std::fs::write(&path, &rendered)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{rendered}"),
    }
    for record in &report.results {
        eprintln!(
            "{:<6} {}",
            format!("{:?}", record.outcome).to_lowercase(),
            record.check
        );
    }
    eprintln!(
        "summary: {} pass, {} fail, {} inconclusive",
        report.summary.pass, report.summary.fail, report.summary.inconclusive
    );
    Ok(report.summary.exit_code)
}

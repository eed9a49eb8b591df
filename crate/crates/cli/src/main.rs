use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use phlab_cli::registry::{render_catalog, EXPERIMENTS, MODELS};
use phlab_cli::runner::write_outputs;
use phlab_cli::{run, CliError, ExperimentConfig, Overrides};

/// Exit status when rows fail.
const EXIT_FAILED_ROWS: u8 = 1;
/// Exit status for configuration and I/O errors.
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "phlab", version, about = "Numerical experiments in pseudohermitian geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config, optionally overriding fields.
    Run {
        /// Config file; may be omitted when --model and --experiment are given.
        config: Option<PathBuf>,
        /// Model, e.g. `sphere:n=2` or `quadric:sign=-,c=0.5`.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Report JSON path; the row CSV and circle table go next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated, strictly decreasing radii.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Number of evaluation points.
        #[arg(long)]
        points: Option<usize>,
        /// Print the report as JSON instead of the text summary.
        #[arg(long)]
        json: bool,
    },
    /// List registered models or experiments.
    List {
        what: Catalog,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Catalog {
    Models,
    Experiments,
}

fn load(config: Option<PathBuf>, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    match config {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path, source })?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            cfg.apply(overrides)?;
            Ok(cfg)
        }
        None => ExperimentConfig::from_overrides(overrides),
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("PHLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|n| *n > 0) {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    configure_threads();
    match Cli::parse().command {
        Command::List { what, json } => {
            let entries = match what {
                Catalog::Models => MODELS,
                Catalog::Experiments => EXPERIMENTS,
            };
            println!("{}", render_catalog(entries, json));
            ExitCode::SUCCESS
        }
        Command::Run { config, model, experiment, seed, out, radii, points, json } => {
            let overrides = Overrides { model, experiment, seed, out, radii, points };
            let result = load(config, &overrides).and_then(|cfg| {
                let mut output = run(&cfg)?;
                output.report.stamp_now();
                write_outputs(&cfg, &output)?;
                Ok(output)
            });
            match result {
                Ok(output) => {
                    if json {
                        println!("{}", output.report.to_json());
                    } else {
                        print!("{}", output.report.render_text());
                    }
                    if output.report.all_pass() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_FAILED_ROWS)
                    }
                }
                Err(e) => {
                    eprintln!("phlab: {e}");
                    ExitCode::from(EXIT_USAGE)
                }
            }
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use cactus_cli::workflow::{self, SplitParams, TrainOptions, DEFAULT_VALIDATION_FRACTION};
use cactus_cli::ApiError;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cactus", version, about = "Inspect, resolve and train objective functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SplitArgs {
    /// Share of rows held out for validation.
    #[arg(long, default_value_t = DEFAULT_VALIDATION_FRACTION)]
    validation_fraction: f64,
    /// Seed of the stratified train/validation split.
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
}

impl SplitArgs {
    fn params(&self) -> SplitParams {
        SplitParams {
            validation_fraction: self.validation_fraction,
            seed: self.split_seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Report conflicts between objectives, most severe first.
    Lint {
        function: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Select and train a model; writes selection.json, model_card.json and function.json.
    Train {
        function: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the function's sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Caps the number of sampled configs.
        #[arg(long)]
        max_samples: Option<usize>,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Holds `<dataset>.csv` files and the `sessions/` directory.
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value_t = cactus_cli::api::DEFAULT_SAMPLE_CAP)]
        max_samples: usize,
    },
}

fn fail(e: &ApiError) -> ExitCode {
    eprintln!("error[{}]: {}", e.code, e.message);
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Lint {
            function,
            data,
            json,
            split,
        } => match workflow::lint(&function, &data, &split.params()) {
            Ok(report) => {
                if json {
                    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
                } else {
                    for w in &report.warnings {
                        eprintln!("warning[{:?}]: {}", w.code, w.message);
                    }
                    if report.conflicts.is_empty() {
                        println!("no conflicts");
                    }
                    for c in &report.conflicts {
                        println!(
                            "{}  {} x {}  severity {}  [{}]",
                            c.hash,
                            c.left_key,
                            c.right_key,
                            c.severity,
                            c.conflicted_ids.join(", ")
                        );
                    }
                }
                if report.conflicts.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => fail(&e),
        },
        Command::Train {
            function,
            data,
            out,
            seed,
            max_samples,
            split,
        } => {
            let options = TrainOptions {
                split: split.params(),
                seed,
                max_samples,
            };
            match workflow::train(&function, &data, &out, &options) {
                Ok(outcome) => {
                    println!(
                        "validation accuracy: {:.2}",
                        outcome.result.best.validation_accuracy * 100.0
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Serve {
            port,
            data_dir,
            max_samples,
        } => {
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match runtime.block_on(cactus_cli::api::serve(port, data_dir, max_samples)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

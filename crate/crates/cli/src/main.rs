mod commands;
mod server;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dda_core::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "dda", version, about = "Air-hockey dynamic difficulty adjustment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct ConfigArgs {
    /// JSON experiment configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named preset used when no config file is given (desk or full).
    #[arg(long, global = true, default_value = "desk")]
    preset: String,
}

impl ConfigArgs {
    pub fn load(&self) -> dda_core::Result<ExperimentConfig> {
        match &self.config {
            Some(path) => ExperimentConfig::load(path),
            None => ExperimentConfig::preset(&self.preset),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Play one scripted match and print its summary.
    Simulate(commands::SimulateArgs),
    /// Meta-train the fast-adapt policy.
    TrainMeta(commands::TrainArgs),
    /// Train the LSTM-FC baseline.
    TrainLstmfc(commands::TrainArgs),
    /// Run evaluation sessions against the held-out population.
    Eval(commands::EvalArgs),
    /// Time one training epoch of each learned method.
    Throughput(commands::ThroughputArgs),
    /// Serve live sessions over WebSocket.
    Serve(server::ServeArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::TrainMeta(args) => commands::train_meta(&args),
        Command::TrainLstmfc(args) => commands::train_lstmfc(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Throughput(args) => commands::throughput(&args),
        Command::Serve(args) => server::serve(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

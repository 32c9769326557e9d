//! `leafwet`: synthesize THz leaf traces, train and evaluate the tree and
//! CNN regressors, run generalization scenarios and export activations.

mod commands;
mod config;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leafwet::eval::ScenarioId;

use commands::{InspectArgs, ModelArg};
use config::{Preset, RunConfig};
use error::{CliError, CliResult, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "leafwet", version, about = "THz leaf-wetness synthesis and regression")]
struct Cli {
    /// Worker threads; 1 gives the reference single-threaded run.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set sim.n_series=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset.
    Synth {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Base simulator settings applied before the config file.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a dataset.
    Train {
        /// Model family.
        #[arg(value_enum)]
        model: ModelArg,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Dataset directory written by `synth`.
        #[arg(long)]
        data: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained model on a dataset.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Directory holding model.json (and weights.f32 for a CNN).
        #[arg(long)]
        model: PathBuf,
        /// Dataset directory written by `synth`.
        #[arg(long)]
        data: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and test both models on one scenario split.
    Scenario {
        /// random, I, II or III
        id: String,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// TopSide dataset directory.
        #[arg(long)]
        top: PathBuf,
        /// BottomSide dataset directory (scenarios II and III).
        #[arg(long)]
        bottom: Option<PathBuf>,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Export CNN activations and trace statistics.
    Inspect {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// CNN model directory written by `train cnn`.
        #[arg(long)]
        model: PathBuf,
        /// Dataset directory written by `synth`.
        #[arg(long)]
        data: PathBuf,
        /// Record indices, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        records: Vec<usize>,
        /// Reference record for xi; defaults to the dry record of each series.
        #[arg(long)]
        reference: Option<usize>,
        /// Export xi relative to the reference.
        #[arg(long)]
        xi: bool,
        /// Export the dataset's standard deviation sigma(t).
        #[arg(long)]
        sigma: bool,
        /// Also write SVG line plots.
        #[arg(long)]
        svg: bool,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(c: &ConfigArgs, base: RunConfig) -> CliResult<RunConfig> {
    RunConfig::load(base, c.config.as_deref(), &c.sets)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    match cli.cmd {
        Cmd::Synth { cfg, preset, out } => commands::synth(&load(&cfg, RunConfig::with_preset(preset))?, &out),
        Cmd::Train { model, cfg, data, out } => commands::train(model, &load(&cfg, RunConfig::default())?, &data, &out),
        Cmd::Eval { cfg, model, data, out } => commands::eval(&load(&cfg, RunConfig::default())?, &model, &data, &out),
        Cmd::Scenario { id, cfg, top, bottom, out } => {
            let id: ScenarioId = id.parse().map_err(|e: leafwet::Error| CliError::Usage(e.to_string()))?;
            commands::scenario(&load(&cfg, RunConfig::default())?, id, &top, bottom.as_deref(), &out)
        }
        Cmd::Inspect { cfg, model, data, records, reference, xi, sigma, svg, out } => {
            let args = InspectArgs { model: &model, data: &data, records: &records, reference, xi, sigma, svg, out: &out };
            commands::inspect(&load(&cfg, RunConfig::default())?, &args)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robin_core::model::Variant;
use robin_core::stress::StressKind;

use crate::config::TrainFlags;

/// Interpretable tabular classification with squeeze-and-excitation and
/// self-attention.
#[derive(Debug, Parser)]
#[command(name = "robin", version, about)]
struct Cli {
    /// Maximum worker threads for folds and runs (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
pub struct DataArgs {
    /// Input CSV with one column per schema attribute.
    #[arg(long)]
    pub data: PathBuf,
    /// Schema JSON; the bundled clinical schema when omitted.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic patient table with a planted diagnostic rule.
    Synth {
        /// Seed; falls back to ROBIN_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 151)]
        n: usize,
        #[arg(long, default_value_t = 97.0 / 151.0)]
        positive_fraction: f64,
        #[arg(long, default_value_t = 0.0)]
        missing_rate: f64,
        /// Use exactly round(n * positive_fraction) positives.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on the whole table and save it.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "robin")]
        variant: Variant,
        #[command(flatten)]
        flags: TrainFlags,
        #[arg(long)]
        out_model: PathBuf,
        /// Also write the per-epoch training loss as CSV.
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation.
    Crossval {
        #[command(flatten)]
        data: DataArgs,
        /// One or more variants, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "robin")]
        variant: Vec<Variant>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        flags: TrainFlags,
        /// Report JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated stratified train/test splits.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "robin")]
        variant: Vec<Variant>,
        /// Training fraction of each split.
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        #[arg(long, default_value_t = 25)]
        runs: usize,
        #[command(flatten)]
        flags: TrainFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score models on perturbed test halves.
    Stress {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "robin,senn,sann,dnn,mlp")]
        variant: Vec<Variant>,
        #[arg(long, value_delimiter = ',', default_value = "noise,erase,both")]
        kinds: Vec<StressKind>,
        /// Strengths: σ² for noise, erased fraction for erasure.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3333,0.5")]
        levels: Vec<f64>,
        /// Allow strengths other than 0, 0.1, 0.2, 1/3 and 0.5.
        #[arg(long)]
        free_levels: bool,
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        #[arg(long, default_value_t = 25)]
        runs: usize,
        #[command(flatten)]
        flags: TrainFlags,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Export importance scores, attention heatmaps and representations.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Row indices to render heatmaps for.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        samples: Vec<usize>,
        /// Also render heatmaps as grayscale PNG.
        #[arg(long)]
        png: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// 1 for usage errors, 3 for numeric failures, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<robin_core::Error>() {
            return match e {
                robin_core::Error::InvalidArgument(_) => 1,
                robin_core::Error::NonFinite(_) | robin_core::Error::NonFiniteLoss { .. } => 3,
                _ => 2,
            };
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(robin_core::Error::InvalidArgument("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    match cli.command {
        Command::Synth {
            seed,
            n,
            positive_fraction,
            missing_rate,
            exact,
            out,
        } => commands::synth(seed, n, positive_fraction, missing_rate, exact, &out),
        Command::Train {
            data,
            variant,
            flags,
            out_model,
            loss_csv,
        } => commands::train(&data, variant, &flags, &out_model, loss_csv.as_deref()),
        Command::Crossval {
            data,
            variant,
            k,
            flags,
            out,
        } => commands::crossval(&data, &variant, k, &flags, &out),
        Command::Evaluate {
            data,
            variant,
            split,
            runs,
            flags,
            out,
        } => commands::evaluate(&data, &variant, split, runs, &flags, &out),
        Command::Stress {
            data,
            variant,
            kinds,
            levels,
            free_levels,
            split,
            runs,
            flags,
            out_dir,
        } => commands::stress(
            &data,
            &variant,
            commands::StressArgs {
                kinds,
                levels,
                free_levels,
                split,
                runs,
            },
            &flags,
            &out_dir,
        ),
        Command::Explain {
            model,
            data,
            samples,
            png,
            out_dir,
        } => commands::explain(&model, &data, &samples, png, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        let usage: anyhow::Error = robin_core::Error::InvalidArgument("x".into()).into();
        assert_eq!(exit_code(&usage), 1);
        let nan: anyhow::Error = robin_core::Error::NonFiniteLoss {
            epoch: 3,
            value: f64::NAN,
        }
        .into();
        assert_eq!(exit_code(&nan.context("training")), 3);
        let data: anyhow::Error = robin_core::Error::MissingColumn("SPEECH".into()).into();
        assert_eq!(exit_code(&data), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 2);
    }
}

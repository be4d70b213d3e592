use std::path::PathBuf;
use std::process::ExitCode;

use augforge::config::{ExperimentConfig, SynthCommandConfig};
use augforge::error::{CliError, CliResult, EXIT_CONFIG};
use augforge::experiment::{cmd_baseline, cmd_plot, cmd_run, cmd_synth};
use augforge::fetch::{fetch_mnist, FileStatus, Manifest};
use augforge::plot::Metric;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "augforge", version, about = "Generative data augmentation for small tabular datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Eval,
    Test,
}

#[derive(Subcommand)]
enum Command {
    /// Run the augmentation experiment described by a JSON config
    Run {
        config: PathBuf,
        /// Run the model kinds concurrently
        #[arg(long)]
        parallel: bool,
    },
    /// Cross-validated logistic-regression baseline
    Baseline { config: PathBuf },
    /// Download and verify the MNIST IDX files
    FetchMnist {
        dest: PathBuf,
        /// Base URL, file:// URL or directory holding the .gz archives
        #[arg(long)]
        source_url: Option<String>,
        /// Checksum manifest replacing the bundled one
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Plot F-score traces as SVG
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Horizontal reference line, in percent
        #[arg(long)]
        baseline: Option<f64>,
        #[arg(long, value_enum, default_value = "test")]
        metric: MetricArg,
        #[arg(long, default_value = "F-score vs reconstructions")]
        title: String,
    },
    /// Write the synthetic surrogate dataset as CSV
    Synth { config: PathBuf },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, parallel } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = cmd_run(&cfg, parallel)?;
            println!(
                "baseline: LR test F {:.4}, DNN test F {:.4}",
                report.baseline.lr_test_f, report.baseline.dnn_test_f
            );
            for row in &report.best {
                println!(
                    "{}: best test F {:.4} at {} ({} synthetic rows, {} batches accepted)",
                    row.model, row.best_test_f, row.best_test_index, row.synthetic_rows, row.accepted_batches
                );
            }
            println!("report written to {}", cfg.output_dir.display());
        }
        Command::Baseline { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let table = cmd_baseline(&cfg)?;
            for row in &table.rows {
                println!(
                    "{}/{}: F {:.4} over {} fold(s), {:.1} features, representative fold {}",
                    row.feature_set,
                    row.variant,
                    row.f_score,
                    row.folds.len(),
                    row.mean_features,
                    row.representative_fold
                );
            }
        }
        Command::FetchMnist {
            dest,
            source_url,
            manifest,
        } => {
            let manifest = match manifest {
                Some(p) => Manifest::load(&p)?,
                None => Manifest::builtin(),
            };
            for outcome in fetch_mnist(&dest, &manifest, source_url.as_deref())? {
                let status = match outcome.status {
                    FileStatus::AlreadyValid => "ok (already present)",
                    FileStatus::Downloaded => "downloaded",
                };
                println!("{}: {status}", outcome.name);
            }
        }
        Command::Plot {
            traces,
            output,
            baseline,
            metric,
            title,
        } => {
            let metric = match metric {
                MetricArg::Eval => Metric::Eval,
                MetricArg::Test => Metric::Test,
            };
            cmd_plot(&traces, &output, baseline, metric, &title)?;
        }
        Command::Synth { config } => {
            let cfg = SynthCommandConfig::load(&config)?;
            let ds = cmd_synth(&cfg)?;
            println!("{} rows × {} columns written to {}", ds.len(), ds.num_features(), cfg.output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("augforge: {e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use plotbench::clients::Client;
use plotbench::harness::{
    analyze_features, generate_dataset, load_dataset, make_client, read_scores, report, run_benchmark, score_run, write_features,
    write_report, DatasetConfig, RunManifest, RunOptions, RUN_MANIFEST_FILE,
};

#[derive(Parser)]
#[command(name = "plotbench", version, about = "Synthetic chart-understanding benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset of plots with ground truth.
    Generate {
        /// JSON dataset config; defaults are used for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ask clients every question about every sample.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        /// `oracle`, `baseline:<kind>` or a configured endpoint name. Repeatable.
        #[arg(long = "client", required = true)]
        clients: Vec<String>,
        #[arg(long, default_value_t = 3)]
        repeats: u32,
        /// Directory holding run directories.
        #[arg(long)]
        out: PathBuf,
        /// Endpoint definitions to use instead of the dataset's.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Ask again for tuples whose stored response is an error.
        #[arg(long)]
        retry_failed: bool,
    },
    /// Parse and score a run's stored replies.
    Score {
        #[arg(long)]
        run: PathBuf,
        /// Defaults to the dataset recorded in the run manifest.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Aggregate scores into report tables.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
    /// Break scores down by plot features.
    Analyze {
        #[arg(long)]
        run: PathBuf,
    },
}

fn read_config(path: &Path) -> Result<DatasetConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { config, seed, out } => {
            let config = match config {
                Some(p) => read_config(&p)?,
                None => DatasetConfig::default(),
            };
            let manifest = generate_dataset(&config, seed, &out)?;
            println!("wrote {} samples to {}", manifest.samples.len(), out.display());
        }
        Command::Run {
            dataset,
            clients,
            repeats,
            out,
            config,
            retry_failed,
        } => {
            let dataset = load_dataset(&dataset)?;
            let endpoints = match config {
                Some(p) => read_config(&p)?.endpoints,
                None => dataset.manifest.config.endpoints.clone(),
            };
            let built = clients
                .iter()
                .map(|name| make_client(name, &endpoints))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&dyn Client> = built.iter().map(|c| c.as_ref()).collect();
            let summary = run_benchmark(&dataset, &refs, &RunOptions { repeats, retry_failed }, &out)?;
            println!(
                "run {}: {} tuples, {} asked, {} already answered, {} failed",
                summary.run_dir.display(),
                summary.total,
                summary.issued,
                summary.skipped,
                summary.failed
            );
            if summary.is_partial() {
                eprintln!("run is partial: {} tuples ended in an error", summary.failed);
                return Ok(ExitCode::from(2));
            }
        }
        Command::Score { run, dataset } => {
            let dataset_dir = match dataset {
                Some(d) => d,
                None => {
                    let p = run.join(RUN_MANIFEST_FILE);
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    let m: RunManifest = serde_json::from_str(&text)?;
                    PathBuf::from(m.dataset_dir)
                }
            };
            let dataset = load_dataset(&dataset_dir)?;
            let records = score_run(&run, &dataset)?;
            println!("scored {} responses", records.len());
        }
        Command::Report { run } => {
            let records = read_scores(&run)?;
            if records.is_empty() {
                bail!("no scores in {}", run.display());
            }
            let rep = report(&records)?;
            write_report(&run, &rep)?;
            println!("wrote report to {}", run.display());
        }
        Command::Analyze { run } => {
            let records = read_scores(&run)?;
            write_features(&run, &analyze_features(&records))?;
            println!("wrote feature analysis to {}", run.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

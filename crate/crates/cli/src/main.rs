use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use apm_core::data::{generate_synthetic, write_csv, SyntheticKind};
use apm_core::harness::{run_experiment, DatasetSource, ExperimentConfig};
use apm_core::infotheory::verify_info_continuity;
use apm_core::logreg::DEFAULT_LAMBDA;
use apm_core::numkit::RngStream;
use apm_core::selection::{PolicyKind, PolicySpec, DEFAULT_INFOGAIN_SAMPLES};

#[derive(Parser)]
#[command(name = "apm", version, about = "Active logistic regression by approximate posterior matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run synchronized active-learning trials and write per-trial CSVs plus aggregate.json.
    Run(RunArgs),
    /// Check the information-continuity bound on random Gaussian inputs; prints JSON.
    Verify(VerifyArgs),
    /// Synthetic dataset utilities.
    Datasets {
        #[command(subcommand)]
        command: DatasetsCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    /// CSV path, `synthetic:<clouds|cross|horseshoe>`, or `synthetic:gauss<d>`.
    #[arg(long)]
    dataset: String,
    /// Label column of a CSV dataset.
    #[arg(long, default_value = "label")]
    label_col: String,
    /// CSV label value mapped to −1 (default: the lexicographically smaller one).
    #[arg(long)]
    negative_label: Option<String>,
    /// Size of a synthetic dataset.
    #[arg(long, default_value_t = 600)]
    n: usize,
    /// Class separation for `synthetic:gauss<d>`.
    #[arg(long, default_value_t = 2.0)]
    separation: f64,
    /// Comma-separated policy names, e.g. APM_LR,Uncertainty,Random.
    #[arg(long, value_delimiter = ',', required = true)]
    policies: Vec<String>,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    horizon: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Posterior samples per InfoGain round.
    #[arg(long, default_value_t = DEFAULT_INFOGAIN_SAMPLES)]
    samples: usize,
    /// Trials run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated power constraints.
    #[arg(long = "P", value_delimiter = ',', required = true)]
    powers: Vec<f64>,
    #[arg(long)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum DatasetsCommand {
    /// Write a synthetic dataset as CSV (columns x1, x2, label).
    Gen {
        name: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_dataset(a: &RunArgs) -> Result<DatasetSource> {
    let Some(name) = a.dataset.strip_prefix("synthetic:") else {
        return Ok(DatasetSource::Csv {
            path: PathBuf::from(&a.dataset),
            label_col: a.label_col.clone(),
            negative_label: a.negative_label.clone(),
        });
    };
    if let Some(d) = name.strip_prefix("gauss") {
        let dim = d.parse().with_context(|| format!("bad dimension in `{name}`"))?;
        return Ok(DatasetSource::Gaussian { dim, n: a.n, separation: a.separation });
    }
    Ok(DatasetSource::Synthetic { kind: name.parse()?, n: a.n })
}

fn run(a: RunArgs) -> Result<()> {
    let policies = a
        .policies
        .iter()
        .map(|p| Ok(PolicySpec::with_samples(p.parse::<PolicyKind>()?, a.samples)?))
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = ExperimentConfig::new(parse_dataset(&a)?, policies, a.trials, a.horizon);
    cfg.lambda = a.lambda;
    cfg.master_seed = a.seed;
    cfg.jobs = a.jobs;
    cfg.output = Some(a.out.clone());
    let result = run_experiment(&cfg)?;
    for p in &result.aggregate.policies {
        eprintln!(
            "{:<12} final mean acc {:.4} ± {:.4}  median select {:.3e}s  median vem {:.3e}s",
            p.policy.name(),
            p.mean_acc.last().copied().unwrap_or(f64::NAN),
            p.stderr_acc.last().copied().unwrap_or(f64::NAN),
            p.median_cum_select_time,
            p.median_cum_vem_time,
        );
    }
    eprintln!("wrote {} trial files and aggregate.json to {}", result.records.len(), a.out.display());
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let mut reports = Vec::with_capacity(a.powers.len());
    for (k, &p) in a.powers.iter().enumerate() {
        let mut rng = RngStream::derive(a.seed, &[k as u64]);
        reports.push(verify_info_continuity(p, a.trials, &mut rng)?);
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    Ok(reports.iter().all(|r| r.violations == 0))
}

fn generate(name: &str, n: usize, out: &PathBuf, seed: u64) -> Result<()> {
    let kind: SyntheticKind = name.parse()?;
    let ds = generate_synthetic(kind, n, &mut RngStream::new(seed))?;
    write_csv(&ds, out).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Datasets { command: DatasetsCommand::Gen { name, n, out, seed } } => {
            generate(&name, n, &out, seed).map(|_| true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("continuity bound violated");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}


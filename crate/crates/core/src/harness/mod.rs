//! Synchronized multi-policy active-learning trials.
//!
//! Every trial index `t` gets its own split and seed pair, derived from
//! `(master_seed, t)`, and every policy in that trial sees the same ones.
//! Policy-specific randomness comes from `(master_seed, t, policy)`.

mod metrics;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::data::{
    generate_gaussian_classes, generate_synthetic, load_csv, pick_seeds, split_and_normalize, Dataset, Label,
    SeedSet, SplitDataset, SyntheticKind,
};
use crate::error::{ApmError, Result};
use crate::labeled::LabeledSet;
use crate::logreg::{accuracy, fit_map, DEFAULT_LAMBDA};
use crate::numkit::{logistic, RngStream};
use crate::posterior::{variational_em, GaussianPosterior, DEFAULT_VEM_TOL};
use crate::selection::{exploit_metric, select, PolicyKind, PolicySpec, SelectionContext};

pub use metrics::{gram_logdet_window, maximin_distance, mean, median, std_error, SINGULAR_LOGDET};
pub use output::{write_aggregate_json, write_trial_csv, AggregateReport, PolicyAggregate};

// Domain tags for stream derivation.
const DATA_STREAM: u64 = 0xDA7A;
const SPLIT_STREAM: u64 = 1;
const SEED_STREAM: u64 = 2;
const POLICY_STREAM: u64 = 3;
const ORACLE_STREAM: u64 = 4;

/// Nearly separable labeled sets with small `λ` can need thousands of sweeps.
pub const HARNESS_VEM_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone)]
pub enum DatasetSource {
    Csv { path: PathBuf, label_col: String, negative_label: Option<String> },
    Synthetic { kind: SyntheticKind, n: usize },
    /// Two isotropic Gaussian classes in `dim` dimensions.
    Gaussian { dim: usize, n: usize, separation: f64 },
    Preloaded(Dataset),
}

impl DatasetSource {
    /// Materializes the full dataset. Generated data depends only on the master seed.
    pub fn load(&self, master_seed: u64) -> Result<Dataset> {
        let mut rng = RngStream::derive(master_seed, &[DATA_STREAM]);
        match self {
            DatasetSource::Csv { path, label_col, negative_label } => {
                load_csv(path, label_col, negative_label.as_deref())
            }
            DatasetSource::Synthetic { kind, n } => generate_synthetic(*kind, *n, &mut rng),
            DatasetSource::Gaussian { dim, n, separation } => generate_gaussian_classes(*dim, *n, *separation, &mut rng),
            DatasetSource::Preloaded(ds) => Ok(ds.clone()),
        }
    }
}

/// Where labels come from.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum LabelOracle {
    /// The stored pool label.
    #[default]
    Pool,
    /// Draw `Y` from the logistic model with the given hyperplane (in normalized coordinates).
    Logistic { theta: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub policies: Vec<PolicySpec>,
    pub trials: usize,
    pub horizon: usize,
    pub lambda: f64,
    pub master_seed: u64,
    /// Directory for per-trial CSVs and the aggregate JSON; `None` keeps results in memory.
    pub output: Option<PathBuf>,
    pub oracle: LabelOracle,
    /// Worker threads for running trials. Timing comparisons want 1.
    pub jobs: usize,
    /// Sweep cap for each posterior update.
    pub vem_max_iter: usize,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource, policies: Vec<PolicySpec>, trials: usize, horizon: usize) -> Self {
        ExperimentConfig {
            dataset,
            policies,
            trials,
            horizon,
            lambda: DEFAULT_LAMBDA,
            master_seed: 0,
            output: None,
            oracle: LabelOracle::Pool,
            jobs: 1,
            vem_max_iter: HARNESS_VEM_MAX_ITER,
        }
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(ApmError::invalid_arg("no policies given"));
        }
        if self.trials == 0 {
            return Err(ApmError::invalid_arg("trials must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(ApmError::invalid_arg("horizon must be at least 1"));
        }
        if !(self.lambda > 0.0) {
            return Err(ApmError::invalid_arg(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.jobs == 0 {
            return Err(ApmError::invalid_arg("jobs must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Index into the trial's pool.
    pub selected_index: usize,
    pub label: Label,
    pub test_accuracy: f64,
    pub t_select_s: f64,
    pub t_vem_s: f64,
    pub t_retrain_s: f64,
    pub vem_sweeps: usize,
    /// Distance of the selected example to the MAP hyperplane before labeling; `None` while `θ̂ = 0`.
    pub exploit_dist: Option<f64>,
    /// After labeling; `None` once the pool is used up.
    pub maximin: Option<f64>,
    /// Set at the end of each window of `d` selections.
    pub gram_logdet: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub policy: PolicyKind,
    pub seeds: SeedSet,
    /// Rows of the source dataset used as pool and test set.
    pub pool_source: Vec<usize>,
    pub test_source: Vec<usize>,
    pub iterations: Vec<IterationRecord>,
    pub remaining_unlabeled: usize,
    pub final_theta: Array1<f64>,
}

impl TrialRecord {
    pub fn final_accuracy(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |r| r.test_accuracy)
    }

    pub fn accuracy_curve(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.test_accuracy).collect()
    }

    fn cumulative(&self, f: impl Fn(&IterationRecord) -> f64) -> Vec<f64> {
        self.iterations
            .iter()
            .scan(0.0, |acc, r| {
                *acc += f(r);
                Some(*acc)
            })
            .collect()
    }

    pub fn cumulative_select_time(&self) -> Vec<f64> {
        self.cumulative(|r| r.t_select_s)
    }

    pub fn cumulative_vem_time(&self) -> Vec<f64> {
        self.cumulative(|r| r.t_vem_s)
    }

    pub fn cumulative_retrain_time(&self) -> Vec<f64> {
        self.cumulative(|r| r.t_retrain_s)
    }

    /// Same trajectory, ignoring wall-clock measurements.
    pub fn same_outcome(&self, other: &TrialRecord) -> bool {
        let strip = |r: &TrialRecord| {
            r.iterations
                .iter()
                .map(|i| IterationRecord { t_select_s: 0.0, t_vem_s: 0.0, t_retrain_s: 0.0, ..i.clone() })
                .collect::<Vec<_>>()
        };
        self.trial == other.trial
            && self.policy == other.policy
            && self.seeds == other.seeds
            && self.pool_source == other.pool_source
            && self.test_source == other.test_source
            && self.final_theta == other.final_theta
            && strip(self) == strip(other)
    }
}

/// Per-trial knobs that `run_trial` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub horizon: usize,
    pub lambda: f64,
    pub oracle: LabelOracle,
    pub vem_max_iter: usize,
}

impl From<&ExperimentConfig> for TrialConfig {
    fn from(c: &ExperimentConfig) -> Self {
        TrialConfig { horizon: c.horizon, lambda: c.lambda, oracle: c.oracle.clone(), vem_max_iter: c.vem_max_iter }
    }
}

struct Oracle<'a> {
    kind: &'a LabelOracle,
    rng: RngStream,
}

impl Oracle<'_> {
    fn label(&mut self, pool: &Dataset, i: usize) -> Result<Label> {
        match self.kind {
            LabelOracle::Pool => Ok(pool.label(i)),
            LabelOracle::Logistic { theta } => {
                if theta.len() != pool.dim() {
                    return Err(ApmError::DimensionMismatch { expected: pool.dim(), found: theta.len() });
                }
                let m: f64 = theta.iter().zip(pool.row(i)).map(|(a, b)| a * b).sum();
                Ok(if self.rng.uniform() < logistic(m) { Label::Positive } else { Label::Negative })
            }
        }
    }
}

/// One run of the active-learning loop for a single policy.
///
/// `rng` drives the policy's own randomness (Random picks, InfoGain samples).
pub fn run_trial(
    split: &SplitDataset,
    seeds: SeedSet,
    spec: PolicySpec,
    cfg: &TrialConfig,
    trial: usize,
    rng: &mut RngStream,
) -> Result<TrialRecord> {
    let pool = &split.pool;
    let d = pool.dim();
    let seed_idx = seeds.indices();
    if seed_idx.iter().any(|&i| i >= pool.len()) || seed_idx[0] == seed_idx[1] {
        return Err(ApmError::invalid_arg("seed indices must be distinct pool rows"));
    }
    let mut available: Vec<usize> = (0..pool.len()).filter(|i| !seed_idx.contains(i)).collect();
    if available.len() < cfg.horizon {
        return Err(ApmError::PoolExhausted { needed: cfg.horizon, available: available.len() });
    }

    let mut oracle = Oracle { kind: &cfg.oracle, rng: RngStream::derive(rng.seed(), &[ORACLE_STREAM]) };
    let mut labeled = LabeledSet::new(d);
    let mut labeled_idx = Vec::with_capacity(cfg.horizon + 2);
    for &i in &seed_idx {
        labeled.push(pool.row(i), oracle.label(pool, i)?)?;
        labeled_idx.push(i);
    }

    let mut posterior = GaussianPosterior::prior(d, cfg.lambda)?;
    let mut map_model = fit_map(&labeled, cfg.lambda)?;
    let mut window: Vec<usize> = Vec::with_capacity(d);
    let mut iterations = Vec::with_capacity(cfg.horizon);

    for n in 1..=cfg.horizon {
        let ctx = SelectionContext {
            pool,
            available: &available,
            posterior: &posterior,
            map_model: &map_model,
            bound: split.bound,
        };
        let start = Instant::now();
        let chosen = select(&ctx, &spec, rng)?;
        let t_select_s = start.elapsed().as_secs_f64();

        let x = pool.row(chosen);
        let exploit_dist = exploit_metric(x, map_model.theta.view()).ok();
        let y = oracle.label(pool, chosen)?;
        let pos = available.binary_search(&chosen).expect("selected index is available");
        available.remove(pos);
        labeled.push(x, y)?;
        labeled_idx.push(chosen);

        let start = Instant::now();
        posterior = variational_em(&labeled, cfg.lambda, DEFAULT_VEM_TOL, cfg.vem_max_iter)?;
        let t_vem_s = start.elapsed().as_secs_f64();

        let start = Instant::now();
        map_model = fit_map(&labeled, cfg.lambda)?;
        let t_retrain_s = start.elapsed().as_secs_f64();

        let test_accuracy = accuracy(map_model.theta.view(), &split.test)?;
        let maximin = if available.is_empty() { None } else { Some(maximin_distance(&labeled_idx, pool)?) };

        window.push(chosen);
        let gram_logdet = if window.len() == d {
            let rows = Array2::from_shape_fn((d, d), |(r, c)| pool.row(window[r])[c]);
            window.clear();
            Some(gram_logdet_window(rows.view())?)
        } else {
            None
        };

        iterations.push(IterationRecord {
            iteration: n,
            selected_index: chosen,
            label: y,
            test_accuracy,
            t_select_s,
            t_vem_s,
            t_retrain_s,
            vem_sweeps: posterior.sweeps,
            exploit_dist,
            maximin,
            gram_logdet,
        });
    }

    Ok(TrialRecord {
        trial,
        policy: spec.kind,
        seeds,
        pool_source: split.pool_source.clone(),
        test_source: split.test_source.clone(),
        iterations,
        remaining_unlabeled: available.len(),
        final_theta: map_model.theta,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub dataset: String,
    /// Ordered by trial, then by position in the policy list.
    pub records: Vec<TrialRecord>,
    pub aggregate: AggregateReport,
}

impl ExperimentResult {
    pub fn records_for(&self, kind: PolicyKind) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(move |r| r.policy == kind)
    }

    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicyAggregate> {
        self.aggregate.policies.iter().find(|p| p.policy == kind)
    }
}

fn run_trial_all_policies(ds: &Dataset, cfg: &ExperimentConfig, t: usize) -> Result<Vec<TrialRecord>> {
    let tc = TrialConfig::from(cfg);
    let t64 = t as u64;
    let split = split_and_normalize(ds, &mut RngStream::derive(cfg.master_seed, &[t64, SPLIT_STREAM]))?;
    let seeds = pick_seeds(&split, &mut RngStream::derive(cfg.master_seed, &[t64, SEED_STREAM]))?;
    cfg.policies
        .iter()
        .map(|spec| {
            let mut rng = RngStream::derive(cfg.master_seed, &[t64, POLICY_STREAM, spec.kind.stream_id()]);
            run_trial(&split, seeds, *spec, &tc, t, &mut rng)
        })
        .collect()
}

/// Runs every policy on every trial and writes results if an output directory is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let ds = cfg.dataset.load(cfg.master_seed)?;
    let pool_size = ds.len() / 2;
    if cfg.horizon + 2 > pool_size {
        return Err(ApmError::PoolExhausted { needed: cfg.horizon + 2, available: pool_size });
    }

    let per_trial: Vec<Result<Vec<TrialRecord>>> = if cfg.jobs <= 1 {
        (0..cfg.trials).map(|t| run_trial_all_policies(&ds, cfg, t)).collect()
    } else {
        let mut slots: Vec<Option<Result<Vec<TrialRecord>>>> = (0..cfg.trials).map(|_| None).collect();
        let jobs = cfg.jobs.min(cfg.trials);
        std::thread::scope(|scope| {
            let chunks: Vec<_> = slots.chunks_mut(cfg.trials.div_ceil(jobs)).enumerate().collect();
            let chunk_len = cfg.trials.div_ceil(jobs);
            for (c, chunk) in chunks {
                let ds = &ds;
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(run_trial_all_policies(ds, cfg, c * chunk_len + k));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("every trial ran")).collect()
    };

    let mut records = Vec::with_capacity(cfg.trials * cfg.policies.len());
    for r in per_trial {
        records.extend(r?);
    }
    let aggregate = AggregateReport::from_records(ds.name(), cfg, &records);
    let result = ExperimentResult { dataset: ds.name().to_string(), records, aggregate };

    if let Some(dir) = &cfg.output {
        std::fs::create_dir_all(dir)?;
        for r in &result.records {
            write_trial_csv(r, dir.join(format!("{}_trial{:03}.csv", r.policy.name(), r.trial)))?;
        }
        write_aggregate_json(&result.aggregate, dir.join("aggregate.json"))?;
    }
    Ok(result)
}

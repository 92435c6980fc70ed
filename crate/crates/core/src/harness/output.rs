//! Per-trial CSV rows and the cross-trial aggregate.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::metrics::{mean, median, std_error};
use super::{ExperimentConfig, TrialRecord};
use crate::error::Result;
use crate::selection::PolicyKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyAggregate {
    pub policy: PolicyKind,
    pub trials: usize,
    pub mean_acc: Vec<f64>,
    pub stderr_acc: Vec<f64>,
    pub median_cum_select_time: f64,
    pub median_cum_vem_time: f64,
    pub median_cum_retrain_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub dataset: String,
    pub trials: usize,
    pub horizon: usize,
    pub lambda: f64,
    pub master_seed: u64,
    pub policies: Vec<PolicyAggregate>,
}

impl AggregateReport {
    pub fn from_records(dataset: &str, cfg: &ExperimentConfig, records: &[TrialRecord]) -> Self {
        let policies = cfg
            .policies
            .iter()
            .map(|spec| {
                let runs: Vec<&TrialRecord> = records.iter().filter(|r| r.policy == spec.kind).collect();
                let at = |n: usize| runs.iter().map(|r| r.iterations[n].test_accuracy).collect::<Vec<_>>();
                let total = |f: fn(&TrialRecord) -> Vec<f64>| {
                    median(&runs.iter().map(|r| f(r).last().copied().unwrap_or(0.0)).collect::<Vec<_>>())
                };
                PolicyAggregate {
                    policy: spec.kind,
                    trials: runs.len(),
                    mean_acc: (0..cfg.horizon).map(|n| mean(&at(n))).collect(),
                    stderr_acc: (0..cfg.horizon).map(|n| std_error(&at(n))).collect(),
                    median_cum_select_time: total(TrialRecord::cumulative_select_time),
                    median_cum_vem_time: total(TrialRecord::cumulative_vem_time),
                    median_cum_retrain_time: total(TrialRecord::cumulative_retrain_time),
                }
            })
            .collect();
        AggregateReport {
            dataset: dataset.to_string(),
            trials: cfg.trials,
            horizon: cfg.horizon,
            lambda: cfg.lambda,
            master_seed: cfg.master_seed,
            policies,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trial_csv(rec: &TrialRecord, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "iteration",
        "selected_index",
        "test_accuracy",
        "t_select_s",
        "t_vem_s",
        "t_retrain_s",
        "exploit_dist",
        "maximin",
        "gram_logdet",
    ])?;
    for it in &rec.iterations {
        w.write_record([
            it.iteration.to_string(),
            it.selected_index.to_string(),
            it.test_accuracy.to_string(),
            it.t_select_s.to_string(),
            it.t_vem_s.to_string(),
            it.t_retrain_s.to_string(),
            opt(it.exploit_dist),
            opt(it.maximin),
            opt(it.gram_logdet),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON has no infinities, so a singular Gram window never reaches this file.
pub fn write_aggregate_json(report: &AggregateReport, path: impl AsRef<Path>) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, report)?;
    Ok(())
}

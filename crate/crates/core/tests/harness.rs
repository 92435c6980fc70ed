use apm_core::data::SyntheticKind;
use apm_core::error::ApmError;
use apm_core::harness::{run_experiment, DatasetSource, ExperimentConfig, ExperimentResult};
use apm_core::selection::{PolicyKind, PolicySpec};

fn config(policies: &[PolicyKind], trials: usize, horizon: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        DatasetSource::Synthetic { kind: SyntheticKind::Clouds, n: 120 },
        policies.iter().map(|&k| PolicySpec::new(k)).collect(),
        trials,
        horizon,
    );
    cfg.master_seed = 11;
    cfg
}

fn assert_same(a: &ExperimentResult, b: &ExperimentResult) {
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!(x.same_outcome(y), "trial {} {}", x.trial, x.policy);
    }
}

#[test]
fn trials_are_synchronized_across_policies() {
    let res = run_experiment(&config(&[PolicyKind::ApmLr, PolicyKind::Random], 3, 5)).unwrap();
    assert_eq!(res.records.len(), 6);
    for t in 0..3 {
        let same_trial: Vec<_> = res.records.iter().filter(|r| r.trial == t).collect();
        assert_eq!(same_trial.len(), 2);
        assert_eq!(same_trial[0].seeds, same_trial[1].seeds);
        assert_eq!(same_trial[0].pool_source, same_trial[1].pool_source);
        assert_eq!(same_trial[0].test_source, same_trial[1].test_source);
    }
    assert_ne!(res.records[0].pool_source, res.records[2].pool_source);
}

#[test]
fn reruns_are_identical_apart_from_timing() {
    let cfg = config(&PolicyKind::ALL, 2, 6);
    assert_same(&run_experiment(&cfg).unwrap(), &run_experiment(&cfg).unwrap());
}

#[test]
fn policy_order_and_threads_do_not_matter() {
    let a = run_experiment(&config(&[PolicyKind::InfoGain, PolicyKind::Random], 4, 5)).unwrap();
    let mut cfg = config(&[PolicyKind::Random, PolicyKind::InfoGain], 4, 5);
    cfg.jobs = 3;
    let b = run_experiment(&cfg).unwrap();
    for kind in [PolicyKind::InfoGain, PolicyKind::Random] {
        for (x, y) in a.records_for(kind).zip(b.records_for(kind)) {
            assert!(x.same_outcome(y));
        }
    }
}

#[test]
fn records_are_well_formed() {
    let horizon = 7;
    let res = run_experiment(&config(&[PolicyKind::ApmLr, PolicyKind::Bald], 2, horizon)).unwrap();
    for r in &res.records {
        assert_eq!(r.iterations.len(), horizon);
        assert_eq!(r.accuracy_curve().len(), horizon);
        for (n, it) in r.iterations.iter().enumerate() {
            assert_eq!(it.iteration, n + 1);
            assert!((0.0..=1.0).contains(&it.test_accuracy));
            assert!(it.t_select_s >= 0.0 && it.t_vem_s >= 0.0 && it.t_retrain_s >= 0.0);
            // Two-dimensional data: a Gram window closes every second selection.
            assert_eq!(it.gram_logdet.is_some(), (n + 1) % 2 == 0);
            assert!(it.maximin.unwrap() > 0.0);
        }
        let cum = r.cumulative_select_time();
        assert!(cum.windows(2).all(|w| w[1] >= w[0]));
        let picks: std::collections::HashSet<_> = r.iterations.iter().map(|i| i.selected_index).collect();
        assert_eq!(picks.len(), horizon);
        assert!(!picks.contains(&r.seeds.negative) && !picks.contains(&r.seeds.positive));
    }
    for p in &res.aggregate.policies {
        assert_eq!(p.mean_acc.len(), horizon);
        assert_eq!(p.stderr_acc.len(), horizon);
        assert_eq!(p.trials, 2);
    }
}

#[test]
fn long_protocol_gives_full_curves() {
    let mut cfg = ExperimentConfig::new(
        DatasetSource::Synthetic { kind: SyntheticKind::Cross, n: 600 },
        vec![PolicySpec::new(PolicyKind::Uncertainty)],
        150,
        40,
    );
    cfg.jobs = 4;
    let res = run_experiment(&cfg).unwrap();
    let agg = &res.aggregate.policies[0];
    assert_eq!(agg.trials, 150);
    assert_eq!(agg.mean_acc.len(), 40);
}

#[test]
fn writes_trial_csvs_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&[PolicyKind::ApmLr, PolicyKind::Uncertainty], 2, 4);
    cfg.output = Some(dir.path().join("nested/out"));
    run_experiment(&cfg).unwrap();
    let out = dir.path().join("nested/out");

    let csv = std::fs::read_to_string(out.join("APM_LR_trial001.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,selected_index,test_accuracy,t_select_s,t_vem_s,t_retrain_s,exploit_dist,maximin,gram_logdet"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0][8].is_empty() && !rows[1][8].is_empty());
    assert_eq!(rows[3][0], "4");

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("aggregate.json")).unwrap()).unwrap();
    let policies = json["policies"].as_array().unwrap();
    assert_eq!(policies.len(), 2);
    assert_eq!(policies[1]["policy"], "Uncertainty");
    assert_eq!(policies[0]["mean_acc"].as_array().unwrap().len(), 4);
    assert!(policies[0]["median_cum_select_time"].as_f64().unwrap() >= 0.0);
    assert!(policies[0]["median_cum_vem_time"].as_f64().unwrap() > 0.0);
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 5);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let mut cfg = config(&[PolicyKind::Random], 1, 2);
    cfg.output = Some(blocker.join("out"));
    assert!(matches!(run_experiment(&cfg), Err(ApmError::Io(_))));
}

#[test]
fn empty_policy_list_rejected() {
    assert!(run_experiment(&config(&[], 1, 2)).is_err());
}

#[test]
fn csv_dataset_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let mut text = String::from("a,cls,b\n");
    for i in 0..40 {
        let (c, s) = if i % 2 == 0 { ("D", -1.0) } else { ("P", 1.0) };
        text.push_str(&format!("{},{c},{}\n", s + 0.01 * i as f64, 0.5 * (i % 7) as f64));
    }
    std::fs::write(&path, text).unwrap();
    let cfg = ExperimentConfig::new(
        DatasetSource::Csv { path, label_col: "cls".into(), negative_label: None },
        vec![PolicySpec::new(PolicyKind::ApmLr)],
        2,
        5,
    );
    let res = run_experiment(&cfg).unwrap();
    assert_eq!(res.records.len(), 2);
    assert!(res.records.iter().all(|r| r.final_accuracy() > 0.9));
}

//! End-to-end: config → run → record on disk → plot data → replay.

use mada::harness::{emit_plotdata, read_record, replay_fs, run_reddi, write_record, Config, PlotInput, PlotKind, RunSpec};
use mada::problems::reddi_loss;
use mada::Error;
use proptest::prelude::*;

#[test]
fn record_survives_disk_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::parse("problem.kind = logistic\nproblem.dim = 5\nproblem.samples = 200\noptimizer.kind = mada\nrun.steps = 120\nrun.stride = 7").unwrap();
    let spec = RunSpec::from_config(&cfg).unwrap();
    let out = spec.execute().unwrap();
    let steps: Vec<u64> = out.record.rows.iter().map(|r| r.step).collect();
    assert_eq!(steps.first(), Some(&1));
    assert_eq!(steps.last(), Some(&120));
    assert!(steps.windows(2).all(|w| w[0] < w[1]));

    let path = dir.path().join("r.csv");
    write_record(&out.record, &path).unwrap();
    let back = read_record(&path).unwrap();
    assert!(back.rows_identical(&out.record));
    assert_eq!(back.summary, out.record.summary);

    let (fs_spec, fs) = replay_fs(&back).unwrap();
    assert_eq!(fs_spec.config.str("run.stride").unwrap(), "7");
    assert_eq!(fs.record.rows.len(), out.record.rows.len());
    let q = back.rows.last().unwrap().q;
    assert!(fs.record.rows.iter().all(|r| r.q == q));
}

#[test]
fn replay_rejects_base_optimizer_records() {
    let out = RunSpec::from_config(&Config::parse("optimizer.base = sgd\nrun.steps = 5").unwrap()).unwrap().execute().unwrap();
    assert!(matches!(replay_fs(&out.record), Err(Error::Contract(_))));
}

#[test]
fn reddi_regret_matches_direct_sum() {
    let mut cfg = Config::load("reddi_adam").unwrap();
    cfg.set("run.steps", "600").unwrap();
    let spec = RunSpec::from_config(&cfg).unwrap();
    let mut played = Vec::new();
    spec.execute_observed(&mut |p| played.push(p.x[0])).unwrap();
    let r = run_reddi(&spec).unwrap();
    // Oracle: (1/t) Σ_{j ≤ t} f_j(x_{j−1}) − f_j(−1), summed directly.
    let mut acc = 0.0;
    let direct: Vec<f64> = played
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let t = j as u64 + 1;
            acc += reddi_loss(t, x) - reddi_loss(t, -1.0);
            acc / t as f64
        })
        .collect();
    for &(t, v) in &r.regret {
        let d = direct[t as usize - 1];
        assert!((v - d).abs() <= 1e-9 * d.abs().max(1.0), "t={t}: {v} vs {d}");
    }
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("regret.dat");
    emit_plotdata(&PlotInput { regret: Some(&r.regret), ..Default::default() }, PlotKind::Regret, &p).unwrap();
    assert_eq!(std::fs::read_to_string(p).unwrap().lines().count(), r.regret.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hash_changes_with_any_single_key(idx in 0usize..mada::harness::KEYS.len(), salt in 1u32..1000) {
        let (key, default, _) = mada::harness::KEYS[idx];
        let base = Config::default();
        let mut other = base.clone();
        other.set(key, &format!("{default}{salt}")).unwrap();
        if key.starts_with("output.") {
            prop_assert_eq!(base.hash(), other.hash());
        } else {
            prop_assert_ne!(base.hash(), other.hash());
        }
    }

    #[test]
    fn same_config_same_rows(seed in 0u64..50, steps in 2u64..60) {
        let cfg = Config::parse(&format!(
            "problem.kind = quadratic\nproblem.dim = 3\nproblem.noise = 1\noptimizer.kind = mada\nrun.steps = {steps}\nrun.seed = {seed}"
        )).unwrap();
        let a = RunSpec::from_config(&cfg).unwrap().execute().unwrap();
        let b = RunSpec::from_config(&cfg).unwrap().execute().unwrap();
        prop_assert!(a.record.rows_identical(&b.record));
    }
}

use bistatic_isac::estimator::PeriodogramConfig;
use bistatic_isac::harness::{
    run_sweep, write_outputs, ExperimentConfig, RunManifest, SweepResult, OVERHEAD_SPACINGS,
    SWEEP_SCHEMA,
};
use bistatic_isac::pilots::make_periodic;

fn small(np: usize, mp: usize) -> ExperimentConfig {
    ExperimentConfig {
        pattern: make_periodic(70, 50, np, mp).unwrap(),
        snr_grid_db: vec![-10.0, 0.0, 10.0, 20.0, 30.0],
        trials_per_point: 12,
        fft: PeriodogramConfig::square(256),
        ecrb_draws: 500,
        ..ExperimentConfig::default()
    }
}

#[test]
fn bound_columns_fall_tenfold_per_20_db() {
    let r = run_sweep(&small(2, 5), None).unwrap();
    for w in r.rows.windows(3) {
        let (lo, hi) = (w[0], w[2]);
        assert_eq!(hi.snr_db - lo.snr_db, 20.0);
        assert!((lo.sqrt_crb_ran_m / hi.sqrt_crb_ran_m - 10.0).abs() < 1e-12);
        // Same geometry draws at every SNR, so the expectation scales too.
        assert!((lo.ecrb_vel_ms / hi.ecrb_vel_ms - 10.0).abs() < 1e-12);
    }
}

#[test]
fn every_trial_is_valid_without_aliasing() {
    for (np, mp) in OVERHEAD_SPACINGS.into_iter().filter(|&(np, _)| np <= 2) {
        let mut cfg = small(np, mp);
        cfg.snr_grid_db = vec![0.0, 15.0, 30.0];
        for row in run_sweep(&cfg, None).unwrap().rows {
            assert_eq!(row.valid_trial_fraction, 1.0, "({np},{mp}) at {} dB", row.snr_db);
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = small(2, 1);
    let one = run_sweep(&cfg, Some(1)).unwrap().to_csv().unwrap();
    let three = run_sweep(&cfg, Some(3)).unwrap().to_csv().unwrap();
    let global = run_sweep(&cfg, None).unwrap().to_csv().unwrap();
    assert_eq!(one, three);
    assert_eq!(one, global);
    assert!(run_sweep(&cfg, Some(0)).is_err());
}

#[test]
fn seed_changes_the_noise() {
    let a = run_sweep(&small(2, 1), None).unwrap();
    let mut cfg = small(2, 1);
    cfg.seed = 99;
    let b = run_sweep(&cfg, None).unwrap();
    assert_ne!(a.rows[3].rmse_range_m, b.rows[3].rmse_range_m);
    assert_eq!(a.rows[3].sqrt_crb_ran_m, b.rows[3].sqrt_crb_ran_m);
}

#[test]
fn csv_header_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(2, 5);
    cfg.snr_grid_db = vec![10.0];
    cfg.output.csv = Some(dir.path().join("out.csv"));
    cfg.output.manifest = Some(dir.path().join("out.json"));
    let result = run_sweep(&cfg, None).unwrap();
    write_outputs(&cfg, &result).unwrap();

    let text = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "snr_db,rmse_range_m,rmse_vel_ms,sqrt_crb_ran_m,ecrb_vel_ms,valid_trial_fraction"
    );
    let rows: Vec<_> = csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(SweepResult { rows }, result);

    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
    assert_eq!(manifest.schema, SWEEP_SCHEMA);
    assert_eq!(manifest.config, cfg);
}

#[test]
fn config_files_reject_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let mut value = serde_json::to_value(ExperimentConfig::default()).unwrap();
    std::fs::write(&path, value.to_string()).unwrap();
    assert_eq!(ExperimentConfig::load(&path).unwrap(), ExperimentConfig::default());

    value["trails_per_point"] = 5.into();
    std::fs::write(&path, value.to_string()).unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let mut cfg = small(2, 5);
    cfg.trials_per_point = 0;
    assert!(run_sweep(&cfg, None).is_err());
    let mut cfg = small(2, 5);
    cfg.snr_grid_db.clear();
    assert!(run_sweep(&cfg, None).is_err());
    let mut cfg = small(2, 5);
    cfg.fft = PeriodogramConfig::square(1000);
    assert!(run_sweep(&cfg, None).is_err());
}

use rc_symdet::harness::{
    aggregate, emit_report, read_ber_csv, read_learning_curve, run_sweep, run_trial, simulate_subframe, DetectorKind,
    ExperimentConfig, RunManifest, SweepConfig, SweepVariable,
};

fn small_cfg() -> ExperimentConfig {
    ExperimentConfig {
        sweep: SweepConfig { variable: SweepVariable::SnrDb, values: vec![10.0, 20.0] },
        trials: 4,
        master_seed: 11,
        ..ExperimentConfig::desk()
    }
}

#[test]
fn same_trial_twice_gives_identical_outcomes() {
    let cfg = small_cfg();
    assert_eq!(run_trial(&cfg, 1, 3).unwrap(), run_trial(&cfg, 1, 3).unwrap());
}

#[test]
fn sweep_equals_sum_of_individual_trials() {
    let mut cfg = small_cfg();
    cfg.detectors = vec![DetectorKind::TimeRc, DetectorKind::Lmmse];
    let swept = run_sweep(&cfg, Some(2)).unwrap();

    let mut expected = vec![0u64; swept.records.len()];
    for p in 0..cfg.sweep.values.len() {
        for t in 0..cfg.trials as u64 {
            let o = run_trial(&cfg, p, t).unwrap();
            for (d, out) in o.outcomes.iter().enumerate() {
                expected[p * cfg.detectors.len() + d] += out.bit_errors;
            }
        }
    }
    let got: Vec<u64> = swept.records.iter().map(|r| r.bit_errors).collect();
    assert_eq!(got, expected);

    // aggregation does not depend on the order outcomes arrive in
    let mut outcomes: Vec<_> = (0..2).flat_map(|p| (0..4).map(move |t| (p, t))).map(|(p, t)| run_trial(&cfg, p, t).unwrap()).collect();
    outcomes.reverse();
    assert_eq!(aggregate(&cfg, &outcomes), swept.records);
}

#[test]
fn records_follow_the_bit_count_formula() {
    let mut cfg = small_cfg();
    cfg.detectors = vec![DetectorKind::Lmmse, DetectorKind::Sphere];
    let res = run_sweep(&cfg, None).unwrap();
    let s = cfg.subframe;
    let per_trial = (s.n_d * s.n_sc * s.n_t * cfg.modulation.bits_per_symbol()) as u64;
    assert_eq!(res.records.len(), 4);
    for r in &res.records {
        assert_eq!(r.trials, cfg.trials as u64);
        assert_eq!(r.total_bits, r.trials * per_trial);
        assert_eq!(r.ber, r.bit_errors as f64 / r.total_bits as f64);
        assert!((0.0..=1.0).contains(&r.ber));
    }
    assert!(!res.manifest.partial);
}

#[test]
fn report_files_round_trip() {
    let mut cfg = small_cfg();
    cfg.trials = 2;
    cfg.detectors = vec![DetectorKind::TimeRc, DetectorKind::RcnetTf, DetectorKind::Lmmse];
    let res = run_sweep(&cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&res, dir.path(), true).unwrap();
    assert!(written.iter().all(|p| p.exists()));

    let header = std::fs::read_to_string(dir.path().join("ber.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), "detector,sweep_variable,sweep_value,trials,bit_errors,total_bits,ber");
    assert_eq!(read_ber_csv(&dir.path().join("ber.csv")).unwrap(), res.records);

    for id in ["time-rc", "rcnet-tf"] {
        let path = dir.path().join(format!("learning_curve_{id}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "iteration,objective");
        assert_eq!(read_learning_curve(&path).unwrap(), res.learning_curves[id]);
    }
    assert!(!dir.path().join("learning_curve_lmmse.csv").exists());
    assert!(dir.path().join("ber.gp").exists());
    assert!(dir.path().join("ber_lmmse.dat").exists());

    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config, cfg);
    assert_eq!(manifest.trial_seeds.len(), cfg.trials);
    assert_eq!(manifest.overhead_percent, "23.5%");
}

#[test]
fn learning_curve_length_matches_the_delay_grid() {
    let mut cfg = small_cfg();
    cfg.trials = 1;
    cfg.detectors = vec![DetectorKind::TimeRc, DetectorKind::RcnetTime];
    let res = run_sweep(&cfg, None).unwrap();
    // 50 requested points over 0..=16 collapse to 17 distinct delays
    assert_eq!(res.learning_curves["time-rc"].len(), 17);
    assert_eq!(res.learning_curves["rcnet-time"].len(), cfg.rc.depth * cfg.rc.deep_delay_points);
}

#[test]
fn manifest_seeds_replay_a_trial() {
    let cfg = small_cfg();
    let res = run_sweep(&ExperimentConfig { detectors: vec![DetectorKind::TfRc], ..cfg.clone() }, None).unwrap();
    let replay_cfg = ExperimentConfig { master_seed: res.manifest.master_seed, ..res.manifest.config.clone() };
    let first = run_trial(&replay_cfg, 0, 2).unwrap();
    let again = run_trial(&replay_cfg, 0, 2).unwrap();
    assert_eq!(first, again);
}

#[test]
fn disabled_adc_bypasses_the_quantizer() {
    let mut cfg = small_cfg().at_point(20.0);
    cfg.adc.enabled = false;
    cfg.adc.bits = 1;
    let a = simulate_subframe::<f64>(&cfg, 0, 0).unwrap();
    cfg.adc.bits = 5;
    cfg.adc.a_max = Some(0.01);
    let b = simulate_subframe::<f64>(&cfg, 0, 0).unwrap();
    for (x, y) in a.received.iter().zip(&b.received) {
        assert_eq!(x.samples, y.samples);
    }
    cfg.adc.enabled = true;
    let c = simulate_subframe::<f64>(&cfg, 0, 0).unwrap();
    assert_ne!(a.received[0].samples, c.received[0].samples);
}

#[test]
fn sweep_points_share_channel_and_data() {
    let cfg = small_cfg();
    let lo = simulate_subframe::<f64>(&cfg.at_point(10.0), 0, 1).unwrap();
    let hi = simulate_subframe::<f64>(&cfg.at_point(20.0), 1, 1).unwrap();
    assert_eq!(lo.channel, hi.channel);
    assert_eq!(lo.data_bits, hi.data_bits);
    assert!(lo.noise_var > hi.noise_var);
}

#[test]
fn f32_sweeps_run() {
    let mut cfg = small_cfg();
    cfg.trials = 1;
    cfg.precision = rc_symdet::harness::Precision::F32;
    cfg.detectors = vec![DetectorKind::TimeRc, DetectorKind::TfRc, DetectorKind::Sphere];
    let res = run_sweep(&cfg, None).unwrap();
    assert!(!res.manifest.partial);
    // high SNR beats low SNR for every detector
    for d in 0..3 {
        assert!(res.records[3 + d].ber <= res.records[d].ber);
    }
}

#[test]
fn invalid_configs_fail_before_running() {
    let mut cfg = small_cfg();
    cfg.trials = 0;
    assert!(run_sweep(&cfg, None).is_err());
    let mut cfg = small_cfg();
    cfg.sweep.values.clear();
    assert!(run_sweep(&cfg, None).is_err());
    assert!(run_sweep(&small_cfg(), Some(0)).is_err());
}

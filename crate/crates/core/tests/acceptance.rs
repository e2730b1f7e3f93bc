//! Acceptance suite: one check per criterion, each printing a PASS/FAIL line.
//!
//! Runs without the libtest harness so the lines always reach the terminal.
//! The process exits non-zero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rc_symdet::baselines::{lmmse_equalize, ml_metric, sphere_decode, FrequencyChannelEstimate, RadiusPolicy};
use rc_symdet::detectors::tf_rc::tf_batch_states;
use rc_symdet::detectors::time_rc::{batch_states, delayed_design};
use rc_symdet::detectors::{
    detect_tf_rc, detect_time_rc, normal_equation_residual, rcnet_detect, train_rcnet_deep_tf, train_rcnet_deep_time,
    train_tf_rc, train_time_rc, uniform_delay_grid, RcLayer, TrainingSet,
};
use rc_symdet::harness::{
    ebn0_to_snr_db, emit_report, run_sweep, simulate_subframe, ChannelModel, DetectorKind, ExperimentConfig, SweepConfig,
    SweepVariable,
};
use rc_symdet::impairments::PaConfig;
use rc_symdet::numerics::{ifft_columns, CMatrix};
use rc_symdet::ofdm::{FrequencyGrid, ModulationScheme};
use rc_symdet::reservoir::{init_reservoir, ReservoirSpec};

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn desk_at_snr(snr_db: f64) -> ExperimentConfig {
    ExperimentConfig { snr_db: Some(snr_db), ..ExperimentConfig::desk() }
}

fn desk_training_set(cfg: &ExperimentConfig, trial: u64) -> TrainingSet<f64> {
    let sf = simulate_subframe::<f64>(cfg, 0, trial).expect("subframe");
    sf.training_set(cfg).expect("training set")
}

fn random_cmatrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> CMatrix<f64> {
    let g = |rng: &mut ChaCha8Rng| {
        let n: f64 = rng.sample(rand_distr::StandardNormal);
        n * std
    };
    CMatrix::from_fn(rows, cols, |_, _| Complex::new(g(rng), g(rng)))
}

fn als_monotonicity() -> Result<String, String> {
    let cfg = desk_at_snr(15.0);
    let grid = uniform_delay_grid(cfg.rc.tf_delay_points, cfg.rc.max_delay);
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..100 {
        let train = desk_training_set(&cfg, trial);
        // an infinite negative tolerance disables early stopping
        let (_, diag) = train_tf_rc(&train, &cfg.rc.reservoir, &grid, 20, f64::NEG_INFINITY, 1000 + trial, &cfg.rc.train)
            .map_err(|e| e.to_string())?;
        if diag.objective_trace.len() != 20 {
            return Err(format!("set {trial}: {} ALS iterations ran", diag.objective_trace.len()));
        }
        for w in diag.sub_steps.windows(2) {
            worst = worst.max((w[1] - w[0]) / w[0].max(f64::MIN_POSITIVE));
        }
    }
    ensure(worst <= 1e-9, format!("100 sets x 20 iterations, largest relative increase {worst:.3e}"))
}

fn brute_force_min(h: &CMatrix<f64>, y: &DVector<Complex<f64>>, table: &[Complex<f64>], n_t: usize) -> f64 {
    let m = table.len();
    let mut best = f64::INFINITY;
    let mut z = vec![table[0]; n_t];
    for code in 0..m.pow(n_t as u32) {
        let mut c = code;
        for zj in z.iter_mut() {
            *zj = table[c % m];
            c /= m;
        }
        best = best.min(ml_metric(h, y, &z));
    }
    best
}

fn sphere_exactness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for i in 0..1000 {
        let n_t = 2 + i % 2;
        let scheme = if (i / 2) % 2 == 0 { ModulationScheme::Qpsk } else { ModulationScheme::Qam16 };
        let table = scheme.constellation::<f64>();
        let h = random_cmatrix(&mut rng, n_t, n_t, std::f64::consts::FRAC_1_SQRT_2);
        let x: Vec<Complex<f64>> = (0..n_t).map(|_| table[rng.random_range(0..table.len())]).collect();
        let noise_std = rng.random_range(0.01..1.0);
        let noise = random_cmatrix(&mut rng, n_t, 1, noise_std);
        let y = DVector::from_fn(n_t, |r, _| (0..n_t).map(|j| h[(r, j)] * x[j]).sum::<Complex<f64>>() + noise[(r, 0)]);
        let d = sphere_decode(&h, &y, &table, RadiusPolicy::Unbounded).map_err(|e| e.to_string())?;
        if d.metric != brute_force_min(&h, &y, &table, n_t) {
            mismatches += 1;
        }
    }
    ensure(mismatches == 0, format!("1000 instances, {mismatches} metric mismatches"))
}

fn lmmse_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let h = random_cmatrix(&mut rng, 4, 4, std::f64::consts::FRAC_1_SQRT_2);
        let y = random_cmatrix(&mut rng, 4, 1, 1.0);
        let sigma2: f64 = rng.random_range(1e-3..1.0);
        let est = FrequencyChannelEstimate { h: vec![h.clone()], noise_var: sigma2 };
        let rx = FrequencyGrid::new(y.transpose());
        let z = lmmse_equalize(&est, &rx).map_err(|e| e.to_string())?.symbols.transpose();

        // regularized least squares: [H; σI] z ≈ [y; 0], solved by SVD
        let mut a = CMatrix::zeros(8, 4);
        a.rows_mut(0, 4).copy_from(&h);
        for k in 0..4 {
            a[(4 + k, k)] = Complex::new(sigma2.sqrt(), 0.0);
        }
        let mut b = CMatrix::zeros(8, 1);
        b.rows_mut(0, 4).copy_from(&y);
        let oracle = a.svd(true, true).solve(&b, 0.0).map_err(|e| e.to_string())?;
        worst = worst.max((&z - &oracle).norm() / oracle.norm());
    }
    ensure(worst < 1e-10, format!("1000 4x4 instances, largest relative error {worst:.3e}"))
}

fn readout_optimality() -> Result<String, String> {
    let cfg = desk_at_snr(15.0);
    let rc = &cfg.rc;
    let spec = &rc.reservoir;
    let n_sc = cfg.subframe.n_sc;
    let mut worst: f64 = 0.0;
    let mut fits = 0;
    for trial in 0..10 {
        let train = desk_training_set(&cfg, trial);
        let seed = 500 + trial;

        let grid = uniform_delay_grid(rc.shallow_delay_points, rc.max_delay);
        let (m, _) = train_time_rc(&train, spec, rc.max_delay, &grid, seed, &rc.train).map_err(|e| e.to_string())?;
        let states = batch_states(&m.weights, &train, m.readout.input_gain, *grid.last().unwrap(), seed)
            .map_err(|e| e.to_string())?;
        let (s, t) = delayed_design(&states, &train, m.readout.p_star, spec.washout);
        worst = worst.max(normal_equation_residual(&s, &m.readout.w_tout, &t));
        fits += 1;

        // every layer of a deep time stack, on the inputs that layer saw
        let deep_grid = uniform_delay_grid(rc.deep_delay_points, rc.max_delay);
        let (deep, _) = train_rcnet_deep_time(&train, 3, std::slice::from_ref(spec), rc.max_delay, &deep_grid, seed, &rc.train)
            .map_err(|e| e.to_string())?;
        let mut current = train.clone();
        for (l, layer) in deep.layers.iter().enumerate() {
            let RcLayer::Time(m) = layer else { return Err("deep time stack holds a TF layer".into()) };
            let states = batch_states(
                &m.weights,
                &current,
                m.readout.input_gain,
                *deep_grid.last().unwrap(),
                rc_symdet::detectors::layer_seed(seed, l),
            )
            .map_err(|e| e.to_string())?;
            let (s, t) = delayed_design(&states, &current, m.readout.p_star, spec.washout);
            worst = worst.max(normal_equation_residual(&s, &m.readout.w_tout, &t));
            fits += 1;
            let next = current.inputs.iter().map(|x| m.forward(x)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
            current = current.with_inputs(next).map_err(|e| e.to_string())?;
        }

        // ALS time-layer steps: the readout of a k-iteration fit is optimal for
        // the phase weights left by the (k-1)-iteration fit
        let (probe, _) = train_tf_rc(&train, spec, &uniform_delay_grid(rc.tf_delay_points, rc.max_delay), 1, 0.0, seed, &rc.train)
            .map_err(|e| e.to_string())?;
        let p = probe.readout.delay;
        let mut prev_w = CMatrix::from_element(n_sc, cfg.subframe.n_t, Complex::new(1.0, 0.0));
        for k in 1..=rc.als_iters {
            let (m, _) = train_tf_rc(&train, spec, &[p], k, f64::NEG_INFINITY, seed, &rc.train).map_err(|e| e.to_string())?;
            let states = batch_states(&m.weights, &train, m.readout.input_gain, p, seed).map_err(|e| e.to_string())?;
            let per_batch = tf_batch_states(&states, &train, p);
            let conj_w = prev_w.map(|w| w.conj());
            let targets: Vec<CMatrix<f64>> =
                train.freq_targets.iter().map(|z| ifft_columns(&z.component_mul(&conj_w))).collect();
            worst = worst.max(normal_equation_residual(&stack(&per_batch), &m.readout.w_tout, &stack(&targets)));
            fits += 1;
            prev_w = m.readout.w_fout.clone();
        }
    }
    ensure(worst < 1e-6, format!("{fits} readouts, largest relative normal-equation residual {worst:.3e}"))
}

fn stack(blocks: &[CMatrix<f64>]) -> CMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(rows, blocks[0].ncols());
    let mut r = 0;
    for b in blocks {
        out.rows_mut(r, b.nrows()).copy_from(b);
        r += b.nrows();
    }
    out
}

fn echo_state_washout() -> Result<String, String> {
    let spec = ReservoirSpec { spectral_radius: 0.9, state_noise_std: 0.0, ..ReservoirSpec::default() };
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let w = init_reservoir::<f64>(&spec, 2, seed).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let input = random_cmatrix(&mut rng, 200, 2, std::f64::consts::FRAC_1_SQRT_2);
        let init = |rng: &mut ChaCha8Rng| -> Vec<Complex<f64>> {
            (0..spec.n_neurons).map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        };
        let (a, b) = (init(&mut rng), init(&mut rng));
        let sa = w.run_from(Some(&a), &input, None::<&mut ChaCha8Rng>).map_err(|e| e.to_string())?;
        let sb = w.run_from(Some(&b), &input, None::<&mut ChaCha8Rng>).map_err(|e| e.to_string())?;
        worst = worst.max((sa.row(199) - sb.row(199)).norm());
    }
    ensure(worst < 1e-6, format!("20 seeds, largest state difference after 200 steps {worst:.3e}"))
}

fn unit_modulus() -> Result<String, String> {
    let cfg = desk_at_snr(15.0);
    let rc = &cfg.rc;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut check = |w: &CMatrix<f64>| {
        worst = w.iter().fold(worst, |acc, z| acc.max((z.norm() - 1.0).abs()));
        count += 1;
    };
    for trial in 0..20 {
        let train = desk_training_set(&cfg, trial);
        let grid = uniform_delay_grid(rc.tf_delay_points, rc.max_delay);
        let (m, _) = train_tf_rc(&train, &rc.reservoir, &grid, rc.als_iters, rc.als_tol, trial, &rc.train)
            .map_err(|e| e.to_string())?;
        check(&m.readout.w_fout);
        let deep_grid = uniform_delay_grid(rc.deep_delay_points, rc.max_delay);
        let (deep, _) = train_rcnet_deep_tf(&train, 3, &rc.layer_specs(), &deep_grid, rc.als_iters, rc.als_tol, trial, &rc.train)
            .map_err(|e| e.to_string())?;
        for layer in &deep.layers {
            if let RcLayer::Tf(m) = layer {
                check(&m.readout.w_fout);
            }
        }
    }
    ensure(worst < 1e-12, format!("{count} frequency layers, largest | |w| - 1 | = {worst:.3e}"))
}

fn depth_degeneracy() -> Result<String, String> {
    let cfg = desk_at_snr(15.0);
    let rc = &cfg.rc;
    let sf = &cfg.subframe;
    let mut frames_checked = 0;
    for trial in 0..5 {
        let sub = simulate_subframe::<f64>(&cfg, 0, trial).map_err(|e| e.to_string())?;
        let train = sub.training_set(&cfg).map_err(|e| e.to_string())?;
        let grid = uniform_delay_grid(rc.deep_delay_points, rc.max_delay);
        let seed = 77 + trial;

        let (shallow_t, _) = train_time_rc(&train, &rc.reservoir, rc.max_delay, &grid, seed, &rc.train).map_err(|e| e.to_string())?;
        let (deep_t, _) = train_rcnet_deep_time(&train, 1, std::slice::from_ref(&rc.reservoir), rc.max_delay, &grid, seed, &rc.train)
            .map_err(|e| e.to_string())?;
        let (shallow_f, _) =
            train_tf_rc(&train, &rc.reservoir, &grid, rc.als_iters, rc.als_tol, seed, &rc.train).map_err(|e| e.to_string())?;
        let (deep_f, _) = train_rcnet_deep_tf(&train, 1, std::slice::from_ref(&rc.reservoir), &grid, rc.als_iters, rc.als_tol, seed, &rc.train)
            .map_err(|e| e.to_string())?;

        for f in sub.data_frames(&cfg) {
            let a = detect_time_rc(&shallow_t, f, sf, cfg.modulation).map_err(|e| e.to_string())?;
            let b = rcnet_detect(&deep_t, f, sf, cfg.modulation).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("trial {trial}: deep time RC with one layer differs from time RC"));
            }
            let a = detect_tf_rc(&shallow_f, f, sf, cfg.modulation).map_err(|e| e.to_string())?;
            let b = rcnet_detect(&deep_f, f, sf, cfg.modulation).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("trial {trial}: deep TF RC with one layer differs from TF RC"));
            }
            frames_checked += 1;
        }
    }
    Ok(format!("{frames_checked} data frames identical for both variants"))
}

fn deep_objective_trend() -> Result<String, String> {
    // the learning-curve experiments are set at Eb/N0 = 15 dB
    let cfg = desk_at_snr(ebn0_to_snr_db(15.0, ExperimentConfig::desk().modulation));
    let rc = &cfg.rc;
    let spec = &rc.reservoir;
    let fine = uniform_delay_grid(50, rc.max_delay);
    let coarse = uniform_delay_grid(5, rc.max_delay);
    let (mut time_wins, mut tf_wins) = (0, 0);
    for seed in 0..20u64 {
        let train = desk_training_set(&cfg, 100 + seed);
        let (_, shallow) = train_time_rc(&train, spec, rc.max_delay, &fine, seed, &rc.train).map_err(|e| e.to_string())?;
        let (_, deep) = train_rcnet_deep_time(&train, 10, std::slice::from_ref(spec), rc.max_delay, &coarse, seed, &rc.train)
            .map_err(|e| e.to_string())?;
        if deep.final_objective() <= shallow.final_objective() {
            time_wins += 1;
        }
        let (_, shallow) = train_tf_rc(&train, spec, &fine, rc.als_iters, rc.als_tol, seed, &rc.train).map_err(|e| e.to_string())?;
        let (_, deep) = train_rcnet_deep_tf(&train, 10, std::slice::from_ref(spec), &coarse, rc.als_iters, rc.als_tol, seed, &rc.train)
            .map_err(|e| e.to_string())?;
        if deep.final_objective() <= shallow.final_objective() {
            tf_wins += 1;
        }
    }
    ensure(
        time_wins >= 18 && tf_wins >= 18,
        format!("deep objective <= shallow in {time_wins}/20 (time) and {tf_wins}/20 (time-frequency) seeds"),
    )
}

fn ber_of(records: &[rc_symdet::harness::BerRecord], kind: DetectorKind) -> f64 {
    records.iter().find(|r| r.detector == kind.id()).map(|r| r.ber).unwrap_or(f64::NAN)
}

fn one_bit_adc_trend() -> Result<String, String> {
    let mut cfg = ExperimentConfig::desk();
    cfg.modulation = ModulationScheme::Qpsk;
    cfg.adc.enabled = true;
    cfg.adc.bits = 1;
    cfg.sweep = SweepConfig { variable: SweepVariable::SnrDb, values: vec![15.0] };
    cfg.detectors = vec![DetectorKind::TfRc, DetectorKind::Sphere];
    let res = run_sweep(&cfg, None).map_err(|e| e.to_string())?;
    let (tf, sd) = (ber_of(&res.records, DetectorKind::TfRc), ber_of(&res.records, DetectorKind::Sphere));
    ensure(sd >= 0.3 && tf < sd, format!("50 trials: sphere decoder BER {sd:.4}, time-frequency RC BER {tf:.4}"))
}

fn pa_nonlinear_trend() -> Result<String, String> {
    let mut cfg = ExperimentConfig::desk();
    cfg.pa = Some(PaConfig { rho: 3.0, x_sat: 1.0, input_backoff_db: 3.0 });
    cfg.sweep = SweepConfig { variable: SweepVariable::SnrDb, values: vec![15.0] };
    cfg.detectors = vec![DetectorKind::RcnetTf, DetectorKind::Lmmse];
    let res = run_sweep(&cfg, None).map_err(|e| e.to_string())?;
    let (rc, lmmse) = (ber_of(&res.records, DetectorKind::RcnetTf), ber_of(&res.records, DetectorKind::Lmmse));
    ensure(rc < lmmse, format!("50 trials at 15 dB: deep TF RC BER {rc:.4}, LMMSE BER {lmmse:.4}"))
}

fn noiseless_identity() -> Result<String, String> {
    let mut cfg = ExperimentConfig::desk();
    cfg.channel = ChannelModel::Identity;
    cfg.snr_db = None;
    cfg.sweep = SweepConfig { variable: SweepVariable::Depth, values: vec![cfg.rc.depth as f64] };
    cfg.trials = 10;
    let res = run_sweep(&cfg, None).map_err(|e| e.to_string())?;
    let errors: Vec<String> = res.records.iter().map(|r| format!("{}={}", r.detector, r.bit_errors)).collect();
    let all_zero = res.records.len() == 6 && res.records.iter().all(|r| r.bit_errors == 0 && r.total_bits > 0);
    ensure(all_zero, format!("bit errors over 10 trials: {}", errors.join(" ")))
}

fn worker_determinism() -> Result<String, String> {
    let mut cfg = ExperimentConfig::desk();
    cfg.sweep = SweepConfig { variable: SweepVariable::SnrDb, values: vec![5.0, 20.0] };
    cfg.trials = 4;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for workers in [1, 2, 4] {
        let res = run_sweep(&cfg, Some(workers)).map_err(|e| e.to_string())?;
        let out = dir.path().join(format!("w{workers}"));
        emit_report(&res, &out, false).map_err(|e| e.to_string())?;
        outputs.push(std::fs::read(out.join("ber.csv")).map_err(|e| e.to_string())?);
    }
    ensure(
        outputs.windows(2).all(|w| w[0] == w[1]),
        format!("ber.csv from 1, 2 and 4 workers: {} bytes each, identical = {}", outputs[0].len(), outputs.windows(2).all(|w| w[0] == w[1])),
    )
}

fn overhead() -> Result<String, String> {
    let eta = ExperimentConfig::desk().overhead();
    let shown = format!("{:.1}%", 100.0 * eta);
    ensure(shown == "23.5%", format!("q / (q + n_d) = {eta:.6} ({shown})"))
}

fn main() {
    let criteria: [(&str, Check); 13] = [
        ("ALS monotonicity", als_monotonicity),
        ("sphere decoder exactness", sphere_exactness),
        ("LMMSE equalizer oracle", lmmse_oracle),
        ("readout optimality", readout_optimality),
        ("echo-state washout", echo_state_washout),
        ("unit-modulus frequency weights", unit_modulus),
        ("depth-1 degeneracy", depth_degeneracy),
        ("deep vs shallow training objective", deep_objective_trend),
        ("1-bit ADC trend", one_bit_adc_trend),
        ("PA nonlinear-region trend", pa_nonlinear_trend),
        ("noiseless identity channel", noiseless_identity),
        ("determinism across worker counts", worker_determinism),
        ("reference overhead", overhead),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

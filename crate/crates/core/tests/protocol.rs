use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbcompare::analytic::{build_m, decay_rate, perturb_series, spectral_report};
use rbcompare::channels::{amplitude_damping, noisy_gateset, rotation_channel, NoiseModel, RotationParams, ScaledRotation};
use rbcompare::clifford::CliffordGroup;
use rbcompare::montecarlo::{
    enumerated_means, predicted_survival, run_rb, sample_sequence, RbConfig, RbMode, Shots,
};
use rbcompare::random::random_axis;

fn group() -> CliffordGroup<f64> {
    CliffordGroup::generate().unwrap()
}

#[test]
fn sequence_slots_are_uniform() {
    let g = group();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 24 * 400;
    let mut counts = vec![[0usize; 24]; 4];
    for _ in 0..n {
        let seq = sample_sequence(&g, 3, &mut rng);
        for (slot, &k) in seq.iter().enumerate() {
            counts[slot][k] += 1;
        }
    }
    let expected = n as f64 / 24.0;
    for (slot, c) in counts.iter().enumerate() {
        let chi2: f64 = c.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        // 23 degrees of freedom, 99.9th percentile
        assert!(chi2 < 49.73, "slot {slot}: chi2 {chi2}");
    }
}

#[test]
fn enumerated_means_match_the_m_operator() {
    let g = group();
    let right = amplitude_damping(0.08)
        .unwrap()
        .compose(&rotation_channel(&RotationParams::new([1.0, 2.0, 0.5], 0.2).unwrap()).unwrap())
        .unwrap();
    let noisy: Vec<_> = g.gates().iter().map(|x| x.compose(&right).unwrap()).collect();
    let m = build_m(g.gates(), &noisy).unwrap();
    for psi in [[0.0, 0.0, 1.0], [0.6, 0.0, 0.8]] {
        let means = enumerated_means(&g, &noisy, &psi, 3);
        for (i, mean) in means.iter().enumerate() {
            let want = predicted_survival(&m, &psi, i + 1);
            assert!((mean - want).abs() < 1e-12, "m = {}: {mean} vs {want}", i + 1);
        }
    }
}

#[test]
fn fitted_p_decreases_with_noise_strength() {
    let g = group();
    let mut last = 1.0;
    for i in 1..=10 {
        let lam = 0.005 * i as f64;
        let noisy = noisy_gateset(&g, &NoiseModel::pauli_lr([0.0, 0.0, lam / 2.0], [0.0, 0.0, lam])).unwrap();
        let cfg = RbConfig {
            sequences_per_length: Some(40),
            seed: 100 + i,
            ..Default::default()
        };
        let run = run_rb(&g, &noisy, &cfg).unwrap();
        assert!(!run.fit_diverged);
        assert!(run.fit.p < last, "lambda {lam}: {} after {last}", run.fit.p);
        last = run.fit.p;
    }
}

#[test]
fn sampled_shots_agree_with_exact_run() {
    let g = group();
    let noisy = noisy_gateset(&g, &NoiseModel::pauli_lr([0.0, 0.0, 0.01], [0.0, 0.0, 0.02])).unwrap();
    let base = RbConfig {
        lengths: Some(vec![1, 4, 16, 64]),
        sequences_per_length: Some(200),
        seed: 5,
        mode: RbMode::Theory,
        ..Default::default()
    };
    let exact = run_rb(&g, &noisy, &base).unwrap();
    let shots = run_rb(
        &g,
        &noisy,
        &RbConfig {
            shots: Shots::Count(1000),
            ..base.clone()
        },
    )
    .unwrap();
    let m = build_m(g.gates(), &noisy).unwrap();
    for (e, s) in exact.per_length.iter().zip(&shots.per_length) {
        let want = predicted_survival(&m, &base.psi0, e.m);
        if e.enumerated {
            assert!((e.mean - want).abs() < 1e-12);
        }
        let sigma = s.stderr.max(1e-4);
        assert!((s.mean - want).abs() < 4.0 * sigma, "m {}: {} vs {want} +- {sigma}", e.m, s.mean);
    }
}

#[test]
fn proctor_rb_number_follows_fourth_order_law() {
    let g = group();
    let theta: f64 = 0.1;
    let noisy = noisy_gateset(&g, &NoiseModel::proctor(theta)).unwrap();
    let m = build_m(g.gates(), &noisy).unwrap();
    let r = spectral_report(&m).unwrap().r;
    let law = 0.5 * 233.0 / 864.0 * theta.powi(4);
    assert!((r / law - 1.0).abs() < 0.2, "r {r} law {law}");
}

fn spectral_minus_series(g: &CliffordGroup<f64>, model: &NoiseModel<f64>, theta: f64) -> (usize, f64) {
    let series = perturb_series(g, model, 4).unwrap();
    let model = model.with_theta(theta).unwrap();
    let noisy = noisy_gateset(g, &model).unwrap();
    let p = decay_rate(&build_m(g.gates(), &noisy).unwrap()).unwrap().p;
    (series.valid_to, p - series.evaluate(theta))
}

/// Past the last valid order the truncation error must shrink at least like
/// `theta^(valid_to + 1)`.
#[test]
fn series_residual_scaling() {
    let g = group();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let per_gate = NoiseModel::PerGateUnitary {
        theta: 0.0,
        gates: (0..24)
            .map(|_| ScaledRotation {
                axis: random_axis(&mut rng),
                scale: rng.random_range(0.5..1.5),
            })
            .collect(),
    };
    // angles small enough for the next order to dominate, large enough to
    // stay clear of roundoff
    for (model, want_valid, a) in [(per_gate, 2, 0.008), (NoiseModel::proctor(0.0), 4, 0.1)] {
        let b = a / 2.0;
        let (valid, ra) = spectral_minus_series(&g, &model, a);
        let (_, rb) = spectral_minus_series(&g, &model, b);
        assert_eq!(valid, want_valid);
        let ratio = ra.abs() / rb.abs().max(1e-300);
        let order = 2f64.powi(valid as i32 + 1);
        assert!(ratio > 0.7 * order, "valid_to {valid}: {ra:e} / {rb:e}");
    }
}

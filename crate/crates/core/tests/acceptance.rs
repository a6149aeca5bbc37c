//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbcompare::analytic::{
    alpha_qubit_check, build_m, decay_rate, infidelity_bound, lgr_geometry, m_ideal, nonunital_spectrum,
    perturb_series, q_from_m, same_p_different_q, taylor_coefficients,
};
use rbcompare::channels::{
    amplitude_damping, effective_right_unitary_angle, noisy_gateset, rotation_channel,
    NoiseModel, RotationParams, ScaledRotation,
};
use rbcompare::clifford::CliffordGroup;
use rbcompare::metrics::{gateset_report, rb_number, twirl_analytic};
use rbcompare::montecarlo::{
    enumerated_means, predicted_survival, run_rb, validate_against_spectrum, RbConfig, RbMode,
};
use rbcompare::random::{haar_unitary_channel, random_axis, random_cptp, random_weak_unital};
use rbcompare::superop::{ket_one_unital, Superop};

type Outcome = Result<String, String>;

fn group() -> CliffordGroup<f64> {
    CliffordGroup::generate().expect("Clifford closure")
}

fn lr_gates(g: &CliffordGroup<f64>, l: &Superop<f64>, r: &Superop<f64>) -> Vec<Superop<f64>> {
    g.gates()
        .iter()
        .map(|x| l.compose(x).unwrap().compose(r).unwrap())
        .collect()
}

fn rot(axis: [f64; 3], angle: f64) -> Superop<f64> {
    rotation_channel(&RotationParams::new(axis, angle).unwrap()).unwrap()
}

fn pq(g: &CliffordGroup<f64>, noisy: &[Superop<f64>]) -> (f64, f64) {
    let m = build_m(g.gates(), noisy).unwrap();
    (decay_rate(&m).unwrap().p, q_from_m(&m))
}

fn within_time(t: Instant, limit: Duration, detail: String) -> Outcome {
    let el = t.elapsed();
    if el < limit {
        Ok(format!("{detail}; {:.2?}", el))
    } else {
        Err(format!("{detail}; took {:.2?}, limit {:?}", el, limit))
    }
}

fn ideal_m() -> Outcome {
    let t = Instant::now();
    let g = group();
    let m = build_m(g.gates(), g.gates()).map_err(|e| e.to_string())?;
    let err = (&m.full - m_ideal::<f64>(2)).amax();
    if err >= 1e-12 {
        return Err(format!("max entry error {err:.2e}"));
    }
    within_time(t, Duration::from_secs(1), format!("max entry error {err:.2e}"))
}

fn two_design() -> Outcome {
    let t = Instant::now();
    let g = group();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let e = random_cptp(&mut rng, 1 + i % 4);
        let diff = (g.twirl(&e).matrix() - twirl_analytic(&e).matrix()).amax();
        worst = worst.max(diff);
    }
    if worst >= 1e-12 {
        return Err(format!("worst deviation {worst:.2e}"));
    }
    within_time(t, Duration::from_secs(5), format!("worst deviation {worst:.2e} over 100 channels"))
}

fn pauli_relation() -> Outcome {
    let g = group();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let relation = |l: [f64; 3], s: [f64; 3]| {
        let noisy = noisy_gateset(&g, &NoiseModel::pauli_lr(l, s)).unwrap();
        let (p, q) = pq(&g, &noisy);
        let sl: f64 = l.iter().sum();
        let ss: f64 = s.iter().sum();
        let dot: f64 = l.iter().zip(&s).map(|(a, b)| a * b).sum();
        (p, q, (q - p) - 4.0 / 9.0 * (sl * ss - 3.0 * dot))
    };
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut draw = || -> [f64; 3] {
            let total = 0.2 * rng.random::<f64>();
            let w: [f64; 3] = std::array::from_fn(|_| rng.random::<f64>());
            let n: f64 = w.iter().sum();
            w.map(|x| total * x / n)
        };
        let (l, s) = (draw(), draw());
        worst = worst.max(relation(l, s).2.abs());
    }
    let (lam, mu) = (0.03, 0.05);
    let (p, q, _) = relation([lam; 3], [mu; 3]);
    let dep = (q - p).abs();
    let (p, q, _) = relation([0.0, 0.0, lam], [0.0, 0.0, mu]);
    let deph = (q - (p - 8.0 / 9.0 * lam * mu)).abs();
    let (p, q, _) = relation([0.0, 0.0, lam], [mu / 2.0, mu / 2.0, 0.0]);
    let cross = (q - (p + 4.0 / 9.0 * lam * mu)).abs();
    let detail = format!(
        "random worst {worst:.2e}; depolarizing {dep:.1e}, dephasing {deph:.1e}, cross-dephasing {cross:.1e}"
    );
    if worst < 1e-12 && dep < 1e-12 && deph < 1e-12 && cross < 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn conjugate_unitary() -> Outcome {
    let g = group();
    let u = rot([0.0, 0.0, 1.0], 0.3);
    let noisy = lr_gates(&g, &u, &u.adjoint());
    let (p, q) = pq(&g, &noisy);
    // Clifford averaging of G^T U G leaves (Tr U_u / D) on the unital block, so
    // q = (Tr U_u / D) (Tr U_u^T / D) for L = U, R = U^T.
    let single = (1.0 + 2.0 * 0.3f64.cos()) / 3.0;
    let q_want = single * single;
    let cfg = RbConfig {
        sequences_per_length: Some(50),
        seed: 4,
        ..Default::default()
    };
    let run = run_rb(&g, &noisy, &cfg).map_err(|e| e.to_string())?;
    let detail = format!(
        "spectral p - 1 = {:.1e}, q = {q:.6} (want {q_want:.6}), fitted p = {:.6} +- {:.1e}",
        p - 1.0,
        run.fit.p,
        run.fit.sigma_p()
    );
    let ok = (p - 1.0).abs() < 1e-12
        && (q - q_want).abs() < 1e-12
        && q < 1.0
        && (run.fit.p - 1.0).abs() <= 1e-3
        && run.fit.sigma_p() <= 1e-3;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn alpha_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let e = random_cptp(&mut rng, 1 + i % 4);
        worst = worst.max(alpha_qubit_check(&e).map_err(|e| e.to_string())?);
    }
    let detail = format!("largest singular value over 1000 channels {worst:.12}");
    if worst <= 1.0 + 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn nonunital() -> Outcome {
    let g = group();
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, right) in [
        ("damping", amplitude_damping(0.05).unwrap()),
        (
            "damping after rotation",
            amplitude_damping(0.05).unwrap().compose(&rot([1.0, 0.0, 0.0], 0.1)).unwrap(),
        ),
    ] {
        let noisy: Vec<_> = g.gates().iter().map(|x| x.compose(&right).unwrap()).collect();
        let m = build_m(g.gates(), &noisy).unwrap();
        let ns = nonunital_spectrum(&m).map_err(|e| e.to_string())?;
        ok &= ns.has_unit_eigenvalue && ns.near_zero_count >= 3 && ns.bauer_fike_ok;
        lines.push(format!(
            "{name}: unit eigenvalue {}, {} near-zero, max distance {:.4} <= ||K|| {:.4}",
            ns.has_unit_eigenvalue, ns.near_zero_count, ns.max_distance_to_ideal, ns.k_norm
        ));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn mean_square_angle(g: &CliffordGroup<f64>, theta: f64) -> f64 {
    let noisy = noisy_gateset(g, &NoiseModel::proctor(theta)).unwrap();
    g.gates()
        .iter()
        .zip(&noisy)
        .map(|(a, b)| effective_right_unitary_angle(a, b).unwrap().powi(2))
        .sum::<f64>()
        / g.len() as f64
}

fn proctor_series() -> Outcome {
    let t = Instant::now();
    let g = group();
    for theta in [0.01, 0.03] {
        let ratio = mean_square_angle(&g, theta) / (1.5 * theta * theta);
        if (ratio - 1.0).abs() > 0.01 {
            return Err(format!("compilation gate failed at theta = {theta}: ratio {ratio}"));
        }
    }
    let s = perturb_series(&g, &NoiseModel::proctor(0.0), 4).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    for n in 1..=3 {
        let v = s.coefficient(n).map_err(|e| e.to_string())?;
        if v.abs() >= 1e-9 {
            bad.push(format!("p{n} = {v:.2e}"));
        }
    }
    let p4 = s.coefficient(4).map_err(|e| e.to_string())?;
    if (p4 + 233.0 / 864.0).abs() >= 1e-6 {
        bad.push(format!("p4 = {p4}"));
    }
    let expected = [
        ("(1|M1^2|1)", 1.0 / 2.0),
        ("(1|M2|1)", -1.0 / 2.0),
        ("(1|M1 M2|1)", -1.0 / 36.0),
        ("(1|M2 M1|1)", -1.0 / 72.0),
        ("(1|M3|1)", 1.0 / 24.0),
        ("(1|M1^4|1)", 1.0 / 4.0),
        ("(1|M2^2|1)", 205.0 / 864.0),
        ("(1|M4|1)", 7.0 / 144.0),
        ("(1|M1 M3 + M3 M1|1)", -41.0 / 72.0),
        ("(1|M1^2 M2 + M2 M1^2 + M1 M2 M1|1)", -17.0 / 72.0),
    ];
    let mut worst: f64 = 0.0;
    for (k, v) in expected {
        let got = s.bracket(k).ok_or(format!("missing bracket {k}"))?;
        worst = worst.max((got - v).abs());
        if (got - v).abs() >= 1e-7 {
            bad.push(format!("{k} = {got}, want {v}"));
        }
    }
    if !bad.is_empty() {
        return Err(bad.join("; "));
    }
    within_time(
        t,
        Duration::from_secs(30),
        format!("p4 = {p4:.10}, worst bracket error {worst:.1e}"),
    )
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn proctor_scaling() -> Outcome {
    let g = group();
    let thetas: Vec<f64> = (0..8).map(|i| 0.02 * 10f64.powf(i as f64 / 7.0)).collect();
    let mut eps = Vec::new();
    let mut rs = Vec::new();
    for &th in &thetas {
        let noisy = noisy_gateset(&g, &NoiseModel::proctor(th)).unwrap();
        eps.push(gateset_report(g.gates(), &noisy).unwrap().epsilon);
        let (p, _) = pq(&g, &noisy);
        rs.push(rb_number(p, 2));
    }
    let se = loglog_slope(&thetas, &eps);
    let sr = loglog_slope(&thetas, &rs);
    let detail = format!("slope(epsilon) = {se:.4}, slope(r) = {sr:.4}");
    if (se - 2.0).abs() <= 0.05 && (sr - 4.0).abs() <= 0.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn case_one_series() -> Outcome {
    let g = group();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gates: Vec<ScaledRotation<f64>> = (0..24)
        .map(|_| ScaledRotation {
            axis: random_axis(&mut rng),
            scale: 0.2 + 1.8 * rng.random::<f64>(),
        })
        .collect();
    let mean_a2 = gates.iter().map(|r| r.scale * r.scale).sum::<f64>() / 24.0;
    let model = NoiseModel::PerGateUnitary { theta: 0.0, gates };
    let ms = taylor_coefficients(&g, &model, 2).map_err(|e| e.to_string())?;
    let one = ket_one_unital::<f64>(3);
    let m2 = (one.transpose() * &ms[2] * &one)[(0, 0)];
    let err2 = (m2 + mean_a2 / 3.0).abs();
    let theta = 0.01;
    let noisy = noisy_gateset(&g, &model.with_theta(theta).unwrap()).unwrap();
    let eps = gateset_report(g.gates(), &noisy).unwrap().epsilon;
    let want = mean_a2 * theta * theta / 6.0;
    let rel = (eps / want - 1.0).abs();
    let detail = format!("(1|M2|1) error {err2:.1e}; epsilon relative error {rel:.1e} at theta = 0.01");
    if err2 < 1e-9 && rel < 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixture_models(g: &CliffordGroup<f64>) -> Vec<(&'static str, Vec<Superop<f64>>)> {
    vec![
        (
            "depolarizing",
            noisy_gateset(g, &NoiseModel::pauli_lr([0.0; 3], [0.005; 3])).unwrap(),
        ),
        (
            "dephasing L and R",
            noisy_gateset(g, &NoiseModel::pauli_lr([0.0, 0.0, 0.01], [0.0, 0.0, 0.02])).unwrap(),
        ),
        ("primitive-compiled rotation", noisy_gateset(g, &NoiseModel::proctor(0.1)).unwrap()),
    ]
}

fn protocol_vs_spectrum() -> Outcome {
    let g = group();
    let psi0 = [0.0, 0.0, 1.0];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, noisy) in fixture_models(&g) {
        let m = build_m(g.gates(), &noisy).unwrap();
        let means = enumerated_means(&g, &noisy, &psi0, 3);
        let worst = means
            .iter()
            .enumerate()
            .map(|(i, v)| (v - predicted_survival(&m, &psi0, i + 1)).abs())
            .fold(0.0, f64::max);
        let cfg = RbConfig {
            lengths: Some(vec![1, 2, 4, 7, 12, 20, 33, 55, 100]),
            sequences_per_length: Some(200),
            seed: 10,
            mode: RbMode::Experiment,
            ..Default::default()
        };
        let run = run_rb(&g, &noisy, &cfg).map_err(|e| e.to_string())?;
        let v = validate_against_spectrum(&run, &m).map_err(|e| e.to_string())?;
        ok &= worst < 1e-12 && v.passed;
        lines.push(format!(
            "{name}: enumeration error {worst:.1e}, fitted p {:.6} vs spectral {:.6} (tol {:.1e})",
            v.fitted_p, v.spectral_p, v.tolerance
        ));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn bound_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut band = 0;
    let mut general = 0;
    let mut qubit = 0;
    let mut min_beta = f64::INFINITY;
    for _ in 0..500 {
        let l = random_weak_unital(&mut rng, 0.5);
        let r = random_weak_unital(&mut rng, 0.5);
        let rep = lgr_geometry(&l, &r).map_err(|e| e.to_string())?;
        let (alpha, beta) = (rep.alpha.unwrap(), rep.beta.unwrap());
        min_beta = min_beta.min(beta);
        let qa = rep.q / alpha;
        if qa < -1e-10 || qa > 0.5 * (1.0 + beta) + 1e-10 {
            band += 1;
        }
        let b = infidelity_bound(alpha, rep.r, 2);
        if rep.epsilon < b.general - 1e-10 {
            general += 1;
        }
        if rep.epsilon < 0.5 * rep.r - 1e-10 {
            qubit += 1;
        }
    }
    let detail = format!(
        "violations: band {band}, general bound {general}, qubit bound {qubit} (min beta {min_beta:.3})"
    );
    if band == 0 && general == 0 && qubit == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gauge_freedom() -> Outcome {
    let g = group();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_p: f64 = 0.0;
    let mut max_q: f64 = 0.0;
    for i in 0..50 {
        let noisy: Vec<Superop<f64>> = if i % 2 == 0 {
            let l = random_weak_unital(&mut rng, 0.3);
            let r = random_weak_unital(&mut rng, 0.3).compose(&amplitude_damping(0.02).unwrap()).unwrap();
            lr_gates(&g, &l, &r)
        } else {
            g.gates()
                .iter()
                .map(|x| x.compose(&random_weak_unital(&mut rng, 0.3)).unwrap())
                .collect()
        };
        let u = haar_unitary_channel(&mut rng);
        let c = same_p_different_q(g.gates(), &noisy, &u).map_err(|e| e.to_string())?;
        worst_p = worst_p.max(c.p_shift());
        max_q = max_q.max(c.q_shift());
    }
    let detail = format!("max |p - p'| = {worst_p:.1e}, max |q - q'| = {max_q:.2e}");
    if worst_p < 1e-10 && max_q > 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("ideal M equals |0)(0| + |1)(1|", ideal_m),
        ("Clifford twirl equals unitary twirl", two_design),
        ("Pauli-channel q - p relation", pauli_relation),
        ("conjugate unitaries give p = 1 with q < 1", conjugate_unitary),
        ("unital block norm at most 1 for qubit channels", alpha_bound),
        ("nonunital spectrum structure and perturbation bound", nonunital),
        ("primitive-compiled rotation series to fourth order", proctor_series),
        ("r ~ theta^4 while epsilon ~ theta^2", proctor_scaling),
        ("per-gate rotation second-order series", case_one_series),
        ("simulated protocol matches the spectrum", protocol_vs_spectrum),
        ("q band and infidelity lower bounds", bound_suite),
        ("unitary change of frame keeps p but moves q", gauge_freedom),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(d) => println!("PASS criterion {:>2}: {name} -- {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name} -- {d}", i + 1)
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Randomized and property-based invariant checks.

use decolab::coherence::{
    coherence_analytic_at_kappa, coherence_of_matrix, slit_density_matrix_at_kappa,
};
use decolab::engine::{Coupling, Evaluator, EvaluationMode, Normalization};
use decolab::model::{
    diffusion_coefficient, flight_time, load_preset, DetectorMode, DetectorOverlaps,
    DimensionlessInstance, ExperimentConfig, SourceAmplitudes,
};
use decolab::oracle::{diagonal_hat, init_density, Evolution, SolverParams};
use proptest::prelude::*;

struct XorShift(u64);

impl XorShift {
    fn new(seed: u64) -> Self {
        XorShift(seed.max(1))
    }
    fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }
    fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Random valid experiment: 2..=5 slits, random normalized amplitudes and
/// phases, random Gram-matrix detector overlaps.
fn random_config(rng: &mut XorShift, zero_phases: bool) -> ExperimentConfig {
    let n = 2 + (rng.next_u64() % 4) as usize;
    let mut cfg = load_preset("neon").unwrap().with_slit_count(n);
    cfg.slits.spacing = 6e-6 * (0.5 + rng.uniform());
    cfg.slits.width = cfg.slits.spacing * (0.03 + 0.1 * rng.uniform());
    let raw: Vec<f64> = (0..n).map(|_| 0.15 + rng.uniform()).collect();
    let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
    let phases = if zero_phases {
        vec![0.0; n]
    } else {
        (0..n).map(|_| 2.0 * std::f64::consts::PI * rng.uniform()).collect()
    };
    cfg.amplitudes = SourceAmplitudes {
        magnitudes: raw.iter().map(|c| c / norm).collect(),
        phases,
    };
    let dim = n + 2;
    let vecs: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| 0.05 + rng.uniform()).collect();
            let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let mut o = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            o[j * n + k] = vecs[j].iter().zip(&vecs[k]).map(|(a, b)| a * b).sum();
        }
    }
    for j in 0..n {
        o[j * n + j] = 1.0;
    }
    cfg.detector = DetectorOverlaps::from_matrix(n, o).unwrap();
    let center = cfg.slits.pattern_center();
    cfg.screen.x_min = center - 400e-6;
    cfg.screen.x_max = center + 400e-6;
    cfg
}

#[test]
fn exact_intensity_is_positive_for_gram_detectors() {
    // 10^4 randomized configs; the cross terms are a Hadamard product of
    // Gram matrices, so the intensity is a positive-semidefinite form and
    // any negative value beyond roundoff is a bug
    let mut rng = XorShift::new(0x9051_5eed);
    let mut min_scaled: f64 = 0.0;
    for _ in 0..10_000 {
        let cfg = random_config(&mut rng, false);
        let t = cfg.flight_time() * rng.uniform();
        let kappa = 4.0 * rng.uniform();
        let coupling = if t > 0.0 {
            Coupling::from_kappa(kappa, cfg.slits.spacing, t.max(1e-9 * cfg.flight_time())).unwrap()
        } else {
            Coupling::free()
        };
        let ev = Evaluator::with_coupling(&cfg, t, coupling, EvaluationMode::Exact).unwrap();
        let scale = 1.0 / (std::f64::consts::PI * ev.alpha() / 2.0).sqrt();
        let center = cfg.slits.pattern_center();
        let span = 4.0 * ev.alpha().sqrt() + 4.0 * cfg.slits.spacing;
        for i in 0..16 {
            let x = center + span * (i as f64 / 15.0 - 0.5);
            let v = ev.intensity(x);
            min_scaled = min_scaled.min(v / scale);
            assert!(v >= -1e-12 * scale, "negative intensity {v} (scale {scale})");
        }
    }
    println!("worst intensity / scale = {min_scaled:.2e}");
}

#[test]
fn matrix_and_analytic_coherence_agree_on_randomized_configs() {
    let mut rng = XorShift::new(0xa9ee);
    for _ in 0..1000 {
        let cfg = random_config(&mut rng, false);
        let kappa = 5.0 * rng.uniform();
        let rho = slit_density_matrix_at_kappa(&cfg, kappa, DetectorMode::Parallel).unwrap();
        let a = coherence_of_matrix(&rho).unwrap();
        let b = coherence_analytic_at_kappa(&cfg, kappa).unwrap();
        assert!((a - b).abs() <= 1e-12, "matrix {a} vs analytic {b}");
    }
}

#[test]
fn coherence_bounds_and_maximality() {
    let mut rng = XorShift::new(0xb0b);
    for _ in 0..1000 {
        let cfg = random_config(&mut rng, false);
        let kappa = 6.0 * rng.uniform();
        let c = coherence_analytic_at_kappa(&cfg, kappa).unwrap();
        assert!((-1e-15..=1.0 + 1e-12).contains(&c), "C = {c}");
    }
    // C(0) = 1 exactly for equal amplitudes, strictly below 1 otherwise
    for n in 2..=6 {
        let cfg = load_preset("c60").unwrap().with_slit_count(n);
        assert!((coherence_analytic_at_kappa(&cfg, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }
    let mut cfg = load_preset("c60").unwrap().with_slit_count(2);
    cfg.amplitudes = SourceAmplitudes::from_magnitudes(vec![0.8, 0.6]);
    let c = coherence_analytic_at_kappa(&cfg, 0.0).unwrap();
    assert!(c < 1.0 - 1e-3, "unequal amplitudes must not be maximally coherent: {c}");
}

#[test]
fn coherence_is_strictly_monotone_in_time_under_coupling() {
    let mut rng = XorShift::new(0xdeca);
    for _ in 0..50 {
        let cfg = random_config(&mut rng, false);
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let kappa = 3.0 * i as f64 / 99.0;
            let c = coherence_analytic_at_kappa(&cfg, kappa).unwrap();
            assert!(c < prev, "C must strictly decrease in t/tau_d");
            prev = c;
        }
    }
}

#[test]
fn pattern_is_symmetric_for_symmetric_sources() {
    for n in [2usize, 3, 4, 5] {
        let cfg = load_preset("neon").unwrap().with_slit_count(n);
        for kappa in [0.0, 0.7] {
            let ev = Evaluator::at_kappa(&cfg, kappa, EvaluationMode::Exact).unwrap();
            let center = cfg.slits.pattern_center();
            for i in 1..60 {
                let d = i as f64 * 7.3e-6;
                let a = ev.intensity(center + d);
                let b = ev.intensity(center - d);
                let rel = (a - b).abs() / a.abs().max(1e-300);
                assert!(rel < 1e-10, "n={n} kappa={kappa} d={d}: asymmetry {rel}");
            }
        }
    }
}

#[test]
fn farfield_cross_terms_decay_exactly_per_pair() {
    let cfg = load_preset("c60").unwrap();
    let kappa = 0.8;
    let ev0 = Evaluator::at_kappa(&cfg, 0.0, EvaluationMode::FarField).unwrap();
    let evk = Evaluator::at_kappa(&cfg, kappa, EvaluationMode::FarField).unwrap();
    let xs = cfg.screen.grid();
    for j in 1..=4usize {
        for k in (j + 1)..=4 {
            let djk = (k - j) as f64;
            let factor = (-djk * djk * kappa).exp();
            for &x in xs.iter().step_by(37) {
                let base = ev0.cross_pair(x, j, k);
                let decayed = evk.cross_pair(x, j, k);
                assert!(
                    (decayed - base * factor).abs() <= 1e-12 * base.abs().max(1e-300),
                    "pair ({j},{k}) at x={x}"
                );
            }
        }
    }
}

#[test]
fn pattern_evaluation_is_deterministic() {
    let cfg = load_preset("neon").unwrap();
    let ev = Evaluator::at_kappa(&cfg, 0.3, EvaluationMode::Exact).unwrap();
    let a = ev.pattern(Normalization::PeakNormalized).unwrap();
    let b = ev.pattern(Normalization::PeakNormalized).unwrap();
    for (x, y) in a.intensity.iter().zip(&b.intensity) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn oracle_convergence_order_in_dt_is_second_order() {
    // γ = 0 subcase: kinetic is spectral-exact and the decoherence
    // multiplier pointwise-exact, so the error is pure Strang splitting
    let inst = DimensionlessInstance::synthetic(
        2,
        0.15,
        10.0,
        0.0,
        1.5,
        DetectorOverlaps::parallel(2),
    );
    let t_final = 0.3;
    let params = SolverParams::for_instance(&inst, 256, t_final).unwrap();
    let mut diags: Vec<Vec<f64>> = Vec::new();
    for dt in [8e-3, 4e-3, 2e-3] {
        let mut grid = init_density(&inst, DetectorMode::Parallel, &params).unwrap();
        let mut ev = Evolution::new(&inst, &params).unwrap();
        ev.evolve(&mut grid, t_final, dt).unwrap();
        diags.push(diagonal_hat(&grid).1);
    }
    let l2 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let e1 = l2(&diags[0], &diags[1]);
    let e2 = l2(&diags[1], &diags[2]);
    let order = (e1 / e2).log2();
    assert!(order >= 1.8, "empirical order {order} (e1 = {e1:.3e}, e2 = {e2:.3e})");
}

proptest! {
    #[test]
    fn diffusion_is_linear_in_each_argument(
        m in 1e-27f64..1e-23,
        gamma in 0.0f64..1e6,
        temp in 0.0f64..1e4,
    ) {
        let d = diffusion_coefficient(m, gamma, temp).unwrap();
        let dm = diffusion_coefficient(2.0 * m, gamma, temp).unwrap();
        let dg = diffusion_coefficient(m, 2.0 * gamma, temp).unwrap();
        let dt = diffusion_coefficient(m, gamma, 2.0 * temp).unwrap();
        for doubled in [dm, dg, dt] {
            prop_assert!((doubled - 2.0 * d).abs() <= 1e-12 * d.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn flight_time_times_velocity_is_distance(
        lambda in 1e-13f64..1e-6,
        dist in 1e-4f64..10.0,
        m in 1e-27f64..1e-22,
    ) {
        let t = flight_time(lambda, dist, m).unwrap();
        let v = decolab::constants::PLANCK / (m * lambda);
        prop_assert!((t * v - dist).abs() <= 1e-12 * dist);
    }

    #[test]
    fn peak_normalized_patterns_stay_in_bounds(
        kappa in 0.0f64..4.0,
        slits in 2usize..6,
        seed in 0u64..1u64 << 32,
    ) {
        let mut rng = XorShift::new(seed);
        let mut cfg = random_config(&mut rng, true);
        cfg = cfg.with_slit_count(slits);
        let ev = Evaluator::at_kappa(&cfg, kappa, EvaluationMode::FarField).unwrap();
        let profile = ev.pattern(Normalization::PeakNormalized).unwrap();
        let max = profile.intensity.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = profile.intensity.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(max <= 1.0 + 1e-12);
        prop_assert!(min >= -1e-12);
        if kappa == 0.0 {
            prop_assert!((max - 1.0).abs() <= 1e-12);
        }
    }
}

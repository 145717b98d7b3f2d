mod common;

use common::qpsk;
use green_precoding::baseline::{BaselineKind, PrecoderKind};
use green_precoding::channel::{ChannelMatrix, NetworkConfig};
use green_precoding::harness::{
    draw_noise, qpsk_demodulate, run_cell, run_experiment, setup_channel, transmit_symbol,
    transmit_with_noise, ExperimentPlan, SolverSettings,
};
use green_precoding::precoder::precode_symbol;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_plan(threads: usize) -> ExperimentPlan {
    ExperimentPlan {
        network: NetworkConfig {
            num_aps: 12,
            num_ues: 4,
            ..Default::default()
        },
        solver: SolverSettings {
            lambdas: vec![1.0, 10.0, 25.0],
            ..Default::default()
        },
        bits_per_ue: 400,
        num_setups: 2,
        threads,
        master_seed: 42,
        ..Default::default()
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut a = run_experiment::<f64>(&small_plan(1)).unwrap();
    let mut b = run_experiment::<f64>(&small_plan(3)).unwrap();
    a.timings_s.clear();
    b.timings_s.clear();
    assert_eq!(a, b);
}

#[test]
fn warm_start_runs_are_deterministic_too() {
    let mut plan = small_plan(1);
    plan.solver.warm_start = true;
    let mut a = run_experiment::<f64>(&plan).unwrap();
    plan.threads = 4;
    let mut b = run_experiment::<f64>(&plan).unwrap();
    a.timings_s.clear();
    b.timings_s.clear();
    assert_eq!(a, b);
}

#[test]
fn result_invariants() {
    let plan = small_plan(0);
    let r = run_experiment::<f64>(&plan).unwrap();
    assert_eq!(r.precoders.len(), 5);
    assert_eq!(r.entries.len(), 3 * 5);
    assert_eq!(r.total_symbols, 2 * 3 * 200);
    assert_eq!(r.aligned_mask_violations, 0);
    assert_eq!(r.acr_count_violations, 0);
    for e in &r.entries {
        assert_eq!(e.per_ue_avg_ber.len(), 4);
        assert!(e.per_ue_avg_ber.iter().all(|b| (0.0..=1.0).contains(b)));
        let mut sorted = e.per_ue_avg_ber.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(sorted, e.per_ue_ranked_ber);
        let mean = e.per_ue_avg_ber.iter().sum::<f64>() / 4.0;
        assert!((mean - e.overall_avg_ber).abs() < 1e-15);
        assert_eq!(e.failures, 0);
    }
    for a in &r.activity {
        assert!((0.0..=12.0).contains(&a.avg_active_antennas));
    }
    // activity never increases along the λ grid in any setup
    for setup in 0..2 {
        let per: Vec<f64> = r
            .activity
            .iter()
            .map(|a| a.per_setup_active[setup])
            .collect();
        assert!(per.windows(2).all(|w| w[1] <= w[0]), "{per:?}");
    }
}

#[test]
fn noiseless_single_user_is_error_free() {
    let plan = ExperimentPlan {
        network: NetworkConfig {
            num_aps: 6,
            num_ues: 1,
            ..Default::default()
        },
        solver: SolverSettings {
            lambdas: vec![0.0],
            ..Default::default()
        },
        precoders: vec![PrecoderKind::Green],
        bits_per_ue: 2000,
        num_setups: 3,
        ..Default::default()
    };
    for setup in 0..plan.num_setups {
        let drawn = setup_channel::<f64>(&plan, setup).unwrap();
        let noiseless = ChannelMatrix::new(drawn.h.clone(), 0.0, 1);
        let tally = run_cell(&plan, &noiseless, setup, 0);
        assert_eq!(tally.symbols, 1000);
        assert_eq!(tally.errors[0], vec![0], "setup {setup}");
    }
}

#[test]
fn noise_is_calibrated() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sigma2 = 2.5;
    let draws = 100_000;
    let mut energy = 0.0;
    let mut mean = Complex::new(0.0, 0.0);
    for _ in 0..draws {
        let n = draw_noise::<f64, _>(1, sigma2, &mut rng)[0];
        energy += n.norm_sqr();
        mean += n;
    }
    let var = energy / draws as f64;
    assert!((var / sigma2 - 1.0).abs() < 0.03, "variance {var}");
    assert!((mean / draws as f64).norm() < 0.03);
}

#[test]
fn transmission_is_scaled_channel_output_plus_noise() {
    let plan = small_plan(1);
    let ch = setup_channel::<f64>(&plan, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = qpsk(4, &mut rng);
    let cfg = plan.solver.config_for(&ch, 1.0, 1.0);
    let (sol, _) = precode_symbol(&s, &ch, &cfg, 1e-3, 1.0, None).unwrap();
    let clean = transmit_with_noise(&sol, &ch, &[Complex::new(0.0, 0.0); 4]);
    let hx = ch.h.mul_vec(&sol.x);
    for (a, b) in clean.iter().zip(&hx) {
        assert!((a - b * sol.beta).norm() <= 1e-12 * b.norm().max(1.0));
    }
    // averaging over noise recovers βHx
    let mut acc = [Complex::new(0.0, 0.0); 4];
    let trials = 20_000;
    for _ in 0..trials {
        for (a, z) in acc.iter_mut().zip(transmit_symbol(&sol, &ch, &mut rng)) {
            *a += z;
        }
    }
    for (a, c) in acc.iter().zip(&clean) {
        let spread = sol.beta * (ch.sigma2 / trials as f64).sqrt();
        assert!((a / trials as f64 - c).norm() <= 5.0 * spread);
    }
}

#[test]
fn detection_ignores_positive_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let z = Complex::new(
            rng.random_range(-3.0..3.0f64),
            rng.random_range(-3.0..3.0f64),
        );
        let beta = 10f64.powf(rng.random_range(-6.0..6.0));
        assert_eq!(qpsk_demodulate(z * beta), qpsk_demodulate(z));
    }
}

#[test]
fn single_precision_run_completes() {
    let mut plan = small_plan(1);
    plan.precoders = vec![
        PrecoderKind::Green,
        PrecoderKind::Baseline(BaselineKind::Rzf1Aligned),
    ];
    let r = run_experiment::<f32>(&plan).unwrap();
    assert_eq!(r.entries.len(), 6);
    assert!(r
        .entries
        .iter()
        .all(|e| (0.0..=1.0).contains(&e.overall_avg_ber)));
}

#[test]
fn invalid_plan_rejected_before_running() {
    let mut plan = small_plan(1);
    plan.bits_per_ue = 401;
    assert!(run_experiment::<f64>(&plan).is_err());
}

mod common;

use approx::assert_relative_eq;
use common::{iid_channel, to_nalgebra};
use green_precoding::channel::{
    correlations_for_geometry, draw_channel, generate_channel, generate_geometry,
    spatial_correlation, wrapped_distance, ChannelMatrix, NetworkConfig,
};
use green_precoding::linalg::{lift_vec, unlift_vec, CMatrix};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_config(l: usize, n: usize, k: usize) -> NetworkConfig {
    NetworkConfig {
        num_aps: l,
        antennas_per_ap: n,
        num_ues: k,
        ..Default::default()
    }
}

#[test]
fn sample_covariance_matches_correlation() {
    let r = spatial_correlation::<f64>(4, 2.5, 0.4, -0.2, 0.26, 0.26);
    let corr = vec![vec![r.clone()]];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 100_000;
    let mut acc = vec![Complex::new(0.0, 0.0); 16];
    let mut energy = 0.0;
    for _ in 0..draws {
        let ch = draw_channel(&corr, 1.0, &mut rng);
        let h = ch.h.row(0);
        for i in 0..4 {
            energy += h[i].norm_sqr();
            for j in 0..4 {
                acc[i * 4 + j] += h[i] * h[j].conj();
            }
        }
    }
    let mut diff = 0.0;
    let mut norm = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let est = acc[i * 4 + j] / draws as f64;
            diff += (est - r[(i, j)]).norm_sqr();
            norm += r[(i, j)].norm_sqr();
        }
    }
    let rel = (diff / norm).sqrt();
    assert!(rel < 0.05, "Frobenius relative error {rel}");
    let trace: f64 = (0..4).map(|i| r[(i, i)].re).sum();
    assert_relative_eq!(energy / draws as f64, trace, max_relative = 0.02);
}

#[test]
fn largest_singular_value_matches_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (l, n, k) in [(8, 1, 4), (4, 2, 6), (16, 1, 3)] {
        let (_, ch) = generate_channel::<f64, _>(&small_config(l, n, k), &mut rng).unwrap();
        let sv = to_nalgebra(&ch.h_r).singular_values().max();
        assert_relative_eq!(ch.largest_singular_value_sq, sv * sv, max_relative = 1e-10);
    }
}

#[test]
fn lifted_norm_equals_complex_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = iid_channel(5, 9, &mut rng);
    let hc = nalgebra::DMatrix::from_fn(5, 9, |i, j| {
        let z = h[(i, j)];
        nalgebra::Complex::new(z.re, z.im)
    });
    let complex_norm = hc.singular_values().max();
    let lifted = to_nalgebra(&h.lift()).singular_values();
    assert_relative_eq!(lifted.max(), complex_norm, max_relative = 1e-9);
    // every singular value appears twice in the lift
    let mut sv: Vec<f64> = lifted.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    for pair in sv.chunks(2) {
        assert_relative_eq!(pair[0], pair[1], max_relative = 1e-9, epsilon = 1e-12);
    }
}

#[test]
fn lift_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = iid_channel(4, 7, &mut rng);
    let b = iid_channel(1, 7, &mut rng).row(0).to_vec();
    let hb = h.mul_vec(&b);
    let via_lift = unlift_vec(&h.lift().mul_vec(&lift_vec(&b)));
    for (x, y) in hb.iter().zip(&via_lift) {
        assert!((x - y).norm() <= 1e-12);
    }
}

#[test]
fn block_structure_of_generated_channel() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (_, ch) = generate_channel::<f64, _>(&small_config(6, 2, 3), &mut rng).unwrap();
    let (k, m) = (3, 12);
    for i in 0..k {
        for j in 0..m {
            let z = ch.h[(i, j)];
            assert_eq!(ch.h_r[(i, j)], z.re);
            assert_eq!(ch.h_r[(i, m + j)], -z.im);
            assert_eq!(ch.h_r[(k + i, j)], z.im);
            assert_eq!(ch.h_r[(k + i, m + j)], z.re);
        }
    }
}

#[test]
fn geometry_distances_bounded_and_reproducible() {
    let cfg = small_config(50, 1, 30);
    let bound = (2.0 * 500f64.powi(2) + 100.0).sqrt();
    let g1 = generate_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    let g2 = generate_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    assert_eq!(g1, g2);
    for row in &g1.distances {
        for &d in row {
            assert!((10.0..=bound + 1e-9).contains(&d));
        }
    }
    assert_eq!(
        wrapped_distance([0.0, 0.0], [500.0, 500.0], 1000.0, 10.0),
        bound
    );
}

#[test]
fn identical_seeds_identical_channels() {
    let cfg = small_config(10, 2, 4);
    let (_, a) = generate_channel::<f64, _>(&cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let (_, b) = generate_channel::<f64, _>(&cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let (_, c) = generate_channel::<f64, _>(&cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn normalization_sets_unit_noise() {
    let cfg = small_config(4, 1, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = generate_geometry(&cfg, &mut rng).unwrap();
    let (norm, s1) =
        correlations_for_geometry::<f64, _>(&g, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let raw_cfg = NetworkConfig {
        normalize_to_noise: false,
        ..cfg.clone()
    };
    let (raw, s2) =
        correlations_for_geometry::<f64, _>(&g, &raw_cfg, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
    assert_eq!(s1, 1.0);
    assert_relative_eq!(
        s2,
        green_precoding::channel::noise_variance(&cfg),
        max_relative = 1e-15
    );
    assert_relative_eq!(
        norm[1][2][(0, 0)].re * s2,
        raw[1][2][(0, 0)].re,
        max_relative = 1e-12
    );
}

#[test]
fn text_dump_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let h = iid_channel(3, 4, &mut rng);
    let ch = ChannelMatrix::new(h, 0.5, 2);
    let mut buf = Vec::new();
    ch.write_text(&mut buf).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("3 4\n"));
    let back = ChannelMatrix::<f64>::read_text(&buf[..], 0.5, 2).unwrap();
    assert_eq!(back, ch);
}

#[test]
fn single_precision_channel() {
    let cfg = small_config(8, 1, 4);
    let (_, a) = generate_channel::<f32, _>(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let (_, b) = generate_channel::<f64, _>(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let h32: &CMatrix<f32> = &a.h;
    for i in 0..4 {
        for j in 0..8 {
            let (x, y) = (h32[(i, j)], b.h[(i, j)]);
            assert!((x.re as f64 - y.re).abs() <= 1e-4 * y.norm().max(1.0));
        }
    }
}

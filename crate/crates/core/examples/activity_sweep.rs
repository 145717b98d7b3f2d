//! Average active antennas and solve time versus λ and iteration budget on
//! one default-size channel.
//!
//! `cargo run --release -p green-precoding --example activity_sweep -- [symbols] [seed]`

use std::time::Instant;

use green_precoding::harness::{qpsk_modulate, SolverSettings};
use green_precoding::{generate_channel, precode_symbol, NetworkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut args = std::env::args().skip(1);
    let symbols: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let cfg = NetworkConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, channel) = generate_channel::<f64, _>(&cfg, &mut rng).expect("valid default config");
    let m = channel.num_antennas();
    println!(
        "M = {m}, K = {}, smax2 = {:.4e}",
        channel.num_ues(),
        channel.largest_singular_value_sq
    );
    let streams: Vec<Vec<bool>> = (0..symbols)
        .map(|_| (0..2 * channel.num_ues()).map(|_| rng.random()).collect())
        .collect();
    for &(iters, psi) in &[
        (200, 1.0),
        (1000, 1.0),
        (2000, 1.0),
        (5000, 1.0),
        (2500, 1.9),
    ] {
        for lambda in [1.0, 15.0, 25.0] {
            let settings = SolverSettings {
                max_iters: iters,
                psi,
                ..Default::default()
            };
            let solver = settings.config_for(&channel, lambda, cfg.downlink_power_w);
            let started = Instant::now();
            let mut active = 0usize;
            let mut spent = 0usize;
            for bits in &streams {
                let s = qpsk_modulate::<f64>(bits);
                match precode_symbol(&s, &channel, &solver, 1e-3, cfg.downlink_power_w, None) {
                    Ok((sol, _)) => {
                        active += sol.active_count();
                        spent += sol.iterations;
                    }
                    Err(e) => println!("  symbol failed: {e}"),
                }
            }
            let per = started.elapsed().as_secs_f64() / symbols as f64;
            println!(
                "iters {iters:>5} psi {psi} lambda {lambda:>4}: active {:.1}% mean iters {:.0}  {:.2} ms/solve",
                100.0 * active as f64 / (symbols * m) as f64,
                spent as f64 / symbols as f64,
                per * 1e3
            );
        }
    }
}

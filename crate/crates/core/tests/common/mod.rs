#![allow(dead_code)]

use mixtoll::model::Network;
use mixtoll::rng::SeededRng;
use mixtoll::scenario::{generate_instance, InstanceGenSpec};

pub const CORPUS_SEED: u64 = 2024;
pub const CORPUS_SIZE: usize = 240;
const TARGET_KS: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.0];

/// Seeded parallel instances with at most 3 roads, 2 types and `k <= 3`.
pub fn corpus() -> Vec<(u64, Network)> {
    (0..CORPUS_SIZE)
        .map(|i| {
            let seed = SeededRng::substream(CORPUS_SEED, i as u64).next_u64();
            let n = 1 + i % 3;
            let m = 1 + (i / 3) % 2;
            let k = TARGET_KS[(i / 6) % TARGET_KS.len()];
            let net = generate_instance(&InstanceGenSpec::new(seed, n, m).with_target_k(k)).expect("valid spec");
            (seed, net)
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

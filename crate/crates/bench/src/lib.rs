//! Seeded inputs for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use textovision::{NetworkConfig, NetworkParams, Sentence, VisualFeature};

pub fn network(sizes: &[usize], seed: u64) -> NetworkParams {
    NetworkParams::init(&NetworkConfig::new(sizes.to_vec()).expect("valid sizes"), seed).expect("valid init")
}

/// Sparse non-negative count vectors, about `density` nonzero.
pub fn count_vectors(n: usize, dim: usize, density: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if rng.gen_bool(density) {
                        rng.gen_range(1..3) as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn features(prefix: &str, n: usize, dim: usize, seed: u64) -> Vec<VisualFeature> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            VisualFeature::new(
                format!("{prefix}{i}"),
                (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect(),
            )
        })
        .collect()
}

/// Caption-like sentences over a `vocab`-word alphabet of synthetic words.
pub fn sentences(n: usize, vocab: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(8..16);
            let words: Vec<String> = (0..len).map(|_| format!("w{}x", rng.gen_range(0..vocab))).collect();
            Sentence::new(format!("img{}#{}", i / 5, i % 5), words.join(" ")).expect("valid sentence")
        })
        .collect()
}

#![allow(dead_code)]

use cascade_core::model::{generate_network, GenerationConfig};
use cascade_core::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small, densely connected random instance.
pub fn small_instance(seed: u64, n: usize) -> Instance {
    let cfg = GenerationConfig {
        area: 40.0,
        ..GenerationConfig::new(seed, n)
    };
    Instance::new(generate_network(&cfg).unwrap()).unwrap()
}

/// `(instance, n_stages, budget)` triples with 6..=12 assets, 1..=3 stages
/// and a budget of 1..=3.
pub fn random_cases(seed: u64, count: usize) -> Vec<(Instance, usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(6..=12);
            let inst = small_instance(rng.gen(), n);
            (inst, rng.gen_range(1..=3), rng.gen_range(1..=3))
        })
        .collect()
}

pub fn all_attacks(n: usize, budget: usize) -> Vec<Vec<bool>> {
    use itertools::Itertools;
    (0..=budget.min(n))
        .flat_map(|k| (0..n).combinations(k))
        .map(|ids| {
            let mut x = vec![false; n];
            for i in ids {
                x[i] = true;
            }
            x
        })
        .collect()
}

#![allow(dead_code)]

use bernsvm::simdata::{generate, Scenario, ScenarioConfig};
use bernsvm::{standardize, Dataset, StandardizedDesign};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform features with a sparse linear rule and label noise.
pub fn toy(n: usize, p: usize, seed: u64) -> (Dataset, StandardizedDesign) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 2.0 - 1.0);
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let z = 1.5 * x[[i, 0]] - x[[i, 1 % p]] + 0.5 * x[[i, 2 % p]] + 0.6 * (rng.random::<f64>() - 0.5);
            if z >= 0.0 { 1.0 } else { -1.0 }
        })
        .collect();
    let data = Dataset::new(x, y).unwrap();
    let design = standardize(&data).unwrap();
    (data, design)
}

/// Correlated Gaussian design with the decaying-coefficient truth.
pub fn scenario1(n: usize, p: usize, seed: u64) -> (Dataset, StandardizedDesign) {
    let mut cfg = ScenarioConfig::new(Scenario::S1, n, p, seed);
    cfg.rho = 0.5;
    let data = generate(&cfg).unwrap().data;
    let design = standardize(&data).unwrap();
    (data, design)
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

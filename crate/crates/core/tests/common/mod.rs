#![allow(dead_code)]

pub mod oracle;

use nalgebra::DMatrix;
use ppcs_core::matrix::{BinaryIndexMatrix, EnvironmentMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(n: usize, t: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, t, |_, _| rng.sample(StandardNormal))
}

/// Sum of `r` Gaussian rank-1 terms.
pub fn low_rank(n: usize, t: usize, r: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng(seed);
    let l = gaussian(n, r, &mut rng);
    let rt = gaussian(t, r, &mut rng);
    l * rt.transpose()
}

pub fn em(m: DMatrix<f64>) -> EnvironmentMatrix {
    EnvironmentMatrix::new(m).unwrap()
}

/// Bernoulli(p) mask.
pub fn random_mask(n: usize, t: usize, p: f64, seed: u64) -> BinaryIndexMatrix {
    let mut rng = rng(seed);
    BinaryIndexMatrix::from_fn(n, t, |_, _| rng.random_bool(p))
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / a.norm()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Integration tests have no lib.rs beside them for proptest's regression files.
pub fn prop_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}

//! Helpers shared by the integration test targets: data builders and the
//! invariant checks, each a deterministic proptest run.

#![allow(dead_code)]

pub mod invariants;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sac_core::quantum::{exact_entropies, random_density_matrix, DensityMatrix};
use sac_core::RenyiDataset;

/// Exact `S_2..S_{k_max}` of a seeded random density matrix, with its von Neumann entropy.
pub fn exact_data(dim: usize, rank: usize, seed: u64, k_max: u32) -> (RenyiDataset, f64) {
    let rho = random_density_matrix(dim, rank, seed).unwrap();
    exact_from(&rho, k_max)
}

pub fn exact_from(rho: &DensityMatrix, k_max: u32) -> (RenyiDataset, f64) {
    let e = exact_entropies(rho, k_max).unwrap();
    (
        RenyiDataset::new(e.orders, e.renyi, None).unwrap(),
        e.von_neumann,
    )
}

/// Independent Gaussian noise of relative size `fraction`, with the matching diagonal covariance.
pub fn with_noise(data: &RenyiDataset, fraction: f64, seed: u64) -> RenyiDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd: Vec<f64> = data
        .values()
        .iter()
        .map(|s| fraction * s.abs().max(1e-3))
        .collect();
    let values = data
        .values()
        .iter()
        .zip(&sd)
        .map(|(s, e)| s + e * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        sd.len(),
        sd.iter().map(|e| e * e),
    ));
    RenyiDataset::new(data.orders().to_vec(), values, Some(cov)).unwrap()
}

/// Random symmetric positive-definite matrix `GGᵀ/n + floor·I`.
pub fn random_spd(n: usize, scale: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    (&g * g.transpose()) * (scale / n as f64) + DMatrix::identity(n, n) * (1e-3 * scale)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn percent_error(estimate: f64, exact: f64) -> f64 {
    100.0 * (estimate - exact).abs() / exact.abs()
}

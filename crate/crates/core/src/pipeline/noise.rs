use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::estimator::RenyiDataset;

/// Independent Gaussian noise with standard deviation `fraction · S_k` on each
/// order, with the matching diagonal covariance attached. Realization `r`
/// uses ChaCha stream `r` of `seed`.
pub fn cmd_add_noise(
    data: &RenyiDataset,
    fraction: f64,
    n_realizations: usize,
    seed: u64,
) -> Result<Vec<RenyiDataset>> {
    if !(fraction >= 0.0) || !fraction.is_finite() {
        return Err(Error::invalid(format!(
            "noise fraction {fraction} must be >= 0"
        )));
    }
    let sigma: Vec<f64> = data.values().iter().map(|s| (fraction * s).abs()).collect();
    let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        sigma.len(),
        sigma.iter().map(|s| s * s),
    ));
    (0..n_realizations)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let values = data
                .values()
                .iter()
                .zip(&sigma)
                .map(|(v, s)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + s * z
                })
                .collect();
            RenyiDataset::new(data.orders().to_vec(), values, Some(cov.clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_fraction_copies() {
        let d = RenyiDataset::exact(vec![1.0, 0.8, 0.7]).unwrap();
        let out = cmd_add_noise(&d, 0.0, 3, 1).unwrap();
        assert_eq!(out.len(), 3);
        for o in &out {
            assert_eq!(o.values(), d.values());
            assert_eq!(o.orders(), d.orders());
            assert_eq!(o.covariance().unwrap().shape(), (3, 3));
        }
        assert!(cmd_add_noise(&d, -0.1, 1, 0).is_err());
    }

    #[test]
    fn empirical_spread_matches_fraction() {
        let d = RenyiDataset::exact(vec![1.2, 1.0, 0.9, 0.85, 0.8]).unwrap();
        let out = cmd_add_noise(&d, 0.1, 200, 7).unwrap();
        for (i, s) in d.values().iter().enumerate() {
            let xs: Vec<f64> = out.iter().map(|o| o.values()[i]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            let want = 0.1 * s;
            assert!((var.sqrt() - want).abs() < 0.15 * want);
            assert!((out[0].covariance().unwrap()[(i, i)] - want * want).abs() < 1e-15);
        }
    }
}

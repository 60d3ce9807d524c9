use nalgebra::DMatrix;

use super::moments::{renyi_from_moments, tuple_sums, BatchShadowSet, MomentEstimates};
use crate::error::{Error, Result};
use crate::estimator::RenyiDataset;

/// Fraction of dropped leave-one-out replicates above which a result is unreliable.
pub const UNRELIABLE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct JackknifeResult {
    /// Bias-corrected means with the jackknife covariance.
    pub dataset: RenyiDataset,
    /// Plug-in Rényi values from all batches.
    pub plug_in: Vec<f64>,
    pub moments: MomentEstimates,
    /// Orders cut because a moment was not positive.
    pub dropped_orders: Vec<u32>,
    /// Excluded batches whose replicate had a non-positive moment.
    pub dropped_replicates: Vec<usize>,
    pub unreliable: bool,
}

/// Leave-one-batch-out jackknife of `Ŝ_2..Ŝ_{k_max}`.
///
/// All replicates come from a single pass over the subset lattice. With `n`
/// batches and `r` surviving replicates the covariance is
/// `(n-1)/r · Σ (Ŝ^(-b) - mean)(Ŝ^(-b) - mean)ᵀ`, the usual form when `r = n`.
pub fn jackknife(set: &BatchShadowSet, k_max: u32) -> Result<JackknifeResult> {
    let n = set.len();
    if (n as u32) < k_max + 1 {
        return Err(Error::invalid(format!(
            "jackknife up to order {k_max} needs at least {} batches, got {n}",
            k_max + 1
        )));
    }
    let sums = tuple_sums(set, k_max)?;
    let moments = MomentEstimates::from_sums(&sums, n);
    let table = renyi_from_moments(&moments);
    if table.orders.is_empty() {
        return Err(Error::DegenerateGeometry(
            "second moment is not positive; no Rényi value available".into(),
        ));
    }
    let kept = table.orders.len();

    let mut replicates = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    for b in 0..n {
        let rep = renyi_from_moments(&MomentEstimates::leave_out(&sums, n, b));
        if rep.orders.len() >= kept {
            replicates.push(rep.values[..kept].to_vec());
        } else {
            dropped.push(b);
        }
    }
    if replicates.is_empty() {
        return Err(Error::DegenerateGeometry(
            "every jackknife replicate was dropped".into(),
        ));
    }
    let r = replicates.len() as f64;
    let mean: Vec<f64> = (0..kept)
        .map(|i| replicates.iter().map(|v| v[i]).sum::<f64>() / r)
        .collect();
    let nf = n as f64;
    let corrected: Vec<f64> = table
        .values
        .iter()
        .zip(&mean)
        .map(|(s, m)| nf * s - (nf - 1.0) * m)
        .collect();
    let mut cov = DMatrix::<f64>::zeros(kept, kept);
    for v in &replicates {
        for i in 0..kept {
            for j in 0..kept {
                cov[(i, j)] += (v[i] - mean[i]) * (v[j] - mean[j]);
            }
        }
    }
    cov *= (nf - 1.0) / r;

    let dataset = RenyiDataset::new(table.orders.clone(), corrected, Some(cov))?;
    Ok(JackknifeResult {
        dataset,
        plug_in: table.values,
        moments,
        dropped_orders: table.dropped,
        unreliable: dropped.len() as f64 > UNRELIABLE_FRACTION * nf,
        dropped_replicates: dropped,
    })
}

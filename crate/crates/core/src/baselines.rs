//! Polynomial extrapolations of `S_k` to `k = 1`, used as comparison points.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimator::RenyiDataset;

pub const DEFAULT_LSQ_DEGREE: usize = 2;

fn to_unit(k: f64, lo: f64, hi: f64) -> f64 {
    (2.0 * k - lo - hi) / (hi - lo)
}

fn chebyshev_row(x: f64, n: usize) -> Vec<f64> {
    let mut t = vec![1.0; n];
    if n > 1 {
        t[1] = x;
    }
    for j in 2..n {
        t[j] = 2.0 * x * t[j - 1] - t[j - 2];
    }
    t
}

/// Interpolates every supplied order with a Chebyshev series on the affine
/// image of `[2, k_max]` and evaluates it at the image of `k = 1`.
pub fn chebyshev_extrapolate(data: &RenyiDataset) -> Result<f64> {
    let n = data.len();
    if n < 2 {
        return Err(Error::invalid(
            "Chebyshev extrapolation needs at least two orders",
        ));
    }
    let lo = data.orders()[0] as f64;
    let hi = data.k_max() as f64;
    let v = DMatrix::from_fn(n, n, |i, j| {
        chebyshev_row(to_unit(data.orders()[i] as f64, lo, hi), n)[j]
    });
    let coef = v
        .lu()
        .solve(&DVector::from_column_slice(data.values()))
        .ok_or(Error::RankDeficient)?;
    let t = chebyshev_row(to_unit(1.0, lo, hi), n);
    Ok(coef.iter().zip(&t).map(|(c, t)| c * t).sum())
}

/// Least-squares polynomial of the given degree in `k`, evaluated at `k = 1`.
/// Fitted in the same scaled variable as the Chebyshev route. Degrees run
/// up to `k_max - 2`, where the fit interpolates.
pub fn least_squares_poly(data: &RenyiDataset, degree: usize) -> Result<f64> {
    let n = data.len();
    if degree < 1 || degree + 1 > n {
        return Err(Error::invalid(format!(
            "degree {degree} needs 1 <= degree <= {}",
            n as i64 - 1
        )));
    }
    let lo = data.orders()[0] as f64;
    let hi = data.k_max() as f64;
    let x = DMatrix::from_fn(n, degree + 1, |i, j| {
        to_unit(data.orders()[i] as f64, lo, hi).powi(j as i32)
    });
    let svd = x.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-12 * smax {
        return Err(Error::RankDeficient);
    }
    let coef = svd
        .solve(&DVector::from_column_slice(data.values()), 0.0)
        .map_err(|_| Error::RankDeficient)?;
    let x1 = to_unit(1.0, lo, hi);
    Ok(coef
        .iter()
        .enumerate()
        .map(|(j, c)| c * x1.powi(j as i32))
        .sum())
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::baselines::{chebyshev_extrapolate, least_squares_poly};
use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimatorOptions, RenyiDataset, SacEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sac,
    Chebyshev,
    Lsq,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Sac, Method::Chebyshev, Method::Lsq];

    pub fn label(self) -> &'static str {
        match self {
            Method::Sac => "sac",
            Method::Chebyshev => "chebyshev",
            Method::Lsq => "lsq",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodEstimate {
    pub method: Method,
    /// Von Neumann entropy estimate in bits.
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sac: Option<SacEstimate>,
}

/// One estimate. SAC takes the noisy path when `data` carries a covariance.
pub fn cmd_estimate(
    data: &RenyiDataset,
    method: Method,
    opts: &EstimatorOptions,
    lsq_degree: usize,
) -> Result<MethodEstimate> {
    if data.k_max() < 3 {
        return Err(Error::invalid("estimation needs k_max >= 3"));
    }
    Ok(match method {
        Method::Sac => {
            let e = estimate(data, opts)?;
            MethodEstimate {
                method,
                value: e.alpha_min,
                sac: Some(e),
            }
        }
        Method::Chebyshev => MethodEstimate {
            method,
            value: chebyshev_extrapolate(data)?,
            sac: None,
        },
        Method::Lsq => MethodEstimate {
            method,
            value: least_squares_poly(data, lsq_degree)?,
            sac: None,
        },
    })
}

/// Mean of several experiments over their common orders.
///
/// The covariance is that of the mean, estimated from the scatter of the
/// members: their sample covariance divided by the group size. The members'
/// own covariances are only used for a group of one.
pub fn combine_group(group: &[RenyiDataset]) -> Result<RenyiDataset> {
    let first = group.first().ok_or_else(|| Error::invalid("empty group"))?;
    let len = group
        .iter()
        .map(RenyiDataset::len)
        .min()
        .expect("non-empty");
    let orders = &first.orders()[..len];
    if group.iter().any(|d| &d.orders()[..len] != orders) {
        return Err(Error::invalid("group members disagree on their orders"));
    }
    if group.len() == 1 {
        return first.truncated(orders[len - 1]);
    }
    let g = group.len() as f64;
    let values: Vec<f64> = (0..len)
        .map(|i| group.iter().map(|d| d.values()[i]).sum::<f64>() / g)
        .collect();
    let mut cov = DMatrix::zeros(len, len);
    for d in group {
        let r = DVector::from_iterator(len, (0..len).map(|i| d.values()[i] - values[i]));
        cov += &r * r.transpose();
    }
    cov /= (g - 1.0) * g;
    RenyiDataset::new(orders.to_vec(), values, Some(cov))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedEstimate {
    pub method: Method,
    pub group_size: usize,
    /// One estimate per complete group, in input order.
    pub estimates: Vec<f64>,
    pub failures: usize,
    pub mean: f64,
    /// Sample standard deviation of the group estimates.
    pub spread: f64,
}

/// Splits `datasets` into consecutive groups of `group_size`, estimates each
/// combined group and reports the mean and spread. A trailing partial group is
/// ignored.
pub fn grouped_estimate(
    datasets: &[RenyiDataset],
    group_size: usize,
    method: Method,
    opts: &EstimatorOptions,
    lsq_degree: usize,
) -> Result<GroupedEstimate> {
    if group_size == 0 || group_size > datasets.len() {
        return Err(Error::invalid(format!(
            "group size {group_size} must lie in [1, {}]",
            datasets.len()
        )));
    }
    let mut estimates = Vec::new();
    let mut failures = 0;
    let mut last_err = None;
    for group in datasets.chunks_exact(group_size) {
        match combine_group(group).and_then(|d| cmd_estimate(&d, method, opts, lsq_degree)) {
            Ok(e) => estimates.push(e.value),
            Err(e) => {
                failures += 1;
                last_err = Some(e);
            }
        }
    }
    if estimates.is_empty() {
        return Err(last_err.expect("at least one group"));
    }
    let (mean, spread) = mean_std(&estimates);
    Ok(GroupedEstimate {
        method,
        group_size,
        estimates,
        failures,
        mean,
        spread,
    })
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::ConformalParams;
    use crate::estimator::estimate_noiseless;

    #[test]
    fn flat_data_every_method() {
        let d = RenyiDataset::exact(vec![1.5; 5]).unwrap();
        for m in Method::ALL {
            let e = cmd_estimate(&d, m, &EstimatorOptions::default(), 2).unwrap();
            assert!((e.value - 1.5).abs() < 1e-9, "{m:?}");
        }
    }

    #[test]
    fn sac_dispatch_matches_direct_call() {
        let d = RenyiDataset::exact(vec![1.1, 0.95, 0.9, 0.87, 0.85]).unwrap();
        let via = cmd_estimate(&d, Method::Sac, &EstimatorOptions::default(), 2).unwrap();
        let direct = estimate_noiseless(&d, &ConformalParams::default()).unwrap();
        assert_eq!(via.value, direct.alpha_min);
    }

    #[test]
    fn combined_group_covariance_is_of_the_mean() {
        let c = DMatrix::from_diagonal_element(3, 3, 0.04);
        let a = RenyiDataset::new(vec![2, 3, 4], vec![1.0, 0.9, 0.8], Some(c.clone())).unwrap();
        let b = RenyiDataset::new(vec![2, 3, 4], vec![1.2, 1.0, 0.8], Some(c.clone())).unwrap();
        let g = combine_group(&[a.clone(), b]).unwrap();
        assert!((g.values()[0] - 1.1).abs() < 1e-15);
        // sample variances 0.02 and 0.005, halved for the mean
        let cov = g.covariance().unwrap();
        assert!((cov[(0, 0)] - 0.01).abs() < 1e-14);
        assert!((cov[(1, 1)] - 0.0025).abs() < 1e-14);
        assert!((cov[(0, 1)] - 0.005).abs() < 1e-14);
        assert_eq!(cov[(2, 2)], 0.0);
        assert_eq!(combine_group(std::slice::from_ref(&a)).unwrap(), a);

        let exact = RenyiDataset::exact(vec![1.0, 0.9]).unwrap();
        let same = combine_group(&[exact.clone(), exact]).unwrap();
        assert_eq!(same.covariance().unwrap().amax(), 0.0);
    }

    #[test]
    fn grouping_counts() {
        let ds: Vec<_> = (0..7)
            .map(|i| RenyiDataset::exact(vec![1.0 + 0.01 * i as f64; 5]).unwrap())
            .collect();
        let g =
            grouped_estimate(&ds, 3, Method::Chebyshev, &EstimatorOptions::default(), 2).unwrap();
        assert_eq!(g.estimates.len(), 2);
        assert!((g.estimates[0] - 1.01).abs() < 1e-9);
        assert!((g.mean - 1.025).abs() < 1e-9);
        assert!(grouped_estimate(&ds, 8, Method::Sac, &EstimatorOptions::default(), 2).is_err());
    }
}

use nalgebra::DVector;

use super::{discrepancy_values, EstimatorOptions, Regime, RenyiDataset, SacEstimate};
use crate::conformal::{map_orders, ConformalParams, W0Rule};
use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix_dilog, kernel_matrix_quadrature, KernelMatrix, KernelMethod};

const SCAN_HALF_WIDTH: f64 = 1.0;
const SCAN_POINTS: usize = 21;

/// Kernel over orders `3..=k_max` with the subtraction point on order 2.
pub fn noiseless_kernel(data: &RenyiDataset, opts: &EstimatorOptions) -> Result<KernelMatrix> {
    if data.len() < 2 {
        return Err(Error::invalid(
            "closed-form estimate needs at least two orders",
        ));
    }
    let points = map_orders(data.orders(), &opts.params, W0Rule::FirstPoint)?;
    let first = [data.orders()[0]];
    match opts.kernel {
        KernelMethod::Dilogarithm => kernel_matrix_dilog(&points, &first),
        KernelMethod::Quadrature => kernel_matrix_quadrature(&points, &first),
    }
}

/// Subtracted data `u_i = d_i(0) - d_2(0)` and direction `v_i = ∂(d_i - d_2)/∂(-α)`,
/// so that `d'_i(α) = u_i - α v_i` over orders `3..=k_max`.
fn subtracted(data: &RenyiDataset) -> (DVector<f64>, DVector<f64>) {
    let d0 = discrepancy_values(data.values(), data.orders(), 0.0);
    let ones = vec![1.0; data.len()];
    let v_all = discrepancy_values(&ones, data.orders(), 0.0);
    let u = DVector::from_iterator(d0.len() - 1, d0[1..].iter().map(|x| x - d0[0]));
    let v = DVector::from_iterator(v_all.len() - 1, v_all[1..].iter().map(|x| x - v_all[0]));
    (u, v)
}

/// Closed-form minimizer `α = uᵀA⁻¹v / vᵀA⁻¹v` for a given kernel.
pub fn closed_form_alpha(data: &RenyiDataset, kernel: &KernelMatrix) -> Result<f64> {
    let (u, v) = subtracted(data);
    let ainv_v = kernel.solve(&v)?;
    let den = v.dot(&ainv_v);
    if !(den.abs() >= 1e-14) {
        return Err(Error::DegenerateGeometry(format!(
            "closed-form denominator {den:e} vanishes"
        )));
    }
    Ok(u.dot(&ainv_v) / den)
}

fn delta2(kernel: &KernelMatrix, u: &DVector<f64>, v: &DVector<f64>, alpha: f64) -> Result<f64> {
    let r = u - v * alpha;
    Ok(kernel.inverse_form(&r, &r)?.max(0.0))
}

pub fn estimate_noiseless(data: &RenyiDataset, params: &ConformalParams) -> Result<SacEstimate> {
    estimate_noiseless_with(data, &EstimatorOptions::with_params(*params))
}

/// Closed-form estimate; any covariance on `data` is ignored.
pub fn estimate_noiseless_with(
    data: &RenyiDataset,
    opts: &EstimatorOptions,
) -> Result<SacEstimate> {
    if data.len() < 2 || data.k_max() < 3 {
        return Err(Error::invalid("closed-form estimate needs k_max >= 3"));
    }
    let kernel = noiseless_kernel(data, opts)?;
    let alpha = closed_form_alpha(data, &kernel)?;
    let (u, v) = subtracted(data);
    let alpha_scan = (0..SCAN_POINTS)
        .map(|i| {
            let a = alpha - SCAN_HALF_WIDTH
                + 2.0 * SCAN_HALF_WIDTH * i as f64 / (SCAN_POINTS - 1) as f64;
            delta2(&kernel, &u, &v, a).map(|d| (a, d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SacEstimate {
        alpha_min: alpha,
        delta2_min: delta2(&kernel, &u, &v, alpha)?,
        alpha_scan,
        regime: Regime::Noiseless,
        solver: None,
        kernel_condition: kernel.condition_number(),
        multimodal: false,
        bracket_widenings: 0,
    })
}

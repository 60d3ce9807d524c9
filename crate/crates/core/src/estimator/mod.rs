//! The continuation estimator: closed form for exact data, χ²-constrained
//! minimal norm for data with a covariance matrix.

mod dataset;
mod noiseless;
mod noisy;
mod optimize;

use serde::Serialize;

pub use dataset::RenyiDataset;
pub use noiseless::{
    closed_form_alpha, estimate_noiseless, estimate_noiseless_with, noiseless_kernel,
};
pub use noisy::{
    chi2, estimate_noisy, estimate_noisy_with, regularize_covariance, solve_constrained,
    ConstrainedSolution, NoisyProblem, COVARIANCE_FLOOR,
};

use crate::conformal::{ConformalParams, W0Rule};
use crate::error::Result;
use crate::kernel::KernelMethod;

/// Tuning knobs shared by both estimator paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    pub params: ConformalParams,
    /// χ² radius of the admissible data ellipsoid; `None` means `k_max`.
    pub chi2_0: Option<f64>,
    pub kernel: KernelMethod,
    /// Subtraction point for the noisy path.
    pub noisy_w0: W0Rule,
    /// Coarse α grid size for the noisy path.
    pub scan_points: usize,
    /// Golden-section bracket width at which the noisy α search stops.
    pub alpha_tol: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            params: ConformalParams::default(),
            chi2_0: None,
            kernel: KernelMethod::Dilogarithm,
            noisy_w0: W0Rule::Midpoint,
            scan_points: 61,
            alpha_tol: 1e-6,
        }
    }
}

impl EstimatorOptions {
    pub fn with_params(params: ConformalParams) -> Self {
        Self {
            params,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Closed form on exact data.
    Noiseless,
    /// χ² constraint active with a positive Lagrange multiplier.
    Constrained,
    /// A constant function already fits inside the χ² ellipsoid for some α;
    /// the reported α is the χ²-weighted fit and the minimal norm is zero.
    ConstraintInactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub lambda: f64,
    pub y0: f64,
    pub chi2_achieved: f64,
    pub iterations: usize,
    /// False when χ²(λ) failed the per-solve monotonicity check and the
    /// root was located by a dense grid instead.
    pub monotone: bool,
}

/// Result of one continuation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SacEstimate {
    /// Von Neumann entropy estimate in bits.
    pub alpha_min: f64,
    pub delta2_min: f64,
    pub alpha_scan: Vec<(f64, f64)>,
    pub regime: Regime,
    pub solver: Option<SolverDiagnostics>,
    pub kernel_condition: f64,
    /// More than one local minimum on the coarse α grid.
    pub multimodal: bool,
    /// Number of times the α bracket had to be widened.
    pub bracket_widenings: u32,
}

/// `d_i = (S_i - α) / (z_i - 1)`.
pub fn discrepancy_values(values: &[f64], orders: &[u32], alpha: f64) -> Vec<f64> {
    values
        .iter()
        .zip(orders)
        .map(|(s, &z)| (s - alpha) / (z as f64 - 1.0))
        .collect()
}

/// Noisy path when a covariance is attached, closed form otherwise.
pub fn estimate(data: &RenyiDataset, opts: &EstimatorOptions) -> Result<SacEstimate> {
    if data.covariance().is_some() {
        estimate_noisy_with(data, opts)
    } else {
        estimate_noiseless_with(data, opts)
    }
}

use super::DensityMatrix;
use crate::error::{Error, Result};

/// Eigenvalues below this are treated as exact zeros.
pub const SPECTRAL_FLOOR: f64 = 1e-14;

fn support(spectrum: &[f64]) -> Result<Vec<f64>> {
    let kept: Vec<f64> = spectrum
        .iter()
        .copied()
        .filter(|&p| p >= SPECTRAL_FLOOR)
        .collect();
    if kept.is_empty() {
        return Err(Error::ZeroState);
    }
    Ok(kept)
}

/// Rényi entropy in bits of a probability spectrum, `log2(Σ p^k) / (1 - k)`.
pub fn renyi_from_spectrum(spectrum: &[f64], k: f64) -> Result<f64> {
    if !(k > 0.0) || (k - 1.0).abs() < 1e-15 {
        return Err(Error::invalid(format!(
            "Rényi order {k} must be positive and != 1"
        )));
    }
    let kept = support(spectrum)?;
    let moment: f64 = kept.iter().map(|p| p.powf(k)).sum();
    // `+ 0.0` turns a pure state's -0 into 0
    Ok(moment.log2() / (1.0 - k) + 0.0)
}

/// Shannon entropy in bits of a probability spectrum with `0 log 0 = 0`.
pub fn von_neumann_from_spectrum(spectrum: &[f64]) -> Result<f64> {
    let kept = support(spectrum)?;
    Ok(0.0 - kept.iter().map(|p| p * p.log2()).sum::<f64>())
}

pub fn renyi_entropy(rho: &DensityMatrix, k: f64) -> Result<f64> {
    renyi_from_spectrum(&rho.eigenvalues(), k)
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    von_neumann_from_spectrum(&rho.eigenvalues())
}

/// Exact reference entropies of one state: `S_vN` plus integer orders `2..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactEntropies {
    pub von_neumann: f64,
    pub orders: Vec<u32>,
    pub renyi: Vec<f64>,
}

pub fn exact_entropies(rho: &DensityMatrix, k_max: u32) -> Result<ExactEntropies> {
    let spectrum = rho.eigenvalues();
    let orders: Vec<u32> = (2..=k_max).collect();
    let renyi = orders
        .iter()
        .map(|&k| renyi_from_spectrum(&spectrum, k as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExactEntropies {
        von_neumann: von_neumann_from_spectrum(&spectrum)?,
        orders,
        renyi,
    })
}

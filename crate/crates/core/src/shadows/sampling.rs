use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clifford::{clifford_group, inverse_factors, CLIFFORD_COUNT};
use crate::error::{Error, Result};
use crate::quantum::{partial_trace, DensityMatrix, PureState, C64};

/// Largest subsystem handled with dense shadow matrices.
pub const MAX_SHADOW_QUBITS: usize = 6;

/// One measurement round: local Cliffords and the bitstring histogram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadowRecord {
    pub round: usize,
    /// Index into [`clifford_group`] for each subsystem qubit, first qubit first.
    pub cliffords: Vec<u8>,
    /// `(bitstring, count)` pairs sorted by bitstring; the first qubit is the
    /// most significant bit.
    pub counts: Vec<(u32, u32)>,
}

impl ShadowRecord {
    pub fn n_qubits(&self) -> usize {
        self.cliffords.len()
    }

    pub fn shots(&self) -> u32 {
        self.counts.iter().map(|c| c.1).sum()
    }

    /// Round-averaged shadow `(1/N_m) Σ_b ⊗_i (3 U_i†|b_i⟩⟨b_i|U_i − I)`.
    pub fn shadow(&self) -> DMatrix<C64> {
        let l = self.n_qubits();
        let table = inverse_factors();
        let dim = 1usize << l;
        let shots = self.shots() as f64;
        let mut out = DMatrix::<C64>::zeros(dim, dim);
        for &(bits, count) in &self.counts {
            let mut prod = DMatrix::from_element(1, 1, C64::new(count as f64 / shots, 0.0));
            for (q, &c) in self.cliffords.iter().enumerate() {
                let b = ((bits >> (l - 1 - q)) & 1) as usize;
                let f = &table[c as usize][b];
                prod = prod.kronecker(f);
            }
            out += prod;
        }
        out
    }
}

fn local_unitary(cliffords: &[u8]) -> DMatrix<C64> {
    let group = clifford_group();
    cliffords.iter().fold(DMatrix::identity(1, 1), |acc, &c| {
        let g = &group[c as usize];
        acc.kronecker(g)
    })
}

fn round(rho: &DMatrix<C64>, l: usize, n_m: u32, seed: u64, index: usize) -> Result<ShadowRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let cliffords: Vec<u8> = (0..l)
        .map(|_| rng.random_range(0..CLIFFORD_COUNT as u8))
        .collect();
    let u = local_unitary(&cliffords);
    let rotated = &u * rho * u.adjoint();
    let probs: Vec<f64> = rotated.diagonal().iter().map(|z| z.re.max(0.0)).collect();
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::invalid(format!("outcome distribution: {e}")))?;
    let mut hist = vec![0u32; probs.len()];
    for _ in 0..n_m {
        hist[rng.sample(&dist)] += 1;
    }
    let counts = hist
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(b, c)| (b as u32, c))
        .collect();
    Ok(ShadowRecord {
        round: index,
        cliffords,
        counts,
    })
}

/// `n_u` rounds of local random Clifford measurements with `n_m` shots each
/// on a subsystem state. Round `r` draws from ChaCha stream `r` of `seed`,
/// so the output does not depend on thread scheduling.
pub fn sample_density(
    rho: &DensityMatrix,
    n_u: usize,
    n_m: u32,
    seed: u64,
) -> Result<Vec<ShadowRecord>> {
    let l = rho
        .n_qubits()
        .ok_or_else(|| Error::invalid("shadow sampling needs a qubit density matrix"))?;
    if l == 0 || l > MAX_SHADOW_QUBITS {
        return Err(Error::invalid(format!(
            "subsystem of {l} qubits outside [1, {MAX_SHADOW_QUBITS}]"
        )));
    }
    if n_u == 0 || n_m == 0 {
        return Err(Error::invalid("N_u and N_m must be positive"));
    }
    let m = rho.matrix();
    (0..n_u)
        .into_par_iter()
        .map(|r| round(m, l, n_m, seed, r))
        .collect()
}

/// Reduces `state` to `subsystem` and samples shadow records from it.
pub fn sample_shadows(
    state: &PureState,
    subsystem: &[usize],
    n_u: usize,
    n_m: u32,
    seed: u64,
) -> Result<Vec<ShadowRecord>> {
    if subsystem.len() > MAX_SHADOW_QUBITS {
        return Err(Error::invalid(format!(
            "subsystem of {} qubits exceeds {MAX_SHADOW_QUBITS}",
            subsystem.len()
        )));
    }
    let rho = partial_trace(state, subsystem)?;
    sample_density(&rho, n_u, n_m, seed)
}

/// Shadow matrices for each record, in record order.
pub fn shadow_matrices(records: &[ShadowRecord]) -> Vec<DMatrix<C64>> {
    records.par_iter().map(ShadowRecord::shadow).collect()
}

//! Randomized measurements with local Clifford unitaries, batch shadows,
//! U-statistic moment estimates and jackknife Rényi datasets.

mod clifford;
mod jackknife;
mod moments;
mod sampling;

pub use clifford::{clifford_group, Gate, CLIFFORD_COUNT};
pub use jackknife::{jackknife, JackknifeResult, UNRELIABLE_FRACTION};
pub use moments::{
    batch_shadows, estimate_moments, renyi_from_moments, u_statistic_moment, BatchShadowSet,
    MomentEstimates, RenyiTable, MAX_BATCHES,
};
pub use sampling::{
    sample_density, sample_shadows, shadow_matrices, ShadowRecord, MAX_SHADOW_QUBITS,
};

/// Shadow protocol sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ShadowParams {
    pub n_u: usize,
    pub n_m: u32,
    pub n_b: usize,
}

impl Default for ShadowParams {
    fn default() -> Self {
        Self {
            n_u: 500,
            n_m: 150,
            n_b: 12,
        }
    }
}

/// Samples, batches and jackknifes one shadow experiment on `state` reduced to `subsystem`.
pub fn shadow_experiment(
    state: &crate::quantum::PureState,
    subsystem: &[usize],
    params: ShadowParams,
    k_max: u32,
    seed: u64,
) -> crate::Result<JackknifeResult> {
    let records = sample_shadows(state, subsystem, params.n_u, params.n_m, seed)?;
    let set = BatchShadowSet::from_records(&records, params.n_b)?;
    jackknife(&set, k_max)
}
